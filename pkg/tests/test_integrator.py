import math

import numpy as np
import pytest

from hco.integrator import (EventKind, IntegratorSettings, StepSizeUnderflow, detect_events,
                            events_to_csv, integrate, run_until)
from hco.model import TWO_PI, Params, TorusState, circ_diff, parameter_mirror, state_mirror

FIG_ANTI = Params(gamma=0.7, d=1.0, k=50.0, alpha=1.5 * math.pi, delta=1.5 * math.pi)


def test_settings_validation():
    with pytest.raises(ValueError):
        IntegratorSettings(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorSettings(max_step=-1.0)
    assert IntegratorSettings().step_limit(Params(k=50.0)) == pytest.approx(0.004)


def test_t_end_must_be_positive():
    with pytest.raises(ValueError):
        integrate((0.0, 0.0), FIG_ANTI, t_end=0.0)


def test_rest_state_is_fixed():
    p = Params(d=0.0)
    a = math.asin(0.7)
    tr = integrate((a, a), p, t_end=50.0)
    assert np.max(np.abs(tr.lifts - a)) < 1e-9
    assert detect_events(tr, EventKind.SPIKE_1) == []


def test_bare_rotator_period():
    p = Params(gamma=1.2, d=0.0)
    period = TWO_PI / math.sqrt(1.2 ** 2 - 1.0)
    tr = integrate((0.0, 1.0), p, t_end=5.5 * period)
    spikes = [e.time for e in detect_events(tr, EventKind.SPIKE_1)]
    assert len(spikes) == 5
    assert np.allclose(np.diff(spikes), period, atol=1e-6)
    end = tr.sample(tr.times[0] + period)[0]
    assert end[0] == pytest.approx(TWO_PI, abs=1e-6)


def test_times_increasing_and_lifts_continuous():
    tr = integrate((0.0, math.pi), FIG_ANTI, t_end=40.0)
    assert np.all(np.diff(tr.times) > 0)
    assert np.max(np.abs(np.diff(tr.lifts, axis=0))) < math.pi
    assert np.allclose(tr.phases, np.mod(tr.lifts, TWO_PI))


def test_lifts_monotone_when_field_positive():
    # gamma > 1 with excitatory coupling: both phases always advance
    tr = integrate((0.3, 2.0), Params(gamma=1.1, d=0.5), t_end=30.0)
    assert np.all(np.diff(tr.lifts, axis=0) > 0)


def test_deterministic():
    a = integrate((0.1, 2.0), FIG_ANTI, t_end=20.0)
    b = integrate((0.1, 2.0), FIG_ANTI, t_end=20.0)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.lifts, b.lifts)


def test_diagonal_is_invariant():
    p = Params(alpha=math.pi / 4, delta=math.pi, d=0.31)
    tr = integrate((1.0, 1.0), p, t_end=60.0)
    assert np.max(np.abs(tr.lifts[:, 0] - tr.lifts[:, 1])) < 1e-8


def test_swap_equivariance_of_flow():
    a = integrate((0.4, 2.5), FIG_ANTI, t_end=30.0)
    b = integrate((2.5, 0.4), FIG_ANTI, t_end=30.0)
    ts = np.linspace(0, 30, 301)
    assert np.max(np.abs(a.sample(ts) - b.sample(ts)[:, ::-1])) < 1e-8


def test_time_reversal_conjugacy():
    p = Params(alpha=2.3, delta=4.1)
    q = parameter_mirror(p)
    s0 = np.array([0.4, 2.5])
    ts = np.linspace(0, 50, 201)
    fwd = integrate(s0, p, t_end=50.0).sample(ts)
    bwd = integrate(math.pi - s0, q, t_end=50.0, direction=-1).sample(ts)
    assert np.max(np.abs(circ_diff(state_mirror(bwd), fwd))) < 1e-8


def test_halving_tolerance_is_self_consistent():
    rng = np.random.default_rng(11)
    for _ in range(20):
        s0 = rng.uniform(0, TWO_PI, 2)
        coarse = integrate(s0, FIG_ANTI, IntegratorSettings(1e-8, 1e-8), t_end=20.0).lifts[-1]
        fine = integrate(s0, FIG_ANTI, IntegratorSettings(5e-9, 5e-9), t_end=20.0).lifts[-1]
        assert np.max(np.abs(coarse - fine)) < 1e-6


def test_antiphase_spike_alternation():
    tr = integrate((0.0, math.pi), FIG_ANTI, t_end=400.0)
    s1 = np.array([e.time for e in detect_events(tr, EventKind.SPIKE_1)])
    s2 = np.array([e.time for e in detect_events(tr, EventKind.SPIKE_2)])
    s1, s2 = s1[s1 > 200], s2[s2 > 200]
    period = float(np.median(np.diff(s1)))
    assert np.allclose(np.diff(s1), period, rtol=1e-6)
    # each SPIKE_2 falls half a period after the preceding SPIKE_1
    lag = np.array([t - s1[s1 < t].max() for t in s2 if t > s1[0]])
    assert np.all(np.abs(lag - period / 2) < 1e-3 * period)


def test_events_refined_to_level():
    tr = integrate((0.0, math.pi), FIG_ANTI, t_end=50.0)
    for e in detect_events(tr, EventKind.SPIKE_1):
        assert e.kind is EventKind.SPIKE_1 and e.element == 1
        assert e.state.phi1 == pytest.approx(math.pi, abs=1e-7)
    assert [e.time for e in detect_events(tr, "SECTION")] == \
        [e.time for e in detect_events(tr, EventKind.SPIKE_1)]


def test_csv_exports(tmp_path):
    tr = integrate((0.0, math.pi), FIG_ANTI, t_end=20.0)
    tr.to_csv(tmp_path / "traj.csv")
    rows = (tmp_path / "traj.csv").read_text().splitlines()
    assert rows[0] == "t,phi1,phi2,lift1,lift2"
    assert len(rows) == len(tr) + 1
    events_to_csv(detect_events(tr, EventKind.SPIKE_2), tmp_path / "ev.csv")
    assert (tmp_path / "ev.csv").read_text().startswith("t,kind,element\n")


def test_run_until_section_level():
    res = run_until([0.0, math.pi], FIG_ANTI, IntegratorSettings(), 100.0, component=0,
                    target=math.pi)
    assert res.status == "crossed"
    assert res.lifts[0] == math.pi


def test_run_until_capture():
    p = Params(d=0.0)
    a = math.asin(0.7)
    res = run_until([a + 0.2, a - 0.1], p, IntegratorSettings(), 100.0,
                    equilibria=[[a, a]], capture_radius=1e-3)
    assert res.status == "captured" and res.eq_index == 0


def test_run_until_budget_and_stall():
    p = Params(d=0.0)
    a = math.asin(0.7)
    res = run_until([a + 0.2, a], p, IntegratorSettings(), 5.0)
    assert res.status == "budget" and res.t == pytest.approx(5.0)
    res = run_until([a, a], p, IntegratorSettings(), 5.0, speed_tol=1e-10)
    assert res.status == "stalled"


def test_step_underflow_is_an_exception_type():
    assert issubclass(StepSizeUnderflow, RuntimeError)


def test_torus_state_input():
    tr = integrate(TorusState.at(0.0, math.pi), FIG_ANTI, t_end=1.0)
    assert tr.lifts[0].tolist() == [0.0, math.pi]
