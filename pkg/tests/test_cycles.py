import json
import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from hco.cycles import (BranchInvalid, IntegralSingular, LimitCycle, PhaseClass, ReturnMap,
                        antiphase_condition_closed_form, antiphase_condition_quadrature,
                        build_cycle, classify_cycle, cycles_to_json, detect_cycle, find_cycles,
                        floquet_multiplier, hausdorff, next_section_level, refine_closed)
from hco.model import (TWO_PI, Params, divergence, eval_coupling, eval_coupling_derivative,
                       parameter_mirror, state_mirror, vector_field)

FIG_ANTI = Params(alpha=1.5 * math.pi, delta=1.5 * math.pi)
IN_PHASE = Params(d=0.31, alpha=math.pi / 4, delta=math.pi)
FOLIATED = Params(alpha=1.75 * math.pi, delta=1.5 * math.pi)
# root in delta of the integral condition at alpha = 3 pi / 2, d = 1 (mpmath quad + findroot)
DELTA_STAR = 1.94281520345771


@pytest.fixture(scope="module")
def anti():
    return detect_cycle((0.0, math.pi), FIG_ANTI)


def test_next_section_level():
    assert next_section_level(0.0) == math.pi
    assert next_section_level(math.pi) == 3 * math.pi
    assert next_section_level(math.pi, -1) == -math.pi
    assert next_section_level(3 * math.pi - 1e-14) == 5 * math.pi


def test_antiphase_example(anti):
    assert anti.winding == (1, 1)
    assert anti.phase_class is PhaseClass.ANTI_PHASE
    assert anti.stable
    assert anti.closure_error < 1e-6


def test_antiphase_multiplier_matches_divergence_integral(anti):
    def rhs(t, y):
        f = vector_field(y[:2], FIG_ANTI)
        return [f[0], f[1], divergence(y[:2], FIG_ANTI)]

    sol = solve_ivp(rhs, (0, anti.period), [math.pi, anti.section_point, 0.0],
                    method="DOP853", rtol=1e-12, atol=1e-12)
    assert anti.floquet == pytest.approx(math.exp(sol.y[2, -1]), abs=1e-6)


def test_inphase_period_and_multiplier_by_quadrature():
    p = IN_PHASE
    c = detect_cycle((1.0, 1.0), p)
    assert c.phase_class is PhaseClass.IN_PHASE and c.stable

    def f(x):
        return p.gamma - math.sin(x) + p.d * eval_coupling(x, p)

    period = quad(lambda x: 1.0 / f(x), 0, TWO_PI, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
    # transverse rate -cos(phi) - d window'(phi) integrated along the diagonal orbit
    log_rho = quad(lambda x: (-math.cos(x) - p.d * eval_coupling_derivative(x, p)) / f(x),
                   0, TWO_PI, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
    assert c.period == pytest.approx(period, rel=1e-9)
    assert c.floquet == pytest.approx(math.exp(log_rho), abs=1e-6)


def test_below_threshold_no_cycle():
    p = IN_PHASE.replace(d=0.29)
    assert detect_cycle((1.0, 1.0), p) is None
    assert detect_cycle((0.3, 4.0), p) is None
    assert find_cycles(p) == []


def test_second_antiphase_example():
    c = detect_cycle((0.0, math.pi), Params(alpha=1.0, delta=0.296))
    assert c.phase_class is PhaseClass.ANTI_PHASE and c.stable


def test_classify_synthetic_cycles():
    t = np.linspace(0, 1, 2049)
    base = TWO_PI * t
    ring = lambda shift: LimitCycle(1.0, (1, 1), np.mod(np.c_[base, base + TWO_PI * shift], TWO_PI))
    assert classify_cycle(ring(0.0)) is PhaseClass.IN_PHASE
    assert classify_cycle(ring(0.5)) is PhaseClass.ANTI_PHASE
    assert classify_cycle(ring(1 / 3)) is PhaseClass.OTHER


def test_redetection_reproduces_period(anti):
    for s in anti.samples[::512]:
        again = detect_cycle(s, FIG_ANTI)
        assert again.period == pytest.approx(anti.period, rel=1e-6)


def test_antiphase_point_symmetry(anti):
    swapped = anti.samples[:, ::-1]
    assert hausdorff(anti.samples, swapped) < 1e-4


def test_foliation_neutral():
    cycles = find_cycles(FOLIATED)
    assert cycles
    for c in cycles:
        assert abs(c.floquet - 1.0) < 1e-4
    # the return map is the identity across the section
    rmap = ReturnMap(FOLIATED, equilibria=[])
    for x in (0.5, 2.0, 4.0):
        assert rmap(x) - TWO_PI == pytest.approx(x, abs=1e-6)


@pytest.mark.parametrize("shift,stable_class", [(-0.01, PhaseClass.ANTI_PHASE),
                                                (0.01, PhaseClass.IN_PHASE)])
def test_stability_swap_across_foliation(shift, stable_class):
    cycles = find_cycles(FOLIATED.replace(alpha=FOLIATED.alpha + shift))
    classes = {c.phase_class: c.stable for c in cycles}
    assert set(classes) == {PhaseClass.IN_PHASE, PhaseClass.ANTI_PHASE}
    assert classes[stable_class] and not classes[({PhaseClass.IN_PHASE, PhaseClass.ANTI_PHASE}
                                                  - {stable_class}).pop()]


def test_mirror_reverses_stability():
    p = Params(alpha=math.pi + 0.01, delta=math.pi)
    q = parameter_mirror(p)
    cp, cq = find_cycles(p), find_cycles(q)
    assert len(cp) == len(cq) > 0
    for c in cp:
        img = state_mirror(c.samples)
        d = min(cq, key=lambda e: hausdorff(img, e.samples))
        assert hausdorff(img, d.samples) < 1e-4
        assert d.floquet == pytest.approx(1.0 / c.floquet, abs=1e-4)


def test_floquet_accepts_section_point(anti):
    assert floquet_multiplier(anti.section_point, FIG_ANTI) == pytest.approx(anti.floquet)


def test_build_cycle_samples_uniform(anti):
    c = build_cycle(anti.section_point, FIG_ANTI, with_floquet=False)
    assert len(c.samples) == 2049
    assert np.isnan(c.floquet)


def test_json_export(tmp_path, anti):
    cycles_to_json([anti], tmp_path / "c.json", config={})
    doc = json.loads((tmp_path / "c.json").read_text())
    row = doc["cycles"][0]
    assert {"period", "w1", "w2", "phase_class", "floquet", "stable", "samples"} <= set(row)
    assert row["phase_class"] == "anti-phase" and row["w1"] == 1


# ------------------------------------------------------------------ integral condition

def test_condition_requires_threshold():
    with pytest.raises(IntegralSingular):
        antiphase_condition_quadrature(IN_PHASE.replace(d=0.29))


def test_condition_singular_arc():
    with pytest.raises(IntegralSingular):
        antiphase_condition_quadrature(Params(alpha=0.5, delta=0.5))
    with pytest.raises(IntegralSingular):
        antiphase_condition_closed_form(Params(alpha=0.5, delta=0.5))


def test_condition_empty_arc():
    p = Params(alpha=1.5 * math.pi, delta=1e-12)
    a = math.asin(0.7)
    lhs = quad(lambda x: 1 / (1.7 - math.sin(x)), a, math.pi - a)[0]
    assert antiphase_condition_quadrature(p) == pytest.approx(lhs, rel=1e-9)


def test_condition_at_threshold_diverges():
    p = Params(gamma=0.5, d=0.5, alpha=4.0, delta=0.5)
    assert antiphase_condition_closed_form(p) == math.inf
    assert antiphase_condition_quadrature(p) == math.inf


def test_condition_root_in_delta():
    root = brentq(lambda d: antiphase_condition_quadrature(FIG_ANTI.replace(delta=d)),
                  0.01, 2.3, xtol=1e-10)
    assert root == pytest.approx(DELTA_STAR, abs=1e-8)


def test_closed_form_matches_quadrature():
    # the arctanh antiderivative holds for arcs inside the rest region
    p = FIG_ANTI.replace(alpha=1.0, delta=0.5)
    assert antiphase_condition_closed_form(p) == pytest.approx(
        antiphase_condition_quadrature(p), abs=1e-8)


def test_closed_form_branch_invalid():
    with pytest.raises(BranchInvalid):
        antiphase_condition_closed_form(Params(alpha=2.5, delta=1.0))
    with pytest.raises(BranchInvalid):
        antiphase_condition_closed_form(FIG_ANTI.replace(delta=1.0))


def test_hausdorff_independent_of_sampling_phase():
    t = np.linspace(0, TWO_PI, 65)
    circle = lambda shift: np.c_[np.cos(t + shift), np.sin(t + shift)] * 0.5 + 3.0
    assert hausdorff(circle(0.0), circle(0.05)) < 5e-3
    assert hausdorff(circle(0.0), circle(0.0) + [0.1, 0.0]) == pytest.approx(0.1, abs=1e-3)


def _brute_to_polyline(pts, curve):
    rel = np.mod(pts[:, None, :] - curve[None, :-1] + math.pi, TWO_PI) - math.pi
    seg = np.mod(curve[1:] - curve[:-1] + math.pi, TWO_PI) - math.pi
    s = np.clip(np.sum(rel * seg, axis=2) / np.sum(seg * seg, axis=1), 0, 1)
    return np.sqrt(np.min(np.sum((rel - s[..., None] * seg) ** 2, axis=2), axis=1)).max()


def winding_curve(n, shift=0.0, bump=0.0):
    t = np.linspace(0, TWO_PI, n + 1) + shift
    return np.mod(np.c_[t + 0.3 * np.sin(3 * t) + bump * np.cos(5 * t), 2 * t + np.tanh(5 * np.cos(t))],
                  TWO_PI)


def test_hausdorff_matches_brute_force_polyline():
    a, b = winding_curve(300), winding_curve(211, 0.01, bump=0.02)
    want = max(_brute_to_polyline(a, b), _brute_to_polyline(b, a))
    assert hausdorff(a, b) == pytest.approx(want, abs=1e-14)


def test_refinement_removes_chord_error():
    # the same curve sampled at two phases: exact distance 0, chords alone give a sagitta
    a, b = winding_curve(512), winding_curve(512, 0.5 * TWO_PI / 512)
    coarse, fine = hausdorff(a, b), hausdorff(a, b, refine=8)
    assert fine < 1e-2 * coarse
    assert np.allclose(refine_closed(a, 4)[::4], a, atol=1e-12)
