"""End-to-end acceptance checks, one per criterion, each printing a pass/fail line.

These are the slow tests of the suite (the 64 x 64 sweep and the 200-set
property run dominate).
"""
import math

import numpy as np
import pytest

from hco.cycles import (BranchInvalid, PhaseClass, antiphase_condition,
                        antiphase_condition_closed_form, antiphase_condition_quadrature,
                        find_cycles)
from hco.equilibria import CENSUS_CONFIGURATIONS, Kind, census, find_equilibria
from hco.model import TWO_PI, Params, is_reversible
from hco.portrait import locate_connection
from hco.properties import random_params, run_suite
from hco.regimes import Label, classify_regime, locate_boundary, sweep_plane

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\nacceptance {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return _report


def test_1_regime_landmarks(report):
    cases = [((1.5 * math.pi, 1.5 * math.pi, 1.0), Label.C),
             ((math.pi / 4, math.pi, 0.29), Label.B),
             ((math.pi / 4, math.pi, 0.31), Label.A),
             ((math.pi + 0.01, math.pi, 1.0), Label.D)]
    got = [classify_regime(Params(alpha=a, delta=dl, d=d)).label for (a, dl, d), _ in cases]
    want = [lab for _, lab in cases]
    report(1, got == want, f"labels {[g.value for g in got]}, expected {[w.value for w in want]}")


def test_2_coupling_threshold(report):
    value = locate_boundary("d", (0.25, 0.35), Params(alpha=math.pi / 4, delta=math.pi))
    p = Params(alpha=1.5 * math.pi, delta=math.pi)
    anti = [any(c.phase_class is PhaseClass.ANTI_PHASE and c.stable
                for c in find_cycles(p.replace(d=d))) for d in (0.301, 0.2999)]
    ok = abs(value - 0.30) <= 0.01 and anti == [True, False]
    report(2, ok, f"boundary d = {value:.5f}; anti-phase cycle at d = 0.301 / 0.2999: {anti}")


def test_3_heteroclinic_landmarks(report):
    a = locate_connection("alpha", (4.15, 4.28), Params(delta=0.75 * math.pi))
    dl = locate_connection("delta", (0.27, 0.29), Params(alpha=0.99))
    ok = abs(a - 4.1691) <= 0.01 and 0.2882 < dl < 0.2884
    report(3, ok, f"alpha = {a:.6f}, delta = {dl:.6f}")


def test_4_snic_bracket(report):
    value, labels = locate_boundary("alpha", (0.85, 0.9), Params(delta=math.pi), detail=True)
    ok = 0.875 < value < 0.885 and set(labels) == {"A", "B"}
    report(4, ok, f"boundary alpha = {value:.5f} between {labels}")


def test_5_degenerate_foliation(report):
    p = Params(alpha=1.75 * math.pi, delta=1.5 * math.pi)
    cycles = find_cycles(p)
    neutral = bool(cycles) and all(abs(c.floquet - 1.0) <= 1e-4 for c in cycles)

    def stable_classes(shift):
        return {c.phase_class for c in find_cycles(p.replace(alpha=p.alpha + shift)) if c.stable}

    below, above = stable_classes(-0.01), stable_classes(0.01)
    swap = below == {PhaseClass.ANTI_PHASE} and above == {PhaseClass.IN_PHASE}
    mults = [round(c.floquet, 7) for c in cycles]
    report(5, neutral and swap, f"multipliers {mults}; stable below {[c.value for c in below]}, "
                                f"above {[c.value for c in above]}")


def _adjacent(labels, a, b):
    for axis in (0, 1):
        for shift in (1, -1):
            if np.any((labels == a) & (np.roll(labels, shift, axis=axis) == b)):
                return True
    return False


def test_6_sweep_topology(report):
    strong = sweep_plane(Params(d=1.0), (64, 64))
    weak = sweep_plane(Params(d=0.25), (64, 64))
    found = strong.label_set()
    ok = ({"A", "B", "C", "D"} <= found and _adjacent(strong.labels, "D", "B")
          and _adjacent(strong.labels, "D", "C") and weak.label_set() == {"B"})
    counts = dict(zip(*np.unique(strong.labels, return_counts=True)))
    report(6, ok, f"d = 1 labels {counts}; d = 0.25 labels {sorted(weak.label_set())}")


def test_7_property_suite(report):
    rng = np.random.default_rng(2024)
    failures = []
    for _ in range(200):
        p = random_params(rng)
        for r in run_suite(p, rng):
            if not r.passed:
                failures.append(f"{r.name} at {p.to_dict()}: {r.detail}")
    report(7, not failures, f"200 sets, {len(failures)} violation(s) {failures[:3]}")


def test_8_closed_form_vs_quadrature(report):
    rng = np.random.default_rng(8)
    worst, n, fallback = 0.0, 0, 0
    while n < 100:
        g = float(rng.uniform(0.3, 0.95))
        lo, hi = math.asin(g), math.pi - math.asin(g)
        a = float(rng.uniform(lo, hi))
        p = Params(gamma=g, d=float(rng.uniform(1.0 - g + 0.05, 1.5)), alpha=a,
                   delta=float(rng.uniform(0.0, hi - a)))
        worst = max(worst, abs(antiphase_condition_closed_form(p)
                               - antiphase_condition_quadrature(p)))
        n += 1
    # outside the rest arc the closed form refuses and the combined call falls back
    p = Params(alpha=1.5 * math.pi, delta=1.0)
    with pytest.raises(BranchInvalid):
        antiphase_condition_closed_form(p)
    if antiphase_condition(p) == antiphase_condition_quadrature(p):
        fallback = 1
    report(8, worst <= 1e-8 and fallback == 1,
           f"max |closed form - quadrature| = {worst:.3g} over {n} sets; fallback ok: {bool(fallback)}")


def test_9_weak_coupling_census(report):
    n = 100
    vals = TWO_PI * np.arange(n) / n
    unknown, max_stable, centred = set(), 0, 0
    for a in vals:
        for dl in vals:
            p = Params(d=0.25, alpha=float(a), delta=float(dl))
            eqs = find_equilibria(p)
            c = census(p, eqs)
            max_stable = max(max_stable, c.n_stable)
            if c.n_nonhyperbolic:
                # cells on a reversibility line carry centres; those must balance the saddles
                centres = all(abs(np.asarray(e.eigenvalues).real).max() < 1e-8
                              and abs(np.asarray(e.eigenvalues).imag).min() > 0
                              for e in eqs if e.kind is Kind.NON_HYPERBOLIC)
                if (is_reversible(p) and centres
                        and c.n_saddle == c.n_stable + c.n_unstable + c.n_nonhyperbolic):
                    centred += 1
                    continue
                unknown.add(c.triple + (c.n_nonhyperbolic,))
            elif c.triple not in CENSUS_CONFIGURATIONS:
                unknown.add(c.triple)
    ok = not unknown and max_stable == 4
    report(9, ok, f"{n * n} cells ({centred} reversible with centres), unlisted censuses "
                  f"{sorted(unknown)}, max stable {max_stable}")
