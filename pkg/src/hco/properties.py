"""Structural properties of the model as executable checks.

Each check takes a parameter set (plus precomputed equilibria or cycles
where useful) and returns a :class:`PropertyResult`.  :func:`run_suite`
runs all of them; :func:`random_params` draws the parameter sets used for
property-based testing.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .cycles import LimitCycle, PhaseClass, find_cycles, hausdorff
from .equilibria import Equilibrium, Kind, check_property4, find_equilibria
from .integrator import IntegratorSettings
from .model import (TWO_PI, Params, _field, circ_diff, eval_coupling, parameter_mirror,
                    reversibility_defect, state_mirror, wrap)

__all__ = [
    "PropertyResult",
    "check_permutation",
    "check_antiphase_unique",
    "check_antiphase_symmetry",
    "check_diagonal_implication",
    "check_mirror",
    "check_reversibility",
    "check_bounds",
    "check_index_sum",
    "run_suite",
    "random_params",
]

EQ_MIRROR_TOL = 1e-8
CYCLE_TOL = 1e-4
# chord sagitta near the window edges is ~1e-4 at 2048 samples; splines cut it by factor^4
CYCLE_REFINE = 8
DEFECT_TOL = 1e-12
# below this the coupling term is lost in rounding and a coordinate may sit on the bound
ROUNDING_FLOOR = 1e-12


class PropertyResult(NamedTuple):
    name: str
    passed: bool
    detail: str = ""


def check_permutation(p: Params, rng: np.random.Generator, n: int = 64,
                      eqs: list[Equilibrium] | None = None) -> PropertyResult:
    """Swapping the phases swaps the field (bit for bit) and the equilibrium set."""
    pts = rng.uniform(0.0, TWO_PI, size=(n, 2))
    par = p.as_tuple()
    for a, b in pts:
        f = _field(a, b, *par)
        g = _field(b, a, *par)
        if f[0] != g[1] or f[1] != g[0]:
            return PropertyResult("permutation", False, f"field not equivariant at ({a}, {b})")
    eqs = find_equilibria(p) if eqs is None else eqs
    pts = {(float(e.point[0]), float(e.point[1])) for e in eqs}
    swapped = {(b, a) for a, b in pts}
    if pts != swapped:
        return PropertyResult("permutation", False, "equilibrium set not closed under swap")
    return PropertyResult("permutation", True)


def check_antiphase_unique(cycles: list[LimitCycle]) -> PropertyResult:
    anti = [c for c in cycles if c.phase_class is PhaseClass.ANTI_PHASE]
    for c in anti[1:]:
        h = hausdorff(anti[0].samples, c.samples, refine=CYCLE_REFINE)
        if h >= CYCLE_TOL:
            return PropertyResult("antiphase-unique", False, f"two anti-phase cycles, distance {h:.3g}")
    return PropertyResult("antiphase-unique", True, f"{len(anti)} anti-phase cycle(s)")


def check_antiphase_symmetry(cycles: list[LimitCycle]) -> PropertyResult:
    """The swapped anti-phase orbit is the orbit shifted by half a period."""
    for c in cycles:
        if c.phase_class is not PhaseClass.ANTI_PHASE:
            continue
        body = np.asarray(c.samples)[:-1]
        half = len(body) // 2
        err = float(np.max(np.abs(circ_diff(body[:, ::-1], np.roll(body, -half, axis=0)))))
        if err >= CYCLE_TOL:
            return PropertyResult("antiphase-symmetry", False, f"half-period shift error {err:.3g}")
    return PropertyResult("antiphase-symmetry", True)


def check_diagonal_implication(p: Params, eqs: list[Equilibrium] | None = None) -> PropertyResult:
    ok = check_property4(p, eqs)
    return PropertyResult("off-diagonal-implies-diagonal", ok)


def _kind_mirror(k: Kind) -> Kind:
    swap = {Kind.STABLE_NODE: Kind.UNSTABLE_NODE, Kind.UNSTABLE_NODE: Kind.STABLE_NODE,
            Kind.STABLE_FOCUS: Kind.UNSTABLE_FOCUS, Kind.UNSTABLE_FOCUS: Kind.STABLE_FOCUS}
    return swap.get(k, k)


def check_mirror(p: Params, eqs: list[Equilibrium] | None = None,
                 cycles: list[LimitCycle] | None = None,
                 settings: IntegratorSettings | None = None) -> PropertyResult:
    """Equilibria and cycles of the mirrored parameters are the mirror images,
    with stability reversed."""
    q = parameter_mirror(p)
    eqs = find_equilibria(p) if eqs is None else eqs
    eqs_q = find_equilibria(q)
    if len(eqs) != len(eqs_q):
        return PropertyResult("mirror", False, f"{len(eqs)} vs {len(eqs_q)} equilibria")
    for e in eqs:
        m = state_mirror(e.point)
        dists = [float(np.hypot(*circ_diff(m, f.point))) for f in eqs_q]
        j = int(np.argmin(dists))
        if dists[j] >= EQ_MIRROR_TOL:
            return PropertyResult("mirror", False, f"no mirror image of {tuple(e.point)}")
        if Kind.NON_HYPERBOLIC not in (e.kind, eqs_q[j].kind) and eqs_q[j].kind is not _kind_mirror(e.kind):
            return PropertyResult("mirror", False, f"{e.kind.value} maps to {eqs_q[j].kind.value}")
    if cycles is None and p.gamma + p.d < 1.0:
        return PropertyResult("mirror", True, "no cycles below threshold")
    cycles = find_cycles(p, settings, eqs) if cycles is None else cycles
    cycles_q = find_cycles(q, settings, eqs_q)
    if len(cycles) != len(cycles_q):
        return PropertyResult("mirror", False, f"{len(cycles)} vs {len(cycles_q)} cycles")
    for c in cycles:
        m = state_mirror(np.asarray(c.samples))
        h = min((hausdorff(m, d.samples, refine=CYCLE_REFINE) for d in cycles_q), default=math.inf)
        if h >= CYCLE_TOL:
            return PropertyResult("mirror", False, f"cycle image off by {h:.3g}")
    return PropertyResult("mirror", True)


def check_reversibility(p: Params, rng: np.random.Generator, n: int = 32) -> PropertyResult:
    """On both reversibility lines the defect vanishes (up to rounding)."""
    worst = 0.0
    for centre in (0.5 * math.pi, 1.5 * math.pi):
        q = p.replace(alpha=wrap(centre - 0.5 * p.delta))
        for s in rng.uniform(0.0, TWO_PI, size=(n, 2)):
            worst = max(worst, reversibility_defect(s, q))
    return PropertyResult("reversibility", worst < DEFECT_TOL, f"max defect {worst:.3g}")


def check_bounds(p: Params, eqs: list[Equilibrium] | None = None) -> PropertyResult:
    """Equilibrium coordinates lie strictly between arcsin(gamma) and pi - arcsin(gamma).

    When the coupling at the partner coordinate is below the rounding floor
    the coordinate is only required to lie within 1e-9 of the bound.
    """
    if p.d <= 0 or p.gamma >= 1.0:
        return PropertyResult("bounds", True, "not applicable")
    lo, hi = math.asin(p.gamma), math.pi - math.asin(p.gamma)
    eqs = find_equilibria(p) if eqs is None else eqs
    for e in eqs:
        for i in (0, 1):
            x, partner = float(e.point[i]), float(e.point[1 - i])
            if lo < x < hi:
                continue
            tiny = p.d * float(eval_coupling(partner, p)) < ROUNDING_FLOOR
            if tiny and lo - 1e-9 <= x <= hi + 1e-9:
                continue
            return PropertyResult("bounds", False, f"coordinate {x} outside ({lo}, {hi})")
    return PropertyResult("bounds", True)


def check_index_sum(eqs: list[Equilibrium]) -> PropertyResult:
    if any(e.kind is Kind.NON_HYPERBOLIC for e in eqs):
        return PropertyResult("index-sum", True, "non-hyperbolic equilibrium, skipped")
    ns = sum(e.kind.stable for e in eqs)
    nu = sum(e.kind.unstable for e in eqs)
    nsad = sum(e.kind is Kind.SADDLE for e in eqs)
    return PropertyResult("index-sum", nsad == ns + nu, f"{nsad} saddles, {ns} stable, {nu} unstable")


def run_suite(p: Params, rng: np.random.Generator | None = None,
              settings: IntegratorSettings | None = None) -> list[PropertyResult]:
    rng = np.random.default_rng(0) if rng is None else rng
    eqs = find_equilibria(p)
    cycles = [] if p.gamma + p.d < 1.0 else find_cycles(p, settings, eqs)
    return [
        check_permutation(p, rng, eqs=eqs),
        check_antiphase_unique(cycles),
        check_antiphase_symmetry(cycles),
        check_diagonal_implication(p, eqs),
        check_mirror(p, eqs, cycles, settings),
        check_reversibility(p, rng),
        check_bounds(p, eqs),
        check_index_sum(eqs),
    ]


def random_params(rng: np.random.Generator) -> Params:
    """Excitable units with moderate to strong coupling and a sharp window."""
    return Params(gamma=float(rng.uniform(0.3, 0.95)), d=float(rng.uniform(0.0, 1.5)),
                  k=float(rng.uniform(10.0, 80.0)), alpha=float(rng.uniform(0.0, TWO_PI)),
                  delta=float(rng.uniform(0.0, TWO_PI)))
