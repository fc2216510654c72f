"""Saddle separatrices and connections between saddles.

A connection between two saddles is measured by a signed gap on a short
transversal to the target saddle's stable manifold: the unstable branch of
the source and the stable branch of the target both cross the transversal,
and the gap is the distance between the two crossings along it.  The gap is
smooth in the parameters while the branch geometry persists, so connections
can be located by plain bisection.

Eigenvector signs from the linear algebra routines are arbitrary, so a branch
is named by a direction *hint*: the eigenvector sign is chosen to agree with
it.  Passing the hint from one parameter value to the next keeps the branch
(and the gap) continuous.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .cycles import LimitCycle, find_cycles, next_section_level
from .equilibria import Equilibrium, Kind, _diagonal_roots, classify_equilibrium, find_equilibria
from .integrator import IntegratorSettings, Trajectory, integrate, run_until
from .model import TWO_PI, Params, circ_diff, circ_dist, eval_coupling, torus_dist, wrap

__all__ = [
    "Branch",
    "Separatrix",
    "ConnectionGap",
    "NoApproach",
    "BracketInvalid",
    "trace_separatrices",
    "connection_gap",
    "locate_connection",
    "diagonal_connections",
    "export_portrait",
]

SEED_EPS = 1e-6
TERMINUS_TOL = 1e-4
GAP_RADIUS = 0.3
GAP_OFFSET = 0.15  # transversal sits this far from the target along its stable direction

_GAP_SETTINGS = IntegratorSettings(rel_tol=1e-11, abs_tol=1e-11)


class NoApproach(RuntimeError):
    """The source branch never comes near the target saddle."""


class BracketInvalid(ValueError):
    """The quantity being bisected has the same sign (or label) at both ends."""


class Branch(str, Enum):
    UNSTABLE_PLUS = "unstable+"
    UNSTABLE_MINUS = "unstable-"
    STABLE_PLUS = "stable+"
    STABLE_MINUS = "stable-"

    @property
    def unstable(self) -> bool:
        return self in (Branch.UNSTABLE_PLUS, Branch.UNSTABLE_MINUS)

    @property
    def sign(self) -> int:
        return 1 if self in (Branch.UNSTABLE_PLUS, Branch.STABLE_PLUS) else -1


@dataclass
class Separatrix:
    origin: Equilibrium
    branch: Branch
    path: Trajectory
    terminus: str  # "equilibrium", "cycle", "section-exit" or "budget-exhausted"
    terminus_index: int | None = None

    @property
    def terminus_id(self) -> str:
        if self.terminus_index is None:
            return self.terminus
        return f"{self.terminus}:{self.terminus_index}"


@dataclass
class ConnectionGap:
    from_saddle: Equilibrium
    to_saddle: Equilibrium
    signed_gap: float
    branch_dir: np.ndarray = field(repr=False, default=None)  # oriented unstable vector of the source
    side_dir: np.ndarray = field(repr=False, default=None)  # oriented stable vector of the target

    def to_dict(self) -> dict:
        return {"from": [float(x) for x in self.from_saddle.point],
                "to": [float(x) for x in self.to_saddle.point],
                "signed_gap": self.signed_gap}


# ------------------------------------------------------------------ helpers

def _eigen(e: Equilibrium, p: Params):
    """(stable vector, stable eigenvalue, unstable vector, unstable eigenvalue)."""
    if e.kind is not Kind.SADDLE:
        raise ValueError(f"equilibrium at {tuple(e.point)} is not a saddle ({e.kind.value})")
    (ls, vs), (lu, vu) = e.eigvecs(p)
    return vs, ls, vu, lu


def _orient(v: np.ndarray, hint) -> np.ndarray:
    if hint is not None and float(np.dot(v, hint)) < 0.0:
        return -v
    return v


def _concat(parts: list[Trajectory], p: Params, direction: int) -> Trajectory:
    times, lifts, dense = [parts[0].times], [parts[0].lifts], [parts[0].dense]
    t0 = parts[0].times[-1]
    for tr in parts[1:]:
        times.append(tr.times[1:] + t0)
        lifts.append(tr.lifts[1:])
        dense.append(tr.dense)
        t0 += tr.times[-1]
    return Trajectory(np.concatenate(times), np.concatenate(lifts), np.concatenate(dense),
                      p, direction)


def _segment(y, p, settings, t, direction) -> Trajectory | None:
    if t <= 0.0:
        return None
    return integrate(y, p, settings, t_end=t, direction=direction)


# ------------------------------------------------------------------ separatrices

def _limit(xs: list[float]) -> float:
    """Aitken limit of geometrically converging section crossings.

    Orbits near a weakly attracting cycle approach it slowly; the limit of
    the last three crossings is compared with the cycle instead.
    """
    x = xs[-1]
    if len(xs) < 3:
        return x
    a, b, c = xs[-3:]
    d1, d2 = b - a, c - b
    # the winding per turn cancels in the differences
    r = (d2 - round(d2 / TWO_PI) * TWO_PI) / (d1 - round(d1 / TWO_PI) * TWO_PI) \
        if d1 - round(d1 / TWO_PI) * TWO_PI != 0.0 else 0.0
    if not 0.0 < abs(r) < 1.0:
        return x
    step = d2 - round(d2 / TWO_PI) * TWO_PI
    return c + step * r / (1.0 - r)


def _trace_one(e: Equilibrium, branch: Branch, vec: np.ndarray, rate: float, p: Params,
               settings: IntegratorSettings, eqs: list[Equilibrium],
               cycles: list[LimitCycle], eps: float, tol: float) -> Separatrix:
    direction = 1 if branch.unstable else -1
    y = e.point + branch.sign * eps * vec
    parts: list[Trajectory] = []
    # leave the origin's capture ball along the linear direction first
    t_escape = math.log(10.0 * tol / eps) / abs(rate)
    seg = integrate(y, p, settings, t_end=t_escape, direction=direction)
    parts.append(seg)
    y = seg.lifts[-1].copy()
    elapsed = t_escape
    pts = np.array([q.point for q in eqs]).reshape(-1, 2)
    sections = np.array([c.section_point for c in cycles])
    terminus, index = "budget-exhausted", None
    xs: list[float] = []
    while elapsed < settings.t_max:
        level = next_section_level(y[0], direction)
        res = run_until(y, p, settings, settings.t_max - elapsed, component=0, target=level,
                        direction=direction, equilibria=pts, capture_radius=tol)
        seg = _segment(y, p, settings, res.t, direction)
        if seg is not None:
            parts.append(seg)
        elapsed += res.t
        y = res.lifts.copy()
        if res.status == "captured":
            terminus, index = "equilibrium", res.eq_index
            break
        if res.status != "crossed":
            break
        if len(sections):
            xs.append(float(y[1]))
            hit = np.nonzero(circ_dist(sections, _limit(xs)) < tol)[0]
            if len(hit):
                terminus, index = "cycle", int(hit[0])
                break
    return Separatrix(e, branch, _concat(parts, p, direction), terminus, index)


def trace_separatrices(e: Equilibrium, p: Params, settings: IntegratorSettings | None = None,
                       equilibria: list[Equilibrium] | None = None,
                       cycles: list[LimitCycle] | None = None,
                       eps: float = SEED_EPS, tol: float = TERMINUS_TOL) -> list[Separatrix]:
    """The four branches of the saddle ``e`` (unstable forward, stable backward).

    ``equilibria`` and ``cycles`` are the candidate termini; they are computed
    when omitted.  Equilibrium indices refer to ``equilibria``, cycle indices
    to ``cycles``.
    """
    settings = settings or IntegratorSettings()
    if equilibria is None:
        equilibria = find_equilibria(p)
    if cycles is None:
        cycles = find_cycles(p, settings, equilibria)
    vs, ls, vu, lu = _eigen(e, p)
    out = []
    for branch in Branch:
        vec, rate = (vu, lu) if branch.unstable else (vs, ls)
        out.append(_trace_one(e, branch, vec, rate, p, settings, equilibria, cycles, eps, tol))
    return out


# ------------------------------------------------------------------ connection gap

def _transversal_axis(side: np.ndarray) -> np.ndarray:
    """Unit vector along the transversal, oriented so that the swap map
    carries the gap of a pair to the gap of the swapped pair."""
    w = np.array([-side[1], side[0]])
    s = w[0] + w[1]
    if abs(s) > 1e-3:
        return w if s > 0 else -w
    return w


def connection_gap(pair, p: Params, settings: IntegratorSettings | None = None,
                   branch_hint=None, side_hint=None, radius: float = GAP_RADIUS,
                   offset: float = GAP_OFFSET, eps: float = SEED_EPS) -> ConnectionGap:
    """Signed gap between the unstable branch of ``pair[0]`` and the stable
    manifold of ``pair[1]``.

    ``branch_hint`` selects the source's unstable branch by direction; without
    it both branches are tried and the first to reach the target is used.
    ``side_hint`` fixes which stable branch of the target is measured; without
    it the side of arrival is used.
    """
    settings = settings or _GAP_SETTINGS
    src, tgt = pair
    _, _, vu_src, _ = _eigen(src, p)
    vs, _, _, _ = _eigen(tgt, p)
    hints = [branch_hint] if branch_hint is not None else [vu_src, -vu_src]
    for hint in hints:
        bdir = _orient(vu_src, hint)
        try:
            gap, side = _gap_along(src, tgt, bdir, vs, side_hint, p, settings, radius, offset, eps)
        except NoApproach:
            continue
        return ConnectionGap(src, tgt, gap, bdir, side)
    raise NoApproach(f"no unstable branch of {tuple(src.point)} reaches {tuple(tgt.point)}")


def _gap_along(src, tgt, bdir, vs, side_hint, p, settings, radius, offset, eps):
    t_max = settings.t_max
    y0 = src.point + eps * bdir
    # move out of the source neighbourhood along the unstable direction
    line = (bdir[0], bdir[1], float(np.dot(bdir, src.point)) + radius)
    res = run_until(y0, p, settings, t_max, line=line)
    if res.status != "crossed":
        raise NoApproach("source branch does not leave its neighbourhood")
    elapsed = res.t
    # then follow it into the target neighbourhood, stopping at stable equilibria
    others = [e for e in find_equilibria(p) if e.kind.stable]
    pts = np.array([tgt.point] + [e.point for e in others]).reshape(-1, 2)
    radii = np.array([radius] + [TERMINUS_TOL] * len(others))
    res = run_until(res.lifts, p, settings, t_max - elapsed, equilibria=pts, capture_radius=radii)
    if res.status != "captured" or res.eq_index != 0:
        raise NoApproach("source branch does not enter the target neighbourhood")
    elapsed += res.t
    y = res.lifts
    rel = circ_diff(y, tgt.point)
    tgt_lift = y - rel
    side = _orient(vs, side_hint if side_hint is not None else rel)
    c = tgt_lift + offset * side
    # crossing of the transversal, approaching the target
    res = run_until(y, p, settings, t_max - elapsed, line=(-side[0], -side[1], -float(side @ c)))
    if res.status != "crossed":
        raise NoApproach("source branch does not cross the transversal")
    axis = _transversal_axis(side)
    s_branch = float(axis @ (res.lifts - c))
    # the target's stable branch on the same side, followed backward
    res = run_until(tgt_lift + eps * side, p, settings, t_max, direction=-1,
                    line=(side[0], side[1], float(side @ c)))
    if res.status != "crossed":
        raise NoApproach("stable branch of the target does not reach the transversal")
    s_manifold = float(axis @ (res.lifts - c))
    return s_branch - s_manifold, side


# ------------------------------------------------------------------ localisation

def _saddles(p: Params) -> list[Equilibrium]:
    return [e for e in find_equilibria(p) if e.kind is Kind.SADDLE]


def _match(e: Equilibrium, saddles: list[Equilibrium], limit: float = 0.5) -> Equilibrium:
    if not saddles:
        raise NoApproach("no saddles at this parameter value")
    best = min(saddles, key=lambda q: torus_dist(q.point, e.point))
    if torus_dist(best.point, e.point) > limit:
        raise NoApproach(f"saddle near {tuple(e.point)} disappeared")
    return best


def _follow(ref: ConnectionGap, x: float, axis: str, p: Params, settings) -> ConnectionGap:
    """Gap of the connection ``ref`` continued to ``axis = x``."""
    q = p.replace(**{axis: x})
    sm = _saddles(q)
    return connection_gap((_match(ref.from_saddle, sm), _match(ref.to_saddle, sm)), q, settings,
                          branch_hint=ref.branch_dir, side_hint=ref.side_dir)


def _outermost(ref: ConnectionGap, x_ok: float, x_bad: float, axis: str, p: Params, settings,
               steps: int = 12):
    """Continue ``ref`` from ``x_ok`` toward ``x_bad`` (where it has no approach) and
    return the last parameter value where the gap is still defined."""
    for _ in range(steps):
        mid = 0.5 * (x_ok + x_bad)
        try:
            ref = _follow(ref, mid, axis, p, settings)
            x_ok = mid
        except NoApproach:
            x_bad = mid
    return x_ok, ref


def _candidates(x0: float, x1: float, axis: str, p: Params, settings, gap_tol: float):
    """Connections defined at ``x0`` whose gap has the opposite sign toward ``x1``."""
    q0 = p.replace(**{axis: x0})
    saddles = _saddles(q0)
    for a in saddles:
        _, _, vu, _ = _eigen(a, q0)
        for b in saddles:
            for hint in (vu, -vu):
                try:
                    g0 = connection_gap((a, b), q0, settings, branch_hint=hint)
                except NoApproach:
                    continue
                try:
                    x_end, g1 = x1, _follow(g0, x1, axis, p, settings)
                except NoApproach:
                    x_end, g1 = _outermost(g0, x0, x1, axis, p, settings)
                    if x_end == x0:
                        continue
                # connections present at both ends (e.g. along the diagonal) are not events
                if abs(g0.signed_gap) < gap_tol and abs(g1.signed_gap) < gap_tol:
                    continue
                if g0.signed_gap * g1.signed_gap < 0.0:
                    yield (x0, g0), (x_end, g1)


def locate_connection(axis: str, bracket, p: Params, settings: IntegratorSettings | None = None,
                      gap_tol: float = 1e-6, width_tol: float = 1e-8,
                      detail: bool = False):
    """Parameter value in ``bracket`` where some pair of saddles connects.

    Every ordered pair of saddles and both unstable branches of the source
    are tried at the lower end (then at the upper end); the first whose gap
    changes sign across the bracket, with saddles and branches followed
    continuously, is bisected.  If the branch loses the target before the
    far end, the outermost parameter where the gap is still defined serves
    as that end.  With ``detail=True`` returns ``(value, ConnectionGap)``.
    """
    if axis not in ("alpha", "delta", "d"):
        raise ValueError(f"unknown parameter axis {axis!r}")
    lo, hi = sorted((float(bracket[0]), float(bracket[1])))
    found = next(_candidates(lo, hi, axis, p, settings, gap_tol), None)
    if found is None:
        found = next(_candidates(hi, lo, axis, p, settings, gap_tol), None)
    if found is None:
        raise BracketInvalid(f"no saddle connection changes sign on {axis} in ({lo}, {hi})")
    (xa, ga), (xb, gb) = found
    best, best_x = (ga, xa) if abs(ga.signed_gap) < abs(gb.signed_gap) else (gb, xb)
    ref = ga
    while abs(xb - xa) > width_tol and abs(best.signed_gap) >= gap_tol:
        mid = 0.5 * (xa + xb)
        g = _follow(ref, mid, axis, p, settings)
        if abs(g.signed_gap) < abs(best.signed_gap):
            best, best_x = g, mid
        if (g.signed_gap < 0.0) == (ga.signed_gap < 0.0):
            xa = mid
        else:
            xb = mid
        ref = g
    value = best_x if abs(best.signed_gap) < gap_tol else 0.5 * (xa + xb)
    return (value, best) if detail else value


# ------------------------------------------------------------------ diagonal

def diagonal_connections(p: Params) -> list[tuple[float, float]]:
    """Connections along the invariant diagonal between neighbouring saddles.

    Returns ``(from, to)`` phases: the flow on the diagonal arc between two
    adjacent diagonal equilibria runs from one to the other, so when both
    are saddles that arc is itself a saddle connection.
    """
    roots = sorted(wrap(np.array(_diagonal_roots(p))).tolist())
    if len(roots) < 2:
        return []
    out = []
    for i, a in enumerate(roots):
        b = roots[(i + 1) % len(roots)]
        b_lift = b if b > a else b + TWO_PI
        ea = classify_equilibrium(np.array([a, a]), p)
        eb = classify_equilibrium(np.array([b, b]), p)
        if ea.kind is not Kind.SADDLE or eb.kind is not Kind.SADDLE:
            continue
        mid = 0.5 * (a + b_lift)
        f = p.gamma - math.sin(mid) + p.d * float(eval_coupling(mid, p))
        out.append((a, b) if f > 0 else (b, a))
    return out


# ------------------------------------------------------------------ export

def export_portrait(separatrices: list[Separatrix], out_dir, gaps: list[ConnectionGap] = (),
                    **extra) -> Path:
    """One CSV per separatrix (t, phi1, phi2) plus ``portrait.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    saddles: list[Equilibrium] = []
    branches = []
    for s in separatrices:
        if not any(s.origin is q for q in saddles):
            saddles.append(s.origin)
        k = next(i for i, q in enumerate(saddles) if q is s.origin)
        name = f"saddle{k}_{s.branch.value.replace('+', 'p').replace('-', 'm')}.csv"
        ph = s.path.phases
        with (out / name).open("w", encoding="utf-8") as fh:
            fh.write("t,phi1,phi2\n")
            for t, (a, b) in zip(s.path.times, ph):
                fh.write(f"{t:.17g},{a:.17g},{b:.17g}\n")
        branches.append({"saddle": k, "branch": s.branch.value, "file": name,
                         "terminus": s.terminus_id})
    doc = dict(extra)
    doc["saddles"] = [e.to_dict() for e in saddles]
    doc["branches"] = branches
    doc["termini"] = {f"{b['saddle']}:{b['branch']}": b["terminus"] for b in branches}
    doc["gaps"] = [g.to_dict() for g in gaps]
    (out / "portrait.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return out
