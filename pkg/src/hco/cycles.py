"""Limit cycles: return map, detection, phase relation, Floquet multiplier.

All cycles are located through the first-return map on the section
``phi1 = pi`` (upward).  On that line ``phi1' = gamma + d window(phi2) > 0`` for
any ``d >= 0``, so the section is transverse everywhere and every cycle that
winds in ``phi1`` crosses it.  The return map acts on the lifted coordinate
of ``phi2``; a cycle with winding ``(1, w2)`` is a solution of
``P(x) = x + 2 pi w2``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .equilibria import Equilibrium, find_equilibria
from .integrator import IntegratorSettings, integrate, run_until
from .model import TWO_PI, Params, TorusState, circ_dist, circ_diff, wrap

__all__ = [
    "PhaseClass",
    "LimitCycle",
    "Undecided",
    "IntegralSingular",
    "BranchInvalid",
    "ReturnMap",
    "next_section_level",
    "detect_cycle",
    "find_cycles",
    "classify_cycle",
    "floquet_multiplier",
    "build_cycle",
    "antiphase_condition",
    "antiphase_condition_quadrature",
    "antiphase_condition_closed_form",
    "cycles_to_json",
    "hausdorff",
    "refine_closed",
    "scan_return_map",
    "CycleScan",
]

SECTION = math.pi
N_SAMPLES = 2048
PHASE_TOL = 1e-3
NEUTRAL_TOL = 1e-6
FIXED_POINT_TOL = 1e-9
FLOQUET_STEP = 1e-6
STALL_SPEED = 1e-10  # phase speed below which an orbit is taken to be at rest

# tight settings for the finite-difference multiplier
_FINE = IntegratorSettings(rel_tol=1e-12, abs_tol=1e-12)


class Undecided(RuntimeError):
    """Neither an equilibrium nor a closed orbit was reached within ``t_max``."""


class IntegralSingular(ValueError):
    pass


class BranchInvalid(ValueError):
    pass


class PhaseClass(str, Enum):
    IN_PHASE = "in-phase"
    ANTI_PHASE = "anti-phase"
    OTHER = "other"


@dataclass
class LimitCycle:
    period: float
    winding: tuple[int, int]
    samples: np.ndarray  # (N_SAMPLES + 1, 2) wrapped phases, uniform in time
    phase_class: PhaseClass = PhaseClass.OTHER
    floquet: float = float("nan")
    section_point: float = float("nan")  # phi2 where the orbit meets phi1 = pi

    @property
    def stable(self) -> bool:
        return self.floquet < 1.0 - NEUTRAL_TOL

    @property
    def neutral(self) -> bool:
        return abs(self.floquet - 1.0) <= NEUTRAL_TOL

    @property
    def closure_error(self) -> float:
        d = circ_diff(self.samples[0], self.samples[-1])
        return float(np.hypot(*d))

    def to_dict(self) -> dict:
        return {"period": self.period, "w1": self.winding[0], "w2": self.winding[1],
                "phase_class": self.phase_class.value, "floquet": self.floquet,
                "stable": bool(self.stable),
                "samples": [[float(a), float(b)] for a, b in self.samples]}


# ------------------------------------------------------------------ return map

def next_section_level(lift: float, direction: int = 1) -> float:
    """The next lift of the section angle strictly ahead in the direction of motion.

    A start lying on a level (up to rounding) is not counted as a crossing.
    """
    u = (lift - SECTION) / TWO_PI
    n = round(u)
    if abs(u - n) < 1e-12:
        return SECTION + TWO_PI * (n + (1 if direction > 0 else -1))
    return SECTION + TWO_PI * (math.floor(u) + 1 if direction > 0 else math.ceil(u) - 1)


class ReturnMap:
    """First return to ``phi1 = pi`` as a function of the lifted ``phi2``.

    Orbits captured by a stable equilibrium never come back; for those
    :meth:`__call__` returns ``None`` and records the equilibrium index in
    :attr:`last_capture`.  Orbits that come to rest elsewhere (on the stable
    manifold of a saddle, say) record the nearest equilibrium the same way.
    """

    def __init__(self, p: Params, settings: IntegratorSettings | None = None,
                 equilibria: list[Equilibrium] | None = None, budget: float | None = None):
        self.p = p
        self.settings = settings or IntegratorSettings()
        if equilibria is None:
            equilibria = find_equilibria(p)
        self.equilibria = equilibria
        self.stable_idx = [i for i, e in enumerate(equilibria) if e.kind.stable]
        self.stable_pts = np.array([equilibria[i].point for i in self.stable_idx]).reshape(-1, 2)
        self.capture_radius = capture_radius(equilibria)
        # in reversed time the unstable equilibria are the absorbing ones
        self.unstable_idx = [i for i, e in enumerate(equilibria) if e.kind.unstable]
        self.unstable_pts = np.array([equilibria[i].point
                                      for i in self.unstable_idx]).reshape(-1, 2)
        self.capture_radius_back = capture_radius(equilibria, unstable=True)
        self.budget = self.settings.t_max if budget is None else budget
        self.last_time = float("nan")
        self.last_capture: int | None = None

    def run(self, lifts, direction: int = 1):
        """Follow an arbitrary state to the next section crossing (or capture)."""
        y = np.asarray(lifts, dtype=float)
        level = next_section_level(y[0], direction)
        fwd = direction > 0
        res = run_until(y, self.p, self.settings, self.budget, component=0, target=level,
                        direction=direction,
                        equilibria=self.stable_pts if fwd else self.unstable_pts,
                        capture_radius=self.capture_radius if fwd else self.capture_radius_back,
                        speed_tol=STALL_SPEED)
        return res

    def __call__(self, x: float, direction: int = 1) -> float | None:
        res = self.run([SECTION, x], direction)
        self.last_time = res.t
        self.last_capture = None
        if res.status == "crossed":
            return float(res.lifts[1])
        if res.status == "captured":
            idx = self.stable_idx if direction > 0 else self.unstable_idx
            self.last_capture = idx[res.eq_index]
        elif res.status == "stalled":
            self.last_capture = nearest_equilibrium(res.lifts, self.equilibria)
        return None


def nearest_equilibrium(y, equilibria: list[Equilibrium], radius: float = 1e-3) -> int | None:
    """Index of the equilibrium within ``radius`` of ``y``, if any."""
    best, best_d = None, radius
    for i, e in enumerate(equilibria):
        d = float(np.hypot(*circ_diff(np.asarray(y)[:2], e.point)))
        if d < best_d:
            best, best_d = i, d
    return best


def capture_radius(equilibria: list[Equilibrium], unstable: bool = False) -> float:
    """Ball around stable equilibria treated as absorbed: small against the
    distance to any other equilibrium so it lies inside the basin.

    ``unstable=True`` gives the same for the unstable equilibria, which
    absorb orbits in reversed time.
    """
    r = 1e-3
    pts = [e.point for e in equilibria]
    for e in equilibria:
        if not (e.kind.unstable if unstable else e.kind.stable):
            continue
        for q in pts:
            dd = float(np.hypot(*circ_diff(e.point, q)))
            if dd > 0:
                r = min(r, 0.1 * dd)
    return r


# ------------------------------------------------------------------ cycle objects

def _phase_errors(samples: np.ndarray) -> tuple[float, float]:
    body = samples[:-1]
    n = len(body)
    inph = float(np.max(circ_dist(body[:, 0], body[:, 1])))
    shifted = np.roll(body[:, 1], -(n // 2))
    anti = float(np.max(circ_dist(body[:, 0], shifted)))
    return inph, anti


def classify_cycle(c: LimitCycle) -> PhaseClass:
    """In-phase if the phases coincide, anti-phase if they agree after a half-period shift."""
    inph, anti = _phase_errors(np.asarray(c.samples))
    if inph < PHASE_TOL:
        return PhaseClass.IN_PHASE
    if anti < PHASE_TOL:
        return PhaseClass.ANTI_PHASE
    return PhaseClass.OTHER


def floquet_multiplier(c: LimitCycle | float, p: Params, h: float = FLOQUET_STEP,
                       settings: IntegratorSettings | None = None, direction: int = 1) -> float:
    """Slope of the return map at the cycle's section point (centred difference).

    With ``direction=-1`` the slope of the reversed-time map is taken and
    inverted, which stays accurate for strongly repelling cycles.
    """
    x = c.section_point if isinstance(c, LimitCycle) else float(c)
    rmap = ReturnMap(p, settings or _FINE, equilibria=[])
    hi = rmap(x + h, direction)
    lo = rmap(x - h, direction)
    if hi is None or lo is None:
        return float("nan")
    slope = (hi - lo) / (2.0 * h)
    return slope if direction > 0 else 1.0 / slope


def build_cycle(x: float, p: Params, settings: IntegratorSettings | None = None,
                with_floquet: bool = True, n_samples: int = N_SAMPLES,
                direction: int = 1) -> LimitCycle:
    """Assemble a :class:`LimitCycle` through the section point ``(pi, x)``.

    Repelling cycles should be built with ``direction=-1``: the orbit is
    then integrated in reversed time, where it is attracting.
    """
    settings = settings or IntegratorSettings()
    rmap = ReturnMap(p, settings, equilibria=[])
    xn = rmap(x, direction)
    if xn is None:
        raise Undecided(f"orbit through section point {x} does not return")
    period = rmap.last_time
    tr = integrate(np.array([SECTION, x]), p, settings, t_end=period, direction=direction)
    ts = np.linspace(0.0, period, n_samples + 1)
    if direction < 0:
        ts = period - ts  # backward elapsed time, so samples run forward in time
    lifts = tr.sample(ts)
    w2 = int(round(direction * (xn - x) / TWO_PI))
    c = LimitCycle(period=period, winding=(1, w2), samples=wrap(lifts), section_point=wrap(x))
    c.phase_class = classify_cycle(c)
    if with_floquet:
        c.floquet = floquet_multiplier(c, p, direction=direction)
    return c


# ------------------------------------------------------------------ detection

def _steffensen(rmap: ReturnMap, x: float):
    """One accelerated update for the fixed point of ``P(x) - 2 pi m``.

    Returns ``(x_new, residual, m)`` or ``None`` if the orbit is captured; the
    winding ``m`` is read off the first return.
    """
    x1 = rmap(x)
    if x1 is None:
        return None
    m = int(round((x1 - x) / TWO_PI))
    x1 -= TWO_PI * m
    resid = abs(x1 - x)
    if resid < FIXED_POINT_TOL:
        return x1, resid, m
    x2 = rmap(x1)
    if x2 is None:
        return None
    x2 -= TWO_PI * m
    denom = x2 - 2.0 * x1 + x
    xa = x - (x1 - x) ** 2 / denom if denom != 0.0 else x2
    # fall back to the plain iterate when the extrapolation jumps too far
    if not math.isfinite(xa) or abs(xa - x2) > 0.5:
        xa = x2
    return xa, resid, m


def detect_cycle(s0, p: Params, settings: IntegratorSettings | None = None,
                 equilibria: list[Equilibrium] | None = None,
                 with_floquet: bool = True) -> LimitCycle | None:
    """Follow the orbit of ``s0`` to its attractor.

    Returns the attracting cycle, or ``None`` when the orbit settles on an
    equilibrium.  Raises :class:`Undecided` when neither happens by ``t_max``.
    """
    settings = settings or IntegratorSettings()
    rmap = ReturnMap(p, settings, equilibria)
    y = np.asarray(s0.lifts() if isinstance(s0, TorusState) else s0, dtype=float)

    # transient, with early exit on capture
    res = run_until(y, p, settings, settings.t_transient, equilibria=rmap.stable_pts,
                    capture_radius=rmap.capture_radius, speed_tol=1e-8)
    if res.status in ("captured", "stalled"):
        return None
    elapsed = res.t
    res = rmap.run(res.lifts)
    if res.status in ("captured", "stalled"):
        return None
    if res.status != "crossed":
        raise Undecided(f"no section crossing within t_max from {s0}")
    elapsed += res.t
    x = wrap(float(res.lifts[1]))
    start = elapsed
    while True:
        out = _steffensen(rmap, x)
        if out is None:
            return None
        xn, resid, _ = out
        elapsed += rmap.last_time * (1 if resid < FIXED_POINT_TOL else 2)
        x = wrap(xn)
        if resid < FIXED_POINT_TOL:
            break
        if elapsed - start > settings.t_max:
            raise Undecided(f"return map did not converge within t_max from {s0}")
    return build_cycle(x, p, settings, with_floquet=with_floquet)


@dataclass
class CycleScan:
    """Fixed points of the return map found on a grid of section points."""

    grid: np.ndarray
    images: np.ndarray  # lifted P(x), nan where captured
    captures: list  # equilibrium index for captured points, else None
    cycles: list = field(default_factory=list)
    neutral_band: bool = False


def _scan(rmap: ReturnMap, grid: np.ndarray, direction: int):
    images = np.full(len(grid), np.nan)
    captures: list = [None] * len(grid)
    for i, x in enumerate(grid):
        v = rmap(x, direction)
        if v is None:
            captures[i] = rmap.last_capture
        else:
            images[i] = v
    return images, captures


def _fixed_points(rmap: ReturnMap, grid: np.ndarray, images: np.ndarray,
                  direction: int) -> list[tuple[float, int, bool]]:
    """Roots of ``P(x) - x - 2 pi m`` bracketed between neighbouring scan points.

    Returns ``(x, m, neutral)``; a bracket where the displacement vanishes at
    both ends is reported as part of a neutral band.
    """
    n = len(grid)
    disp = images - grid
    roots = []
    for i in range(n):
        j = (i + 1) % n
        if np.isnan(disp[i]) or np.isnan(disp[j]):
            continue
        xa, xb = grid[i], grid[i] + TWO_PI / n
        da, db = disp[i], disp[j]
        for m in range(int(math.floor(min(da, db) / TWO_PI)),
                       int(math.ceil(max(da, db) / TWO_PI)) + 1):
            fa, fb = da - TWO_PI * m, db - TWO_PI * m
            if abs(fa) < NEUTRAL_TOL and abs(fb) < NEUTRAL_TOL:
                roots.append((xa, m, True))
                continue
            if fa == 0.0:
                roots.append((xa, m, False))
            elif fa * fb < 0.0:
                def g(x, m=m):
                    v = rmap(x, direction)
                    if v is None:
                        raise Undecided("captured inside bracket")
                    return v - x - TWO_PI * m
                try:
                    r = brentq(g, xa, xb, xtol=1e-12, rtol=1e-13)
                except Undecided:
                    continue
                roots.append((r, m, False))
    roots.extend(_orphan_runs(rmap, grid, disp, roots, direction))
    return roots


def _attract(rmap: ReturnMap, x: float, direction: int, max_iter: int = 200,
             tol: float = 1e-9) -> tuple[float, int] | None:
    """Iterate the map from ``x``; return ``(x, m)`` if it settles on a fixed point."""
    for _ in range(max_iter):
        v = rmap(x, direction)
        if v is None:
            return None
        m = round((v - x) / TWO_PI)
        step = v - x - TWO_PI * m
        x = x + step
        if abs(step) < tol:
            break
    else:
        return None

    def g(y):
        v = rmap(y, direction)
        if v is None:
            raise Undecided("captured near fixed point")
        return v - y - TWO_PI * m

    h = 1e-6
    try:
        ga, gb = g(x - h), g(x + h)
        if ga * gb < 0.0:
            x = brentq(g, x - h, x + h, xtol=1e-12, rtol=1e-13)
    except Undecided:
        pass
    return x, m


def _orphan_runs(rmap: ReturnMap, grid: np.ndarray, disp: np.ndarray, roots: list,
                 direction: int) -> list[tuple[float, int, bool]]:
    """Fixed points whose basin on the section is narrower than the scan spacing.

    A run of returning scan points flanked by captured ones can hold an
    attracting fixed point that no pair of neighbours brackets.  Iterating the
    map from the run finds it.
    """
    n = len(grid)
    ok = ~np.isnan(disp)
    if ok.all() or not ok.any():
        return []
    spacing = TWO_PI / n
    start = int(np.flatnonzero(~ok)[0])
    runs, cur = [], []
    for k in range(1, n + 1):
        i = (start + k) % n
        if ok[i]:
            cur.append(i)
        elif cur:
            runs.append(cur)
            cur = []
    found = []
    for run in runs:
        lo = grid[run[0]] - spacing
        width = spacing * (len(run) + 1)
        if any(np.mod(r[0] - lo, TWO_PI) <= width for r in roots + found):
            continue
        hit = _attract(rmap, float(grid[run[len(run) // 2]]), direction)
        # the iteration may land on a fixed point that is already known
        if hit is not None and all(circ_dist(hit[0], r[0]) > 1e-6 for r in roots + found):
            found.append((wrap(hit[0]), hit[1], False))
    return found


def scan_return_map(p: Params, settings: IntegratorSettings | None = None,
                    equilibria: list[Equilibrium] | None = None, n: int = 64,
                    build: bool = True) -> CycleScan:
    """Evaluate the return map on ``n`` section points and refine every fixed point.

    Stable, unstable and neutral cycles are all found here, which plain
    forward iteration cannot do.  When some scan points fail to return, a
    strongly repelling cycle may hide between them; the map is then scanned
    again in reversed time, where such cycles attract.  With ``build=False``
    the cycles are left as ``(x, m, neutral, direction)`` tuples.
    """
    settings = settings or IntegratorSettings()
    if equilibria is None:
        equilibria = find_equilibria(p)
    rmap = ReturnMap(p, settings, equilibria)
    grid = np.arange(n) * (TWO_PI / n)
    images, captures = _scan(rmap, grid, 1)
    scan = CycleScan(grid, images, captures)
    if p.gamma + p.d < 1.0:
        return scan

    roots = [(x, m, neu, 1) for x, m, neu in _fixed_points(rmap, grid, images, 1)]
    if np.any(np.isnan(images)):
        back, _ = _scan(rmap, grid, -1)
        for x, m, neu in _fixed_points(rmap, grid, back, -1):
            if neu or any(circ_dist(x, r[0]) < 1e-6 for r in roots):
                continue
            roots.append((x, -m, False, -1))
    neutral = [r for r in roots if r[2]]
    scan.neutral_band = len(neutral) > 0
    # a neutral band is one family of closed orbits; keep one representative
    kept = [r for r in roots if not r[2]]
    if neutral:
        kept = [r for r in kept if min(circ_dist(r[0], q[0]) for q in neutral) > TWO_PI / n]
        kept.append(neutral[len(neutral) // 2])
    if build:
        for x, _, _, direction in sorted(kept):
            try:
                scan.cycles.append(build_cycle(wrap(x), p, settings, direction=direction))
            except Undecided:
                continue
    else:
        scan.cycles = sorted(kept)
    return scan


def find_cycles(p: Params, settings: IntegratorSettings | None = None,
                equilibria: list[Equilibrium] | None = None, n: int = 64) -> list[LimitCycle]:
    """All cycles crossing ``phi1 = pi`` once per period, any stability."""
    return scan_return_map(p, settings, equilibria, n).cycles


def _to_polyline(pts: np.ndarray, curve: np.ndarray, k: int = 8) -> np.ndarray:
    """Distance from each point to the polyline through ``curve`` (torus metric).

    Candidate segments are those touching the ``k`` nearest vertices.
    """
    tree = cKDTree(wrap(curve), boxsize=TWO_PI)
    k = min(k, len(curve))
    _, idx = tree.query(wrap(pts), k=k)
    idx = np.asarray(idx).reshape(len(pts), k)
    last = len(curve) - 2
    seg_idx = np.concatenate([np.clip(idx - 1, 0, last), np.clip(idx, 0, last)], axis=1)
    start = curve[seg_idx]
    seg = circ_diff(curve[seg_idx + 1], start)
    seg_len2 = np.maximum(np.sum(seg * seg, axis=2), 1e-300)
    rel = circ_diff(pts[:, None, :], start)
    s = np.clip(np.sum(rel * seg, axis=2) / seg_len2, 0.0, 1.0)
    gap = rel - s[..., None] * seg
    return np.sqrt(np.min(np.sum(gap * gap, axis=2), axis=1))


def refine_closed(curve: np.ndarray, factor: int) -> np.ndarray:
    """Resample a closed orbit sampled uniformly in time ``factor`` times finer.

    A periodic cubic spline through the unwrapped samples (winding drift
    removed) replaces the chords, whose sagitta dominates near sharp turns.
    The first and last rows must be the same point of the orbit.
    """
    lift = np.unwrap(np.asarray(curve, dtype=float), axis=0)
    drift = lift[-1] - lift[0]
    s = np.linspace(0.0, 1.0, len(lift))
    periodic = lift - s[:, None] * drift
    periodic[-1] = periodic[0]
    spline = CubicSpline(s, periodic, bc_type="periodic")
    t = np.linspace(0.0, 1.0, (len(lift) - 1) * factor + 1)
    return wrap(spline(t) + t[:, None] * drift)


def hausdorff(a: np.ndarray, b: np.ndarray, refine: int = 1) -> float:
    """Hausdorff distance between two sampled curves on the torus.

    Points of each curve are measured against the piecewise-linear
    interpolant of the other, so the result does not depend on where the
    samples happen to fall along the orbit. ``refine > 1`` first resamples
    both curves with :func:`refine_closed`; use it for closed orbits sampled
    uniformly in time.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if refine > 1:
        a, b = refine_closed(a, refine), refine_closed(b, refine)
    return float(max(_to_polyline(a, b).max(), _to_polyline(b, a).max()))


def cycles_to_json(cycles: list[LimitCycle], path=None, **extra) -> str:
    doc = dict(extra)
    doc["cycles"] = [c.to_dict() for c in cycles]
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


# ------------------------------------------------------------------ integral condition

def _crosses(lo: float, hi: float, angle: float) -> bool:
    """Does the arc [lo, hi] contain ``angle`` modulo 2 pi?"""
    m = math.ceil((lo - angle) / TWO_PI)
    return angle + TWO_PI * m <= hi


def _check_preconditions(p: Params) -> None:
    if p.gamma + p.d < 1.0:
        raise IntegralSingular(f"gamma + d = {p.gamma + p.d} < 1: no cycles possible")
    if not 0.0 < p.gamma < 1.0:
        raise IntegralSingular("gamma must lie in (0, 1) for the integral condition")
    a = math.asin(p.gamma)
    lo, hi = p.alpha, p.alpha + p.delta
    for zero in (a, math.pi - a):
        if _crosses(lo, hi, zero):
            raise IntegralSingular(f"gamma - sin(phi) vanishes on the arc [{lo}, {hi}]")


def antiphase_condition_quadrature(p: Params) -> float:
    """Transit time of the excited unit minus transit time through the window.

    Positive when crossing the rest region with full input takes longer than
    the partner spends inside its activation arc.
    """
    _check_preconditions(p)
    g = p.gamma
    a = math.asin(g)
    gd = g + p.d
    if gd == 1.0:
        return math.inf
    lhs, _ = quad(lambda x: 1.0 / (gd - math.sin(x)), a, math.pi - a,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    rhs, _ = quad(lambda x: 1.0 / (g - math.sin(x)), p.alpha, p.alpha + p.delta,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return lhs - rhs


def antiphase_condition_closed_form(p: Params) -> float:
    """Closed-form antiderivatives of both transit times.

    Uses the tangent half-angle substitution: ``arctan`` for the supercritical
    rotator and ``arctanh`` for the subcritical one.  The ``arctanh`` form is
    only valid while ``|1 - gamma tan(phi/2)| < sqrt(1 - gamma^2)`` and the arc
    avoids ``phi = pi``; otherwise :class:`BranchInvalid` is raised.
    """
    _check_preconditions(p)
    g = p.gamma
    gd = g + p.d
    if gd == 1.0:
        return math.inf
    a = math.asin(g)
    s = math.sqrt(gd * gd - 1.0)
    lhs = 2.0 / s * (math.atan((1.0 - gd * math.tan(a / 2)) / s)
                     - math.atan((1.0 - gd / math.tan(a / 2)) / s))
    lo, hi = p.alpha, p.alpha + p.delta
    if _crosses(lo, hi, math.pi):
        raise BranchInvalid("arc crosses the tan(phi/2) singularity at phi = pi")
    c = math.sqrt(1.0 - g * g)
    u_hi = (1.0 - g * math.tan(hi / 2)) / c
    u_lo = (1.0 - g * math.tan(lo / 2)) / c
    if not (-1.0 < u_hi < 1.0 and -1.0 < u_lo < 1.0):
        raise BranchInvalid(f"arctanh arguments {u_lo}, {u_hi} outside (-1, 1)")
    rhs = 2.0 / c * (math.atanh(u_hi) - math.atanh(u_lo))
    return lhs - rhs


def antiphase_condition(p: Params) -> float:
    """Closed form where its branch is valid, quadrature otherwise."""
    try:
        return antiphase_condition_closed_form(p)
    except BranchInvalid:
        return antiphase_condition_quadrature(p)
