"""Attractor inventories, regime labels and parameter-plane sweeps.

Labels:

* ``A`` in-phase spiking: a stable in-phase cycle is the only attractor reached;
* ``B`` excitable: only stable equilibria are reached;
* ``C`` anti-phase spiking: a stable anti-phase cycle and no stable equilibrium;
* ``D`` bistable: a stable anti-phase cycle together with a stable equilibrium;
* ``OTHER`` anything else, including neutral families of closed orbits;
* ``UNDECIDED`` no probe settled on an attractor within the budget.

An initial condition is followed until it is captured by a stable
equilibrium or reaches the section ``phi1 = pi``.  From there its fate is
read off the scanned return map: each bracket between two scan points either
contains an attracting fixed point, touches a captured scan point, or is sent
by the interpolated map to another bracket.  Following these pointers costs
no further integration.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .cycles import (NEUTRAL_TOL, STALL_SPEED, CycleScan, LimitCycle, PhaseClass,
                     capture_radius, nearest_equilibrium, next_section_level, scan_return_map)
from .equilibria import Equilibrium, Kind, find_equilibria
from .integrator import IntegratorSettings, StepSizeUnderflow, run_until
from .model import TWO_PI, Params, circ_dist, wrap
from .portrait import BracketInvalid

__all__ = [
    "Label",
    "RegimeReport",
    "SweepGrid",
    "UNDECIDED",
    "BracketInvalid",
    "classify_regime",
    "sweep_plane",
    "locate_boundary",
    "symmetry_fold",
    "sweep_settings",
]

UNDECIDED = "undecided"
SADDLE_PROBE = 1e-3


class Label(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    OTHER = "OTHER"
    UNDECIDED = "UNDECIDED"  # no attractor settled within the budget, or the cell failed


def sweep_settings(p: Params) -> IntegratorSettings:
    """Looser tolerances for sweeps; landmark checks agree with the defaults."""
    return IntegratorSettings(rel_tol=1e-8, abs_tol=1e-8, max_step=1.0 / p.k)


@dataclass
class RegimeReport:
    label: Label
    stable_equilibria: int
    stable_cycles: list  # (phase class, period)
    basin_votes: dict
    equilibria: list = field(default_factory=list, repr=False)
    cycles: list = field(default_factory=list, repr=False)
    reached: list = field(default_factory=list)
    neutral: bool = False

    @property
    def inventory(self) -> tuple[int, int, int, int, int]:
        """(equilibria, saddles, in-phase, anti-phase, other cycles), stability ignored."""
        cls = [c.phase_class for c in self.cycles]
        return (len(self.equilibria), sum(e.kind is Kind.SADDLE for e in self.equilibria),
                cls.count(PhaseClass.IN_PHASE), cls.count(PhaseClass.ANTI_PHASE),
                cls.count(PhaseClass.OTHER))

    def to_dict(self) -> dict:
        return {"label": self.label.value, "stable_equilibria": self.stable_equilibria,
                "stable_cycles": [[c, t] for c, t in self.stable_cycles],
                "basin_votes": dict(sorted(self.basin_votes.items())),
                "reached": list(self.reached), "neutral": self.neutral,
                "equilibria": [e.to_dict() for e in self.equilibria],
                "cycles": [{k: v for k, v in c.to_dict().items() if k != "samples"}
                           for c in self.cycles]}


# ------------------------------------------------------------------ fates on the section

class _SectionFates:
    """Attractor reached from each point of the section, from a return-map scan.

    A section point is iterated through the piecewise-linear interpolant of
    the scanned map until it comes within half a scan spacing of an
    attracting (or neutral) fixed point, or falls next to a scan point that
    was captured by an equilibrium.
    """

    MAX_ITER = 20000

    def __init__(self, scan: CycleScan | None, eq_ids: dict[int, str]):
        self.scan = scan
        self.eq_ids = eq_ids
        if scan is None:
            return
        self.n = len(scan.grid)
        self.width = TWO_PI / self.n
        self.grid = [float(x) for x in scan.grid]
        self.disp = [float(x) for x in scan.images - scan.grid]
        self.caps = [None if c is None else eq_ids.get(c, UNDECIDED) for c in scan.captures]
        self.targets = [(wrap(c.section_point), f"cycle:{j}") for j, c in enumerate(scan.cycles)
                        if c.floquet < 1.0 + NEUTRAL_TOL]
        self.all_cycles = [(wrap(c.section_point), f"cycle:{j}") for j, c in enumerate(scan.cycles)]
        self.neutral_id = next((f"cycle:{j}" for j, c in enumerate(scan.cycles) if c.neutral), None)

    def _near(self, x: float, pts) -> str | None:
        half = 0.5 * self.width
        for xs, cid in pts:
            d = abs(x - xs)
            if min(d, TWO_PI - d) < half:
                return cid
        return None

    def __call__(self, x: float) -> str:
        if self.scan is None:
            return UNDECIDED
        x = float(wrap(x))
        n, w = self.n, self.width
        for _ in range(self.MAX_ITER):
            hit = self._near(x, self.targets)
            if hit:
                return hit
            b = int(x // w) % n
            j = (b + 1) % n
            cap = self.caps[b] or self.caps[j]
            if cap is not None:
                return cap
            da, db = self.disp[b], self.disp[j]
            if da != da or db != db:  # nan: no return without capture
                return UNDECIDED
            t = (x - self.grid[b]) / w
            step = (1.0 - t) * da + t * db
            step -= TWO_PI * round(step / TWO_PI)
            if self.neutral_id and abs(step) < NEUTRAL_TOL:
                return self.neutral_id
            if abs(step) < 1e-12:
                # sitting on a repelling fixed point (e.g. on an invariant line)
                return self._near(x, self.all_cycles) or UNDECIDED
            x = (x + step) % TWO_PI
        return UNDECIDED

    def grid_fates(self) -> list[str]:
        out = []
        if self.scan is None:
            return out
        for i in range(self.n):
            cap = self.scan.captures[i]
            if cap is not None:
                out.append(self.eq_ids.get(cap, UNDECIDED))
            elif not np.isnan(self.scan.images[i]):
                out.append(self(self.scan.images[i]))
        return out


def _unwind(d: float) -> float:
    return d - TWO_PI * round(d / TWO_PI)


# ------------------------------------------------------------------ probes

def _probes(eqs: list[Equilibrium], p: Params, ic_grid: int) -> np.ndarray:
    h = TWO_PI / ic_grid
    g = (np.arange(ic_grid) + 0.5) * h
    pts = [(a, b) for a in g for b in g]
    pts += [((i + 0.25) * h,) * 2 for i in range(ic_grid)]
    for e in eqs:
        if e.kind is Kind.SADDLE:
            _, (_, vu) = e.eigvecs(p)
            pts += [tuple(e.point + SADDLE_PROBE * vu), tuple(e.point - SADDLE_PROBE * vu)]
    return np.array(pts)


def _resolve(y0, p: Params, settings: IntegratorSettings, eqs, stable_idx, radius,
             fates: _SectionFates) -> str:
    y = np.asarray(y0, dtype=float)
    stable_pts = np.array([eqs[i].point for i in stable_idx]).reshape(-1, 2)
    event = {} if fates.scan is None else {"component": 0, "target": next_section_level(y[0])}
    try:
        res = run_until(y, p, settings, settings.t_max, equilibria=stable_pts,
                        capture_radius=radius, speed_tol=STALL_SPEED, **event)
    except StepSizeUnderflow:
        return UNDECIDED
    if res.status == "captured":
        return f"eq:{stable_idx[res.eq_index]}"
    if res.status == "crossed":
        return fates(res.lifts[1])
    if res.status == "stalled":
        i = nearest_equilibrium(res.lifts, eqs)
        return UNDECIDED if i is None else f"eq:{i}"
    return UNDECIDED


def _attracting(rid: str, eqs, cycles) -> bool:
    kind, i = rid.split(":")
    if kind == "eq":
        return eqs[int(i)].kind.stable
    return cycles[int(i)].floquet < 1.0 + NEUTRAL_TOL


def _label(reached: set[str], eqs: list[Equilibrium], cycles: list[LimitCycle]) -> tuple[Label, bool]:
    if not reached:
        return Label.UNDECIDED, False
    has_eq = any(r.startswith("eq:") for r in reached)
    cyc = [cycles[int(r.split(":")[1])] for r in reached if r.startswith("cycle:")]
    neutral = any(c.neutral for c in cyc)
    kinds = {c.phase_class for c in cyc if c.stable}
    if neutral or PhaseClass.OTHER in kinds:
        return Label.OTHER, neutral
    anti = PhaseClass.ANTI_PHASE in kinds
    inph = PhaseClass.IN_PHASE in kinds
    if anti and not inph:
        return (Label.D if has_eq else Label.C), False
    if inph and not anti and not has_eq:
        return Label.A, False
    if has_eq and not cyc:
        return Label.B, False
    return Label.OTHER, False


def classify_regime(p: Params, ic_grid: int = 16, settings: IntegratorSettings | None = None,
                    scan_points: int = 64) -> RegimeReport:
    """Attractors reached from a lattice of initial conditions, and the regime label.

    Probes are an ``ic_grid`` x ``ic_grid`` lattice, ``ic_grid`` points on the
    diagonal and two points on the unstable direction of every saddle; their
    fractions make up ``basin_votes``.  The scan points of the return map are
    followed as well, so attractors whose basins miss the lattice are still
    reported as reached.
    """
    if ic_grid < 4:
        raise ValueError("ic_grid must be at least 4")
    settings = settings or IntegratorSettings()
    eqs = find_equilibria(p)
    stable_idx = [i for i, e in enumerate(eqs) if e.kind.stable]
    radius = capture_radius(eqs)

    # below the threshold nothing passes phi = pi/2 and no orbit winds
    if p.gamma + p.d < 1.0:
        scan = None
        cycles: list[LimitCycle] = []
    else:
        scan = scan_return_map(p, settings, eqs, n=scan_points)
        cycles = scan.cycles
    fates = _SectionFates(scan, {i: f"eq:{i}" for i in range(len(eqs))})

    votes: dict[str, int] = {}
    probes = _probes(eqs, p, ic_grid)
    for y0 in probes:
        f = _resolve(y0, p, settings, eqs, stable_idx, radius, fates)
        votes[f] = votes.get(f, 0) + 1
    reached = {k for k in votes if k != UNDECIDED} | {f for f in fates.grid_fates() if f != UNDECIDED}
    reached = {r for r in reached if _attracting(r, eqs, cycles)}
    label, neutral = _label(reached, eqs, cycles)
    total = len(probes)
    stable_cycles = [(c.phase_class.value, c.period) for c in cycles if c.stable]
    return RegimeReport(label=label, stable_equilibria=len(stable_idx),
                        stable_cycles=stable_cycles,
                        basin_votes={k: v / total for k, v in sorted(votes.items())},
                        equilibria=eqs, cycles=cycles, reached=sorted(reached), neutral=neutral)


# ------------------------------------------------------------------ sweeps

@dataclass
class SweepGrid:
    axis1: str
    axis2: str
    range1: tuple[float, float]
    range2: tuple[float, float]
    resolution: tuple[int, int]
    labels: np.ndarray  # (n1, n2) of label strings
    n_stable_eq: np.ndarray
    n_cycles: np.ndarray
    inventory: np.ndarray  # (n1, n2, 5), -1 where undecided
    params: Params
    settings: IntegratorSettings
    ic_grid: int = 4
    seed: int = 0

    @property
    def values1(self) -> np.ndarray:
        return _axis_values(self.range1, self.resolution[0])

    @property
    def values2(self) -> np.ndarray:
        return _axis_values(self.range2, self.resolution[1])

    def label_set(self) -> set[str]:
        return set(np.unique(self.labels).tolist())

    def config(self) -> dict:
        return {"axis1": self.axis1, "axis2": self.axis2, "range1": list(self.range1),
                "range2": list(self.range2), "resolution": list(self.resolution),
                "ic_grid": self.ic_grid, "seed": self.seed, "params": self.params.to_dict(),
                "settings": self.settings.to_dict()}

    def to_csv(self, path) -> None:
        """Cells in row-major order, plus a JSON sidecar next to the CSV."""
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([self.axis1, self.axis2, "label", "n_stable_eq", "n_cycles"])
            for i, a in enumerate(self.values1):
                for j, b in enumerate(self.values2):
                    w.writerow([format(float(a), ".17g"), format(float(b), ".17g"),
                                self.labels[i, j], int(self.n_stable_eq[i, j]),
                                int(self.n_cycles[i, j])])
        path.with_suffix(".json").write_text(json.dumps(self.config(), indent=2, sort_keys=True)
                                             + "\n", encoding="utf-8")


def _axis_values(rng, n: int) -> np.ndarray:
    lo, hi = rng
    return lo + (hi - lo) * np.arange(n) / n


def _cell(args):
    p, ic_grid, settings, scan_points = args
    try:
        r = classify_regime(p, ic_grid, settings, scan_points)
    except Exception:  # noqa: BLE001 - a failed cell is recorded, not fatal
        return Label.UNDECIDED.value, -1, -1, (-1,) * 5
    return r.label.value, r.stable_equilibria, len(r.cycles), r.inventory


def sweep_plane(p: Params, resolution=(64, 64), alpha_range=(0.0, TWO_PI),
                delta_range=(0.0, TWO_PI), ic_grid: int = 4,
                settings: IntegratorSettings | None = None, jobs: int = 1, seed: int = 0,
                scan_points: int = 64, progress=None) -> SweepGrid:
    """Classify every cell of an (alpha, delta) grid (left endpoints, ranges half-open).

    The computation is deterministic; ``seed`` is recorded for provenance only.
    """
    for lo, hi in (alpha_range, delta_range):
        if not (0.0 <= lo < hi <= TWO_PI):
            raise ValueError("ranges must lie within [0, 2*pi)")
    settings = settings or sweep_settings(p)
    n1, n2 = resolution
    a_vals, d_vals = _axis_values(alpha_range, n1), _axis_values(delta_range, n2)
    tasks = [(p.replace(alpha=a, delta=d), ic_grid, settings, scan_points)
             for a in a_vals for d in d_vals]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_cell, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = []
        for k, t in enumerate(tasks):
            results.append(_cell(t))
            if progress is not None:
                progress(k + 1, len(tasks))
    labels = np.array([r[0] for r in results], dtype=object).reshape(n1, n2)
    return SweepGrid("alpha", "delta", tuple(alpha_range), tuple(delta_range), (n1, n2),
                     labels, np.array([r[1] for r in results]).reshape(n1, n2),
                     np.array([r[2] for r in results]).reshape(n1, n2),
                     np.array([r[3] for r in results]).reshape(n1, n2, 5),
                     p, settings, ic_grid, seed)


# ------------------------------------------------------------------ boundaries

def locate_boundary(axis: str, bracket, p: Params, ic_grid: int = 16,
                    settings: IntegratorSettings | None = None, width: float = 1e-4,
                    detail: bool = False):
    """Bisect on the regime label until the bracket is narrower than ``width``.

    Returns the midpoint of the final bracket, or ``(midpoint, (label_lo,
    label_hi))`` with ``detail=True``.
    """
    if axis not in ("alpha", "delta", "d", "gamma", "k"):
        raise ValueError(f"unknown parameter axis {axis!r}")
    lo, hi = float(bracket[0]), float(bracket[1])

    def label(x):
        return classify_regime(p.replace(**{axis: x}), ic_grid, settings).label

    l_lo, l_hi = label(lo), label(hi)
    if l_lo == l_hi:
        raise BracketInvalid(f"label {l_lo.value} at both ends of {axis} in ({lo}, {hi})")
    while abs(hi - lo) > width:
        mid = 0.5 * (lo + hi)
        if label(mid) == l_lo:
            lo = mid
        else:
            hi = mid
    value = 0.5 * (lo + hi)
    return (value, (l_lo.value, l_hi.value)) if detail else value


def symmetry_fold(grid: SweepGrid, tol: float = 1e-9) -> float:
    """Fraction of comparable cells whose inventory differs from the mirrored cell.

    The mirror of ``(alpha, delta)`` is ``(pi - alpha - delta, delta)``.  Cells
    on an inventory boundary (a 4-neighbour with a different inventory) and
    undecided cells are not comparable.
    """
    if grid.axis1 != "alpha" or grid.axis2 != "delta":
        raise ValueError("symmetry_fold needs an (alpha, delta) grid")
    n1, n2 = grid.resolution
    inv = grid.inventory
    a_vals, d_vals = grid.values1, grid.values2
    full1 = np.isclose(grid.range1[0], 0.0) and np.isclose(grid.range1[1], TWO_PI)

    def interior(i, j):
        if inv[i, j, 0] < 0:
            return False
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if full1:
                a %= n1
            if grid.range2 == (0.0, TWO_PI):
                b %= n2
            if not (0 <= a < n1 and 0 <= b < n2):
                continue
            if not np.array_equal(inv[a, b], inv[i, j]):
                return False
        return True

    step = (grid.range1[1] - grid.range1[0]) / n1
    compared = mismatched = 0
    for i in range(n1):
        for j in range(n2):
            target = wrap(math.pi - a_vals[i] - d_vals[j])
            k = (target - grid.range1[0]) / step
            kr = int(round(k))
            if full1:
                kr %= n1
            elif not 0 <= kr < n1:
                continue
            if abs(wrap(grid.range1[0] + kr * step) - target) > tol and \
                    abs(abs(wrap(grid.range1[0] + kr * step) - target) - TWO_PI) > tol:
                continue
            if not (interior(i, j) and interior(kr, j)):
                continue
            compared += 1
            if not np.array_equal(inv[i, j], inv[kr, j]):
                mismatched += 1
    return mismatched / compared if compared else 0.0
