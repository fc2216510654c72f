"""Equilibria of the coupled system: location, linear stability, census.

Roots are found by Newton's method from a uniform grid of seeds on the torus,
merged, and symmetrised under the swap ``(a, b) -> (b, a)``.  Diagonal roots
are additionally bracketed on the invariant diagonal, where the problem is
one dimensional.  The seed grid is refined until two successive sizes agree
on the number of roots.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .model import (TWO_PI, Params, TorusState, _coupling, _field, _jac,
                    circ_dist, eval_coupling, eval_coupling_derivative, jacobian,
                    vector_field, wrap)

__all__ = [
    "Kind",
    "EType",
    "Equilibrium",
    "EquilibriumCensus",
    "SeedGridTooCoarse",
    "IndexSumViolation",
    "find_equilibria",
    "classify_equilibrium",
    "census",
    "check_property4",
    "diagonal_function",
    "equilibria_to_json",
    "CENSUS_CONFIGURATIONS",
]

RESIDUAL_TOL = 1e-10
MERGE_TOL = 1e-6
DIAG_TOL = 1e-8
HYPERBOLIC_TOL = 1e-8

# (stable, unstable, saddle) setups enumerated for weak coupling
CENSUS_CONFIGURATIONS = frozenset({
    (1, 1, 2), (2, 1, 3), (1, 2, 3), (2, 2, 4), (3, 2, 5), (2, 3, 5),
    (3, 1, 4), (4, 2, 6), (4, 1, 5), (1, 3, 4), (2, 4, 6), (1, 4, 5),
})


class SeedGridTooCoarse(RuntimeError):
    pass


class IndexSumViolation(RuntimeError):
    pass


class Kind(str, Enum):
    STABLE_NODE = "stable-node"
    STABLE_FOCUS = "stable-focus"
    UNSTABLE_NODE = "unstable-node"
    UNSTABLE_FOCUS = "unstable-focus"
    SADDLE = "saddle"
    NON_HYPERBOLIC = "non-hyperbolic"

    @property
    def stable(self) -> bool:
        return self in (Kind.STABLE_NODE, Kind.STABLE_FOCUS)

    @property
    def unstable(self) -> bool:
        return self in (Kind.UNSTABLE_NODE, Kind.UNSTABLE_FOCUS)


class EType(str, Enum):
    DIAGONAL = "diagonal"
    OFF_DIAGONAL = "off-diagonal"


@dataclass(frozen=True)
class Equilibrium:
    state: TorusState
    eigenvalues: tuple[complex, complex] = (0j, 0j)
    kind: Kind | None = None
    etype: EType = EType.OFF_DIAGONAL

    @property
    def point(self) -> np.ndarray:
        return np.array([self.state.phi1, self.state.phi2])

    @property
    def is_saddle(self) -> bool:
        return self.kind is Kind.SADDLE

    def eigvecs(self, p: Params):
        """Real eigenpairs ``[(lambda, unit vector), ...]`` sorted by eigenvalue."""
        w, v = np.linalg.eig(jacobian(self.point, p))
        order = np.argsort(w.real)
        return [(float(w[i].real), np.real(v[:, i]) / np.linalg.norm(np.real(v[:, i])))
                for i in order]

    def to_dict(self) -> dict:
        l1, l2 = self.eigenvalues
        return {"phi1": self.state.phi1, "phi2": self.state.phi2,
                "re_l1": float(np.real(l1)), "im_l1": float(np.imag(l1)),
                "re_l2": float(np.real(l2)), "im_l2": float(np.imag(l2)),
                "kind": self.kind.value if self.kind else None,
                "etype": self.etype.value}


class EquilibriumCensus(NamedTuple):
    n_stable: int
    n_unstable: int
    n_saddle: int
    n_nonhyperbolic: int = 0
    configuration: str | None = None

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.n_stable, self.n_unstable, self.n_saddle)


# ------------------------------------------------------------------ kernels

@njit(cache=True)
def _newton_grid(n, par, max_iter, step_tol, merge_tol):
    g, d, k, a, de = par
    merge2 = merge_tol * merge_tol
    out = np.full((n * n, 2), np.nan)
    h = TWO_PI / n
    m = 0
    for i in range(n):
        for j in range(n):
            x = (i + 0.5) * h
            y = (j + 0.5) * h
            ok = False
            for _ in range(max_iter):
                f1, f2 = _field(x, y, g, d, k, a, de)
                j11, j12, j21, j22 = _jac(x, y, g, d, k, a, de)
                det = j11 * j22 - j12 * j21
                if det == 0.0 or not math.isfinite(det):
                    break
                dx = -(j22 * f1 - j12 * f2) / det
                dy = -(-j21 * f1 + j11 * f2) / det
                # damp very long steps; the landscape is 2pi periodic
                nrm = math.sqrt(dx * dx + dy * dy)
                if nrm > 1.0:
                    dx /= nrm
                    dy /= nrm
                x += dx
                y += dy
                if nrm < step_tol:
                    ok = True
                    break
            if ok:
                x = x % TWO_PI
                y = y % TWO_PI
                f1, f2 = _field(x, y, g, d, k, a, de)
                if abs(f1) < 1e-10 and abs(f2) < 1e-10:
                    dup = False
                    for q in range(m):
                        d1 = (x - out[q, 0] + math.pi) % TWO_PI - math.pi
                        d2 = (y - out[q, 1] + math.pi) % TWO_PI - math.pi
                        if d1 * d1 + d2 * d2 < merge2:
                            dup = True
                            break
                    if not dup:
                        out[m, 0] = x
                        out[m, 1] = y
                        m += 1
    return out[:m]


# ------------------------------------------------------------------ helpers

def diagonal_function(phi, p: Params):
    """``gamma - sin(phi) + d window(phi)``: the field along the invariant diagonal."""
    return p.gamma - np.sin(phi) + p.d * eval_coupling(phi, p)


def _diagonal_roots(p: Params, n: int = 4096) -> list[float]:
    xs = np.linspace(0.0, TWO_PI, n + 1)
    fs = diagonal_function(xs, p)
    roots = []
    for i in range(n):
        if fs[i] == 0.0:
            roots.append(xs[i])
        elif fs[i] * fs[i + 1] < 0.0:
            roots.append(brentq(diagonal_function, xs[i], xs[i + 1], args=(p,),
                                xtol=1e-15, rtol=1e-15))
    return roots


def _merge(points: np.ndarray) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for pt in points:
        if not any(np.hypot(*((pt - q + math.pi) % TWO_PI - math.pi)) < MERGE_TOL for q in kept):
            kept.append(pt)
    return kept


def _polish(pt, p: Params) -> np.ndarray:
    x = np.array(pt, dtype=float)
    for _ in range(8):
        f = np.array(vector_field(x, p))
        try:
            dx = np.linalg.solve(jacobian(x, p), -f)
        except np.linalg.LinAlgError:
            break
        x = x + dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    return wrap(x)


def _canonical_roots(raw: np.ndarray, diag: list[float], p: Params) -> list[np.ndarray]:
    """Merge raw Newton roots with diagonal roots; force exact swap symmetry."""
    diag = [wrap(r) for r in diag]
    found: list[np.ndarray] = [np.array([r, r]) for r in diag]
    for pt in raw:
        if circ_dist(pt[0], pt[1]) < DIAG_TOL:
            r = 0.5 * (pt[0] + pt[1]) if abs(pt[0] - pt[1]) < math.pi else pt[0]
            if not any(circ_dist(r, q) < MERGE_TOL for q in diag):
                r = wrap(brentq(diagonal_function, r - 1e-6, r + 1e-6, args=(p,))) \
                    if diagonal_function(r - 1e-6, p) * diagonal_function(r + 1e-6, p) < 0 else r
                diag.append(r)
                found.append(np.array([r, r]))
            continue
        found.append(_polish(pt, p))
    merged = _merge(np.array(found)) if found else []
    out: list[np.ndarray] = []
    for pt in merged:
        if pt[0] == pt[1]:
            out.append(pt)
            continue
        a, b = sorted((float(pt[0]), float(pt[1])))
        # keep one representative per unordered pair, re-emit both orders
        cand = np.array([a, b])
        if not any(np.hypot(*((cand - q + math.pi) % TWO_PI - math.pi)) < MERGE_TOL for q in out):
            out.append(cand)
            out.append(np.array([b, a]))
    out.sort(key=lambda q: (q[0], q[1]))
    return out


def classify_equilibrium(e: Equilibrium | TorusState | np.ndarray, p: Params) -> Equilibrium:
    """Fill eigenvalues and stability kind from the Jacobian at the point."""
    if isinstance(e, Equilibrium):
        state = e.state
    else:
        state = TorusState.at(float(e[0]), float(e[1]))
    pt = np.array([state.phi1, state.phi2])
    w = np.linalg.eigvals(jacobian(pt, p))
    w = sorted(w, key=lambda z: (z.real, z.imag))
    re = np.array([z.real for z in w])
    if np.any(np.abs(re) < HYPERBOLIC_TOL):
        kind = Kind.NON_HYPERBOLIC
    elif abs(w[0].imag) > 0.0:
        kind = Kind.STABLE_FOCUS if re[0] < 0 else Kind.UNSTABLE_FOCUS
    elif re[0] < 0 < re[1]:
        kind = Kind.SADDLE
    elif re[1] < 0:
        kind = Kind.STABLE_NODE
    else:
        kind = Kind.UNSTABLE_NODE
    etype = EType.DIAGONAL if circ_dist(state.phi1, state.phi2) < DIAG_TOL else EType.OFF_DIAGONAL
    return Equilibrium(state, (complex(w[0]), complex(w[1])), kind, etype)


def _roots_at(p: Params, n: int, diag: list[float]) -> list[np.ndarray]:
    raw = _newton_grid(n, p.as_tuple(), 50, 1e-12, MERGE_TOL)
    return _canonical_roots(raw, list(diag), p)


def find_equilibria(p: Params, n: int = 64, max_n: int = 512) -> list[Equilibrium]:
    """All equilibria, classified, sorted lexicographically by (phi1, phi2).

    The seed grid starts at ``n`` and doubles until two successive grids agree
    on the root count; :class:`SeedGridTooCoarse` is raised if they still
    disagree at ``max_n``.
    """
    diag = _diagonal_roots(p)
    roots = _roots_at(p, n, diag)
    while True:
        finer = _roots_at(p, 2 * n, diag)
        if len(finer) == len(roots):
            break
        n *= 2
        roots = finer
        if 2 * n > max_n:
            raise SeedGridTooCoarse(
                f"seed grids {n // 2} and {n} disagree ({len(roots)} roots at {n})")
    return [classify_equilibrium(r, p) for r in roots]


def census(p: Params, equilibria: list[Equilibrium] | None = None) -> EquilibriumCensus:
    """Counts of stable, unstable and saddle equilibria (foci with nodes)."""
    eqs = find_equilibria(p) if equilibria is None else equilibria
    ns = sum(e.kind.stable for e in eqs)
    nu = sum(e.kind.unstable for e in eqs)
    nsad = sum(e.kind is Kind.SADDLE for e in eqs)
    nnh = sum(e.kind is Kind.NON_HYPERBOLIC for e in eqs)
    if nnh == 0 and nsad != ns + nu:
        raise IndexSumViolation(f"{nsad} saddles vs {ns} stable + {nu} unstable at {p}")
    label = f"{ns}s{nu}u{nsad}x" if nnh == 0 else None
    return EquilibriumCensus(ns, nu, nsad, nnh, label)


def check_property4(p: Params, equilibria: list[Equilibrium] | None = None) -> bool:
    """An off-diagonal pair of equilibria implies a diagonal one."""
    eqs = find_equilibria(p) if equilibria is None else equilibria
    off = any(e.etype is EType.OFF_DIAGONAL for e in eqs)
    on = any(e.etype is EType.DIAGONAL for e in eqs)
    return (not off) or on


def equilibria_to_json(eqs: list[Equilibrium], path=None, **extra) -> str:
    doc = dict(extra)
    doc["equilibria"] = [e.to_dict() for e in eqs]
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
