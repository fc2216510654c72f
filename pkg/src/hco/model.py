"""Two-neuron phase model with sigmoidal excitatory coupling.

Each unit is an active rotator ``phi' = gamma - sin(phi)``; the units excite
each other through a smooth window function of the presynaptic phase::

    phi1' = gamma - sin(phi1) + d * window(phi2)
    phi2' = gamma - sin(phi2) + d * window(phi1)
    window(phi) = 1 / (1 + exp(k * (cos(delta/2) - cos(phi - alpha - delta/2))))

The scalar kernels are compiled with numba so that the integrator and the
root finders can call them without Python overhead.  The public functions
accept a :class:`Params` instance and broadcast over numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

__all__ = [
    "TWO_PI",
    "Params",
    "TorusState",
    "FieldValue",
    "wrap",
    "circ_diff",
    "circ_dist",
    "torus_dist",
    "eval_coupling",
    "eval_coupling_derivative",
    "vector_field",
    "jacobian",
    "divergence",
    "parameter_mirror",
    "state_mirror",
    "reversibility_defect",
    "is_reversible",
]


def wrap(x):
    """Reduce angles to ``[0, 2*pi)``.

    This is the single canonical reduction used across the package; the
    extra ``where`` guards against ``np.mod`` returning exactly ``2*pi`` for
    tiny negative inputs.
    """
    r = np.mod(x, TWO_PI)
    r = np.where(r >= TWO_PI, 0.0, r)
    if np.ndim(r) == 0:
        return float(r)
    return r


def circ_diff(a, b):
    """Signed difference ``a - b`` reduced to ``[-pi, pi)``."""
    r = np.mod(np.asarray(a, dtype=float) - b + math.pi, TWO_PI) - math.pi
    if np.ndim(r) == 0:
        return float(r)
    return r


def circ_dist(a, b):
    return np.abs(circ_diff(a, b))


def torus_dist(s, t) -> float:
    """Euclidean distance on the flat torus between two (phi1, phi2) points."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    dd = circ_diff(s, t)
    return float(np.sqrt(np.sum(np.square(dd), axis=-1)))


@dataclass(frozen=True)
class Params:
    """Model parameters.

    ``alpha`` is reduced modulo 2*pi on construction.  ``delta`` has to lie in
    ``[0, 2*pi)`` already: the coupling is formally 4*pi periodic in delta, so
    silently wrapping an out-of-range value would change the model.
    """

    gamma: float = 0.7
    d: float = 1.0
    k: float = 50.0
    alpha: float = 1.5 * math.pi
    delta: float = 1.5 * math.pi

    def __post_init__(self):
        for name in ("gamma", "d", "k", "alpha", "delta"):
            v = getattr(self, name)
            if not math.isfinite(float(v)):
                raise ValueError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.d < 0:
            raise ValueError(f"d must be >= 0, got {self.d}")
        if self.k <= 0:
            raise ValueError(f"k must be > 0, got {self.k}")
        if not 0.0 <= self.delta < TWO_PI:
            raise ValueError(f"delta must lie in [0, 2*pi), got {self.delta}")
        object.__setattr__(self, "alpha", wrap(self.alpha))

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.gamma, self.d, self.k, self.alpha, self.delta)

    def replace(self, **changes) -> "Params":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "d": self.d, "k": self.k,
                "alpha": self.alpha, "delta": self.delta}


class TorusState(NamedTuple):
    """A point on the torus, optionally with unwrapped phases (lifts)."""

    phi1: float
    phi2: float
    lift1: float | None = None
    lift2: float | None = None

    @classmethod
    def from_lifts(cls, lift1: float, lift2: float) -> "TorusState":
        return cls(wrap(lift1), wrap(lift2), float(lift1), float(lift2))

    @classmethod
    def at(cls, phi1: float, phi2: float) -> "TorusState":
        return cls(wrap(phi1), wrap(phi2))

    def swap(self) -> "TorusState":
        return TorusState(self.phi2, self.phi1, self.lift2, self.lift1)

    def lifts(self) -> np.ndarray:
        if self.lift1 is None or self.lift2 is None:
            return np.array([self.phi1, self.phi2])
        return np.array([self.lift1, self.lift2])

    def as_array(self) -> np.ndarray:
        return np.array([self.phi1, self.phi2])


class FieldValue(NamedTuple):
    dphi1: float
    dphi2: float


# --------------------------------------------------------------- compiled kernels

@njit(cache=True)
def _sigmoid_neg(x):
    # 1 / (1 + e^x) without overflow
    if x > 0.0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


@njit(cache=True)
def _coupling(phi, k, alpha, delta):
    half = 0.5 * delta
    return _sigmoid_neg(k * (math.cos(half) - math.cos(phi - alpha - half)))


@njit(cache=True)
def _coupling_d(phi, k, alpha, delta):
    half = 0.5 * delta
    s = _sigmoid_neg(k * (math.cos(half) - math.cos(phi - alpha - half)))
    return -k * math.sin(phi - alpha - half) * s * (1.0 - s)


@njit(cache=True)
def _field(x, y, gamma, d, k, alpha, delta):
    f1 = gamma - math.sin(x) + d * _coupling(y, k, alpha, delta)
    f2 = gamma - math.sin(y) + d * _coupling(x, k, alpha, delta)
    return f1, f2


@njit(cache=True)
def _jac(x, y, gamma, d, k, alpha, delta):
    return (-math.cos(x), d * _coupling_d(y, k, alpha, delta),
            d * _coupling_d(x, k, alpha, delta), -math.cos(y))


# ----------------------------------------------------------------- public API

def _sigmoid_neg_np(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    e = np.exp(-x[pos])
    out[pos] = e / (1.0 + e)
    out[~pos] = 1.0 / (1.0 + np.exp(x[~pos]))
    return out


def eval_coupling(phi, p: Params):
    """Coupling current ``window(phi)``; equals 1/2 at both window edges."""
    half = 0.5 * p.delta
    arg = p.k * (math.cos(half) - np.cos(np.asarray(phi, dtype=float) - p.alpha - half))
    out = _sigmoid_neg_np(arg)
    return float(out) if out.ndim == 0 else out


def eval_coupling_derivative(phi, p: Params):
    phi = np.asarray(phi, dtype=float)
    s = np.asarray(eval_coupling(phi, p))
    out = -p.k * np.sin(phi - p.alpha - 0.5 * p.delta) * s * (1.0 - s)
    return float(out) if out.ndim == 0 else out


def vector_field(s, p: Params) -> FieldValue:
    phi1, phi2 = s[0], s[1]
    f1 = p.gamma - np.sin(phi1) + p.d * eval_coupling(phi2, p)
    f2 = p.gamma - np.sin(phi2) + p.d * eval_coupling(phi1, p)
    return FieldValue(f1, f2)


def jacobian(s, p: Params) -> np.ndarray:
    phi1, phi2 = float(s[0]), float(s[1])
    return np.array([
        [-math.cos(phi1), p.d * eval_coupling_derivative(phi2, p)],
        [p.d * eval_coupling_derivative(phi1, p), -math.cos(phi2)],
    ])


def divergence(s, p: Params):
    """Trace of the Jacobian; integrates to the log Floquet multiplier."""
    return -np.cos(s[0]) - np.cos(s[1])


def parameter_mirror(p: Params) -> Params:
    """Parameters of the time-reversed, phase-mirrored system.

    Under ``phi -> pi - phi`` and ``t -> -t`` the model with ``alpha``
    becomes the model with ``pi - alpha - delta``.
    """
    return p.replace(alpha=wrap(math.pi - p.alpha - p.delta))


def state_mirror(s):
    """The phase map ``phi -> pi - phi`` (both components), wrapped."""
    s = np.asarray(s, dtype=float)
    return wrap(math.pi - s)


def _involution(s):
    return np.array([math.pi - s[1], math.pi - s[0]])


def reversibility_defect(s, p: Params) -> float:
    """``|DR F(R s) + F(s)|`` for ``R(x, y) = (pi - y, pi - x)``.

    Zero on the lines ``delta = pi - 2 alpha`` and ``delta = 3 pi - 2 alpha``.
    """
    s = np.asarray(s, dtype=float)
    fr = np.array(vector_field(_involution(s), p))
    dr_fr = np.array([-fr[1], -fr[0]])
    return float(np.hypot(*(dr_fr + np.array(vector_field(s, p)))))


def is_reversible(p: Params, tol: float = 1e-12) -> bool:
    """True when the window centre sits at pi/2 or 3pi/2 (mod 2pi)."""
    centre = p.alpha + 0.5 * p.delta
    return circ_dist(2.0 * centre, math.pi) < tol
