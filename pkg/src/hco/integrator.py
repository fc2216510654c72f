"""Adaptive integration of the two-phase flow on the torus.

The stepping kernel is a Dormand-Prince 5(4) pair with its 4th-order
continuous extension (Hairer, Norsett & Wanner, *Solving ODEs I*, II.6).  It
works on the unwrapped phases (lifts) so winding numbers fall out of the end
state, and it is compiled with numba because the analysis modules run many
thousands of short integrations.

Two drivers share the kernel:

* :func:`integrate` stores every accepted step together with the dense-output
  coefficients, which :func:`detect_events` and :func:`Trajectory.sample`
  use for root refinement and uniform resampling;
* :func:`run_until` only keeps the current state and stops at the first
  crossing of a lift level, at capture by a listed equilibrium, or at a time
  budget.  Return maps are built on top of it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numba import njit

from .model import TWO_PI, Params, TorusState, _field, wrap

__all__ = [
    "IntegratorSettings",
    "Trajectory",
    "EventKind",
    "Event",
    "StepSizeUnderflow",
    "integrate",
    "detect_events",
    "run_until",
    "RunResult",
    "SPIKE_ANGLE",
]

# spikes are upward passages through this angle
SPIKE_ANGLE = math.pi

_H_MIN = 1e-14

# Dormand-Prince tableau
_C2, _C3, _C4, _C5 = 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9
_A21 = 1.0 / 5
_A31, _A32 = 3.0 / 40, 9.0 / 40
_A41, _A42, _A43 = 44.0 / 45, -56.0 / 15, 32.0 / 9
_A51, _A52, _A53, _A54 = 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168, -355.0 / 33, 46732.0 / 5247,
                                49.0 / 176, -5103.0 / 18656)
_A71, _A73, _A74, _A75, _A76 = (35.0 / 384, 500.0 / 1113, 125.0 / 192,
                                -2187.0 / 6784, 11.0 / 84)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600, -71.0 / 16695, 71.0 / 1920,
                                -17253.0 / 339200, 22.0 / 525, -1.0 / 40)
_D1, _D3, _D4, _D5, _D6, _D7 = (-12715105075.0 / 11282082432, 87487479700.0 / 32700410799,
                                -10690763975.0 / 1880347072, 701980252875.0 / 199316789632,
                                -1453857185.0 / 822651844, 69997945.0 / 29380423)


class StepSizeUnderflow(RuntimeError):
    """The step controller shrank the step below 1e-14."""


@dataclass(frozen=True)
class IntegratorSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    max_step: float | None = None  # None -> 0.2 / k
    t_transient: float = 200.0
    t_max: float = 2000.0

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "t_transient", "t_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive")

    def step_limit(self, p: Params) -> float:
        if self.max_step is not None:
            return float(self.max_step)
        return 0.2 / p.k

    def to_dict(self) -> dict:
        return {"rel_tol": self.rel_tol, "abs_tol": self.abs_tol,
                "max_step": self.max_step, "t_transient": self.t_transient,
                "t_max": self.t_max}


# ------------------------------------------------------------------ kernel

@njit(cache=True)
def _rhs(y, sgn, g, d, k, a, de, out):
    f1, f2 = _field(y[0], y[1], g, d, k, a, de)
    out[0] = sgn * f1
    out[1] = sgn * f2


@njit(cache=True)
def _attempt(t, y, k1, h, sgn, par, ks, ynew):
    """One Dormand-Prince step; fills stages ks[0..6] and ynew, returns error."""
    g, d, k, a, de = par
    yt = np.empty(2)
    for i in range(2):
        ks[0, i] = k1[i]
    for i in range(2):
        yt[i] = y[i] + h * _A21 * ks[0, i]
    _rhs(yt, sgn, g, d, k, a, de, ks[1])
    for i in range(2):
        yt[i] = y[i] + h * (_A31 * ks[0, i] + _A32 * ks[1, i])
    _rhs(yt, sgn, g, d, k, a, de, ks[2])
    for i in range(2):
        yt[i] = y[i] + h * (_A41 * ks[0, i] + _A42 * ks[1, i] + _A43 * ks[2, i])
    _rhs(yt, sgn, g, d, k, a, de, ks[3])
    for i in range(2):
        yt[i] = y[i] + h * (_A51 * ks[0, i] + _A52 * ks[1, i] + _A53 * ks[2, i]
                            + _A54 * ks[3, i])
    _rhs(yt, sgn, g, d, k, a, de, ks[4])
    for i in range(2):
        yt[i] = y[i] + h * (_A61 * ks[0, i] + _A62 * ks[1, i] + _A63 * ks[2, i]
                            + _A64 * ks[3, i] + _A65 * ks[4, i])
    _rhs(yt, sgn, g, d, k, a, de, ks[5])
    for i in range(2):
        ynew[i] = y[i] + h * (_A71 * ks[0, i] + _A73 * ks[2, i] + _A74 * ks[3, i]
                              + _A75 * ks[4, i] + _A76 * ks[5, i])
    _rhs(ynew, sgn, g, d, k, a, de, ks[6])
    err = 0.0
    for i in range(2):
        e = h * (_E1 * ks[0, i] + _E3 * ks[2, i] + _E4 * ks[3, i] + _E5 * ks[4, i]
                 + _E6 * ks[5, i] + _E7 * ks[6, i])
        err += e * e
    return math.sqrt(0.5 * err)


@njit(cache=True)
def _dense_coeffs(y, ynew, ks, h, rc):
    for i in range(2):
        dy = ynew[i] - y[i]
        rc[0, i] = y[i]
        rc[1, i] = dy
        rc[2, i] = h * ks[0, i] - dy
        rc[3, i] = dy - h * ks[6, i] - rc[2, i]
        rc[4, i] = h * (_D1 * ks[0, i] + _D3 * ks[2, i] + _D4 * ks[3, i]
                        + _D5 * ks[4, i] + _D6 * ks[5, i] + _D7 * ks[6, i])


@njit(cache=True)
def _dense_eval(rc, theta, i):
    th1 = 1.0 - theta
    return rc[0, i] + theta * (rc[1, i] + th1 * (rc[2, i] + theta * (rc[3, i] + th1 * rc[4, i])))


@njit(cache=True)
def _next_h(h, err_ratio):
    if err_ratio == 0.0:
        return h * 5.0
    fac = 0.9 * err_ratio ** (-0.2)
    if fac < 0.2:
        fac = 0.2
    elif fac > 5.0:
        fac = 5.0
    return h * fac


@njit(cache=True)
def _integrate_store(y0, t_end, par, sgn, rtol, atol, hmax):
    g, d, k, a, de = par
    scale = atol + rtol * math.pi
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, 2))
    rcs = np.empty((cap, 5, 2))
    ts[0] = 0.0
    ys[0, 0] = y0[0]
    ys[0, 1] = y0[1]
    n = 1
    t = 0.0
    y = y0.copy()
    k1 = np.empty(2)
    _rhs(y, sgn, g, d, k, a, de, k1)
    ks = np.empty((7, 2))
    ynew = np.empty(2)
    rc = np.empty((5, 2))
    h = min(hmax, 1e-3, t_end)
    while t < t_end:
        if t + h > t_end:
            h = t_end - t
        err = _attempt(t, y, k1, h, sgn, par, ks, ynew) / scale
        if err <= 1.0:
            _dense_coeffs(y, ynew, ks, h, rc)
            t = t + h
            if n >= cap:
                cap *= 2
                ts2 = np.empty(cap)
                ys2 = np.empty((cap, 2))
                rcs2 = np.empty((cap, 5, 2))
                ts2[:n] = ts[:n]
                ys2[:n] = ys[:n]
                rcs2[:n - 1] = rcs[:n - 1]
                ts, ys, rcs = ts2, ys2, rcs2
            ts[n] = t
            ys[n, 0] = ynew[0]
            ys[n, 1] = ynew[1]
            rcs[n - 1] = rc
            n += 1
            y[0] = ynew[0]
            y[1] = ynew[1]
            k1[0] = ks[6, 0]
            k1[1] = ks[6, 1]
            h = min(_next_h(h, err), hmax)
        else:
            h = _next_h(h, err)
            if h < _H_MIN:
                return 1, ts[:n], ys[:n], rcs[:n - 1]
    return 0, ts[:n], ys[:n], rcs[:n - 1]


@njit(cache=True)
def _run_until(y0, par, sgn, rtol, atol, hmax, t_max, ev, use_event,
               eqs, speed_tol):
    """Integrate until an event; returns (status, t, y, eq_index, nsteps).

    The event is the upward zero of ``ev[0] y0 + ev[1] y1 - ev[2]``; ``eqs``
    rows are (phi1, phi2, radius) capture balls.  status: 0 event, 1 capture
    in eqs[idx], 2 budget, 3 underflow, 4 speed below speed_tol.
    """
    g, d, k, a, de = par
    scale = atol + rtol * math.pi
    t = 0.0
    y = y0.copy()
    k1 = np.empty(2)
    _rhs(y, sgn, g, d, k, a, de, k1)
    ks = np.empty((7, 2))
    ynew = np.empty(2)
    rc = np.empty((5, 2))
    h = min(hmax, 1e-3)
    nsteps = 0
    neq = eqs.shape[0]
    while t < t_max:
        if t + h > t_max:
            h = t_max - t
        err = _attempt(t, y, k1, h, sgn, par, ks, ynew) / scale
        if err > 1.0:
            h = _next_h(h, err)
            if h < _H_MIN:
                return 3, t, y, -1, nsteps
            continue
        nsteps += 1
        if use_event:
            g0 = ev[0] * y[0] + ev[1] * y[1] - ev[2]
            g1 = ev[0] * ynew[0] + ev[1] * ynew[1] - ev[2]
            if g0 < 0.0 and g1 >= 0.0:
                _dense_coeffs(y, ynew, ks, h, rc)
                lo = 0.0
                hi = 1.0
                glo = g0
                ghi = g1
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    gm = (ev[0] * _dense_eval(rc, mid, 0) + ev[1] * _dense_eval(rc, mid, 1)
                          - ev[2])
                    if gm < 0.0:
                        lo = mid
                        glo = gm
                    else:
                        hi = mid
                        ghi = gm
                    if (hi - lo) * h < 1e-13:
                        break
                # local linear interpolation between the bracketing points
                th = lo
                if ghi != glo:
                    th = lo - glo * (hi - lo) / (ghi - glo)
                out = np.empty(2)
                out[0] = _dense_eval(rc, th, 0)
                out[1] = _dense_eval(rc, th, 1)
                return 0, t + th * h, out, -1, nsteps
        t = t + h
        y[0] = ynew[0]
        y[1] = ynew[1]
        k1[0] = ks[6, 0]
        k1[1] = ks[6, 1]
        for j in range(neq):
            d1 = (y[0] - eqs[j, 0] + math.pi) % TWO_PI - math.pi
            d2 = (y[1] - eqs[j, 1] + math.pi) % TWO_PI - math.pi
            if d1 * d1 + d2 * d2 < eqs[j, 2] * eqs[j, 2]:
                return 1, t, y, j, nsteps
        if speed_tol > 0.0 and k1[0] * k1[0] + k1[1] * k1[1] < speed_tol * speed_tol:
            return 4, t, y, -1, nsteps
        h = min(_next_h(h, err), hmax)
    return 2, t, y, -1, nsteps


# ------------------------------------------------------------- python layer

class EventKind(str, Enum):
    SPIKE_1 = "SPIKE_1"
    SPIKE_2 = "SPIKE_2"
    SECTION = "SECTION"


class Event(NamedTuple):
    time: float
    kind: EventKind
    element: int
    state: TorusState


@dataclass
class Trajectory:
    """Accepted steps of one integration, with dense output between them."""

    times: np.ndarray
    lifts: np.ndarray  # (n, 2) unwrapped phases
    dense: np.ndarray  # (n - 1, 5, 2) per-step interpolation coefficients
    params: Params
    direction: int = 1
    events: list = None

    def __post_init__(self):
        if self.events is None:
            self.events = []

    def __len__(self):
        return len(self.times)

    @property
    def phases(self) -> np.ndarray:
        return wrap(self.lifts)

    @property
    def states(self) -> list[TorusState]:
        return [TorusState.from_lifts(a, b) for a, b in self.lifts]

    @property
    def end(self) -> TorusState:
        return TorusState.from_lifts(*self.lifts[-1])

    def sample(self, t) -> np.ndarray:
        """Lifts at arbitrary times inside the integration range (dense output)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.dense) - 1)
        h = self.times[idx + 1] - self.times[idx]
        th = (t - self.times[idx]) / h
        rc = self.dense[idx]
        th1 = 1.0 - th
        out = (rc[:, 0] + th[:, None] * (rc[:, 1] + th1[:, None] * (
            rc[:, 2] + th[:, None] * (rc[:, 3] + th1[:, None] * rc[:, 4]))))
        return out

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "phi1", "phi2", "lift1", "lift2"])
            ph = self.phases
            for t, (p1, p2), (l1, l2) in zip(self.times, ph, self.lifts):
                w.writerow([_fmt(t), _fmt(p1), _fmt(p2), _fmt(l1), _fmt(l2)])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _lifts_of(s0) -> np.ndarray:
    if isinstance(s0, TorusState):
        return s0.lifts().astype(float)
    return np.asarray(s0, dtype=float).copy()


def integrate(s0, p: Params, settings: IntegratorSettings | None = None,
              t_end: float = 100.0, direction: int = 1) -> Trajectory:
    """Integrate from ``s0`` over ``[0, t_end]``.

    ``direction=-1`` integrates the time-reversed field, so ``times`` stay
    increasing and represent elapsed backward time.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    settings = settings or IntegratorSettings()
    y0 = _lifts_of(s0)
    status, ts, ys, rcs = _integrate_store(
        y0, float(t_end), p.as_tuple(), float(direction), settings.rel_tol,
        settings.abs_tol, settings.step_limit(p))
    if status == 1:
        raise StepSizeUnderflow(f"step size fell below {_H_MIN} at t={ts[-1]}")
    return Trajectory(ts.copy(), ys.copy(), rcs.copy(), p, direction)


class RunResult(NamedTuple):
    status: str  # "crossed", "captured", "budget", "stalled"
    t: float
    lifts: np.ndarray
    eq_index: int
    nsteps: int


_STATUS = {0: "crossed", 1: "captured", 2: "budget", 4: "stalled"}
_NO_EQ = np.empty((0, 3))
_NO_EVENT = np.zeros(3)


def run_until(y0, p: Params, settings: IntegratorSettings, t_max: float, *,
              component: int = -1, target: float = 0.0, direction: int = 1,
              line=None, equilibria=None, capture_radius=0.0,
              speed_tol: float = 0.0) -> RunResult:
    """Integrate without storage until an event, a capture, or ``t_max``.

    Events: ``component``/``target`` is a lift level crossed in the direction
    of motion (upward forward in time, downward for ``direction=-1``);
    ``line=(a0, a1, b)`` is the upward zero of ``a0*y0 + a1*y1 - b``.
    ``capture_radius`` may be a scalar or one radius per equilibrium.
    """
    if equilibria is None or len(equilibria) == 0:
        eqs = _NO_EQ
    else:
        pts = np.asarray(equilibria, dtype=float).reshape(-1, 2)
        eqs = np.empty((len(pts), 3))
        eqs[:, :2] = pts
        eqs[:, 2] = capture_radius
    if line is not None:
        ev = np.asarray(line, dtype=float)
        use = True
    elif component >= 0:
        ev = np.zeros(3)
        ev[component] = direction
        ev[2] = direction * target
        use = True
    else:
        ev, use = _NO_EVENT, False
    status, t, y, idx, n = _run_until(
        np.asarray(y0, dtype=float), p.as_tuple(), float(direction), settings.rel_tol,
        settings.abs_tol, settings.step_limit(p), float(t_max), ev, use, eqs,
        float(speed_tol))
    if status == 3:
        raise StepSizeUnderflow(f"step size fell below {_H_MIN} at t={t}")
    y = np.array(y)
    if status == 0 and line is None:
        y[component] = target
    return RunResult(_STATUS[status], float(t), y, int(idx), int(n))


def _level_crossings(times, values, dense, comp, angle):
    """Upward crossings of ``angle + 2 pi m`` by one lift, refined on the dense output."""
    rel = (values - angle) / TWO_PI
    level = np.floor(rel)
    hits = np.nonzero(level[1:] > level[:-1])[0]
    out = []
    for i in hits:
        h = times[i + 1] - times[i]
        rc = dense[i]
        for m in range(int(level[i]) + 1, int(level[i + 1]) + 1):
            target = angle + TWO_PI * m
            lo, hi = 0.0, 1.0
            while (hi - lo) * h > 1e-12:
                mid = 0.5 * (lo + hi)
                if _dense_eval(rc, mid, comp) < target:
                    lo = mid
                else:
                    hi = mid
            glo = _dense_eval(rc, lo, comp) - target
            ghi = _dense_eval(rc, hi, comp) - target
            th = lo if ghi == glo else lo - glo * (hi - lo) / (ghi - glo)
            lifts = np.array([_dense_eval(rc, th, 0), _dense_eval(rc, th, 1)])
            out.append((times[i] + th * h, lifts))
    return out


def detect_events(tr: Trajectory, kind: EventKind | str) -> list[Event]:
    """Refined times of spikes (upward passage through pi) or section hits.

    ``SECTION`` is the upward crossing of ``phi1 = pi``; it coincides with
    ``SPIKE_1`` for the default spike angle but is kept separate so the two
    can diverge.
    """
    kind = EventKind(kind)
    comp = 1 if kind is EventKind.SPIKE_2 else 0
    angle = math.pi if kind is EventKind.SECTION else SPIKE_ANGLE
    if len(tr.times) < 2:
        return []
    hits = _level_crossings(tr.times, tr.lifts[:, comp], tr.dense, comp, angle)
    return [Event(t, kind, comp + 1, TorusState.from_lifts(*lf)) for t, lf in hits]


def events_to_csv(events, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "kind", "element"])
        for ev in sorted(events, key=lambda e: e.time):
            w.writerow([_fmt(ev.time), ev.kind.value, ev.element])
