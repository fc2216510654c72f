"""
Regimes of the coupled pair
===========================

Each parameter set is labelled by the attractors reached from a lattice of
initial conditions: A in-phase spiking, B excitable rest, C anti-phase
spiking, D coexistence of rest and anti-phase spiking.
"""

import math

from hco import Params, classify_regime

landmarks = [
    ("window on the descending branch", Params(alpha=1.5 * math.pi, delta=1.5 * math.pi)),
    ("weak coupling", Params(alpha=math.pi / 4, delta=math.pi, d=0.29)),
    ("just above the coupling threshold", Params(alpha=math.pi / 4, delta=math.pi, d=0.31)),
    ("half window, shifted past pi", Params(alpha=math.pi + 0.01, delta=math.pi)),
    ("half window, shifted short of pi", Params(alpha=math.pi - 0.01, delta=math.pi)),
]

for name, p in landmarks:
    r = classify_regime(p, ic_grid=8)
    votes = ", ".join(f"{k} {v:.2f}" for k, v in r.basin_votes.items())
    print(f"{r.label.value}  {name:36s} alpha={p.alpha:.4f} delta={p.delta:.4f} d={p.d}")
    print(f"   {r.stable_equilibria} stable rest state(s); basin shares: {votes}")
