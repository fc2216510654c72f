"""
Birth of anti-phase spiking from a saddle connection
====================================================

At a window width of 3 pi / 4 the excitable regime gives way to
bistability when the two saddles become joined by a pair of heteroclinic
orbits.  Past the connection a stable anti-phase cycle exists, and its period
grows as the connection is approached.
"""

import math

from hco import Params, find_cycles, locate_connection

base = Params(delta=0.75 * math.pi)

# signed splitting of the separatrices, bisected to zero
alpha_c = locate_connection("alpha", (4.15, 4.28), base)
print(f"saddle connection at alpha = {alpha_c:.6f}")

# the cycle born there: long period close to the connection, shorter further away
for alpha in (4.16, 4.175, 4.185, 4.2, 4.25):
    cycles = find_cycles(base.replace(alpha=alpha))
    desc = "; ".join(f"{c.phase_class.value} T={c.period:.3f} multiplier={c.floquet:.4f}"
                     for c in cycles) or "none"
    print(f"alpha = {alpha:.3f}: {desc}")
