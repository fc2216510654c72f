"""
A neutral family of closed orbits
=================================

When the window is centred on a reversibility line and no rest state
exists, the torus is filled with closed orbits of multiplier one.  Moving
the window off the line breaks the family into an attracting and a
repelling cycle, and the direction of the shift decides which is which.
"""

import math

from hco import Params, find_cycles

p = Params(alpha=1.75 * math.pi, delta=1.5 * math.pi)

for shift in (-0.01, 0.0, 0.01):
    q = p.replace(alpha=p.alpha + shift)
    print(f"alpha = 7 pi / 4 {shift:+.2f}")
    for c in find_cycles(q):
        state = "neutral" if c.neutral else ("stable" if c.stable else "unstable")
        print(f"   {c.phase_class.value:10s} multiplier {c.floquet:.6f}  {state}")
