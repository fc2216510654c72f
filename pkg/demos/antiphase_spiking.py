"""
Anti-phase spiking of two coupled units
=======================================

With the activation window on the descending part of the partner's phase,
the two units take turns: each spike of one unit triggers the next spike
of the other half a period later.
"""

import math

import numpy as np

from hco import EventKind, Params, detect_cycle, detect_events, integrate

p = Params(alpha=1.5 * math.pi, delta=1.5 * math.pi)

# start the units half a turn apart and let the transient die out
tr = integrate((0.0, math.pi), p, t_end=300.0)
spikes = sorted(detect_events(tr, EventKind.SPIKE_1) + detect_events(tr, EventKind.SPIKE_2),
                key=lambda e: e.time)
late = [e for e in spikes if e.time > 200.0]
print("last spikes (time, unit):")
for e in late[-6:]:
    print(f"  {e.time:10.4f}  {e.element}")

# spacing between consecutive spikes of either unit is half the period
gaps = np.diff([e.time for e in late])
print(f"mean inter-spike gap {gaps.mean():.6f}, spread {np.ptp(gaps):.2e}")

# the same orbit found directly as a fixed point of the return map
c = detect_cycle((0.0, math.pi), p)
print(f"cycle: {c.phase_class.value}, period {c.period:.6f}, "
      f"half period {c.period / 2:.6f}, multiplier {c.floquet:.6f}")
