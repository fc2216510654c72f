"""
Rest states under weak coupling
===============================

Below the coupling threshold no unit can be pushed over its excitation
barrier, so only equilibria exist.  Their number changes across the
(alpha, delta) plane, but saddles always balance nodes and foci.  On a
reversibility line some rest states become centres, which count with the
nodes.
"""

import collections

import numpy as np

from hco import Params, census

n = 40
vals = 2 * np.pi * np.arange(n) / n
counts = collections.Counter()
for a in vals:
    for d in vals:
        c = census(Params(d=0.25, alpha=float(a), delta=float(d)))
        counts[c.triple + (c.n_nonhyperbolic,)] += 1

print("stable  unstable  centres  saddles   cells")
for (ns, nu, nsad, nc), k in sorted(counts.items()):
    print(f"{ns:6d}  {nu:8d}  {nc:7d}  {nsad:7d}  {k:6d}")
print("most stable rest states seen:", max(key[0] for key in counts))
