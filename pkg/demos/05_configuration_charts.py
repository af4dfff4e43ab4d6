"""Charts and torus actions on configuration spaces
====================================================

Nested families of collapsing subsets index charts near the boundary of
the compactified configuration space.  Chart membership is a family of
ratio inequalities between cluster sizes and separations; the charts grow
with the ratio constant, intersect inside the chart of their finest common
refinement, and each carries commuting circle actions rotating clusters
about their centers of mass.
"""

import math

from kwl import (NestedFamily, TYPE_I, chart_membership, gcd_families,
                 make_configuration, torus_rotate)

# three aerial points, the first two forming a tight cluster
fam = NestedFamily(3, 0, [(frozenset({0, 1}), TYPE_I)])
tight = make_configuration([1j, 1j + 1e-3, 1j + 1.0], [])
loose = make_configuration([1j, 1j + 0.5, 1j + 1.0], [])
print("tight cluster in chart at c=0.1:", chart_membership(tight, fam, 0.1))
print("loose cluster in chart at c=0.1:", chart_membership(loose, fam, 0.1))
print("membership grows with c:       ", chart_membership(tight, fam, 0.5))

# two families combine when their union is still nested
i = NestedFamily(4, 0, [(frozenset({0, 1}), TYPE_I)])
j = NestedFamily(4, 0, [(frozenset({2, 3}), TYPE_I)])
k = gcd_families(i, j)
print("\nunion of disjoint clusters:", sorted(sorted(s) for s, _ in k.internal))
print("crossing clusters have no common refinement:",
      gcd_families(i, NestedFamily(4, 0, [(frozenset({1, 2}), TYPE_I)])) is None)

# rotations of nested clusters commute (the inner center is transported)
cfg = make_configuration([2j, 2j + 0.01, 2j + 0.012j, 2j + 0.3], [])
a = torus_rotate(torus_rotate(cfg, [0, 1], 0.7), [0, 1, 2], 1.9)
b = torus_rotate(torus_rotate(cfg, [0, 1, 2], 1.9), [0, 1], 0.7)
dev = max(abs(p - q) for p, q in zip(a.aerial, b.aerial))
print(f"\ncommutation defect of nested rotations: {dev:.2e}")

# a full turn is the identity
full = torus_rotate(cfg, [0, 1], 2 * math.pi)
print("full turn defect:",
      f"{max(abs(p - q) for p, q in zip(full.aerial, cfg.aerial)):.2e}")
