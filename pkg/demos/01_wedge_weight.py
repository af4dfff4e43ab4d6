"""The simplest graph weight
============================

One aerial point, two ground points, one edge to each: the "wedge".  Its
weight is the best-known number in this business: exactly 1/2.
"""

from kwl import compute_weight, make_graph, parse_graph

# build the graph explicitly (aerial vertices first, then ground)
wedge = make_graph(1, 2, [(0, 1), (0, 2)])
print("graph:", wedge)

# the same graph from its one-line text encoding
assert wedge == parse_graph("1 2 ; a1>g1 a1>g2")

# deterministic quasi-Monte Carlo estimate with the angle propagator
est = compute_weight(wedge, "angle", samples=10**6, seed=7)
print(f"angle weight: {est.value.real:.6f} +- {est.stderr:.1e}  (exact: 0.5)")

# the logarithmic propagator agrees whenever an edge ends on the real line,
# and for this graph every edge does
log_est = compute_weight(wedge, "log", samples=10**6, seed=7)
print(f"log weight:   {log_est.value.real:.6f} +- {log_est.stderr:.1e}")

# estimates are reproducible bit for bit: same graph, samples and seed
again = compute_weight(wedge, "angle", samples=10**6, seed=7)
assert again.value == est.value and again.stderr == est.stderr
print("re-run is bit-identical:", again.value == est.value)

# a graph whose edge count does not match the slice dimension integrates a
# non-top form: the weight is exactly zero by degree counting
partial = make_graph(1, 2, [(0, 1)])
print("degree-mismatch weight:", compute_weight(partial, "angle", 10, 0).value)
