"""Quadratic boundary identities
================================

A graph with one edge less than the slice dimension has a closed form of
degree top minus one; summing the regularized boundary terms over all
codimension-one strata must give zero.  Interior two-point collapses
contribute the contracted graph's weight, collapses onto the real line
contribute products of the factor weights, and everything else is exactly
zero (multi-point interior collapses, or strata whose contracted graph is
inadmissible).
"""

from kwl import parse_graph, verify_identity

g = parse_graph("2 1 ; a1>a2 a2>g1")
print("graph:", g)

for kind in ("angle", "log"):
    rep = verify_identity(g, kind, samples=2 * 10**5, seed=5)
    print(f"\n{kind} propagator:")
    for stratum, value, err in rep.terms:
        if value != 0:
            print(f"  {stratum.describe():28s} {value.real:+.6f}  (+- {err:.1e})")
    print(f"  residual: {abs(rep.residual):.2e}  combined stderr: {rep.stderr:.1e}"
          f"  -> {'PASS' if rep.passed else 'FAIL'}")

# the smallest identities involve only exactly-known weights and cancel to
# machine precision: two boundary points of an interval-like space
tiny = parse_graph("0 3 ;")
rep = verify_identity(tiny, "angle", samples=10**4, seed=1)
print("\nthree ground points, empty graph:")
for stratum, value, _ in rep.terms:
    if value != 0:
        print(f"  {stratum.describe():28s} {value.real:+.1f}")
print("  residual:", abs(rep.residual))
