"""Star products from weighted graphs
=====================================

Summing weight times graph operator over all admissible graphs gives the
components of a deformation of the pointwise product.  For the constant
bivector on the plane the expansion must match the constant-coefficient
exponential formula order by order; for a linear Poisson bivector the
product is associative up to the truncation order.
"""

from fractions import Fraction

from kwl import bivector, check_associativity, star_product

# constant bivector dx ^ dy on the plane
pi = bivector(2, [(0, 1, (0, 0), 1)])
star = star_product(pi, order=2, kind="angle", samples=4 * 10**5, seed=2)

x = {(1, 0): Fraction(1)}
y = {(0, 1): Fraction(1)}

orders = star.multiply(x, y)
print("x * y, coefficient of each power of the formal parameter:")
for k, poly in enumerate(orders):
    pretty = {mono: complex(c).real for mono, c in poly.items()}
    print(f"  order {k}: {pretty}")

# the commutator picks out the bivector: x*y - y*x = hbar + higher order
yx = star.multiply(y, x)
comm = complex(orders[1].get((0, 0), 0)) - complex(yx[1].get((0, 0), 0))
print(f"first-order commutator coefficient: {comm.real:.6f}  (exact: 1)")

# associativity for the linear bivector x dx ^ dy, checked on monomials
pil = bivector(2, [(0, 1, (1, 0), 1)])
rep = check_associativity(pil, x, y, {(1, 1): Fraction(1)}, order=2,
                          kind="angle", samples=4 * 10**5, seed=2)
print("\nassociativity residuals for x dx^dy on (x, y, xy):")
for k, (res, tol) in enumerate(zip(rep.residuals, rep.tolerances)):
    print(f"  order {k}: |residual| = {res:.2e}  tolerance {tol:.2e}")
print("passed:", rep.passed)
