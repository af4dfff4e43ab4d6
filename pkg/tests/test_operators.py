from fractions import Fraction

import pytest

from kwl.forms import ANGLE, LOG
from kwl.graphs import make_graph, parse_graph
from kwl.operators import (PolyMultivector, bivector, bivector_from_json_dict,
                           bivector_to_json_dict, check_associativity,
                           check_globalization, d_gamma, function_field,
                           jacobi_defect, multiplication_operator,
                           one_in_one_out_integral, operator_arity, p_add,
                           p_diff, p_max_abs, p_mul, p_sub, poly_from_json_list,
                           poly_to_json_list, star_product, u_n, vector_field)

WEDGE = make_graph(1, 2, [(0, 1), (0, 2)])
PI_CONST = bivector(2, [(0, 1, (0, 0), 1)])
PI_LINEAR = bivector(2, [(0, 1, (1, 0), 1)])
X = {(1, 0): Fraction(1)}
Y = {(0, 1): Fraction(1)}


def test_poly_helpers():
    p = p_add({(1, 0): 1}, {(1, 0): 2, (0, 1): 1})
    assert p == {(1, 0): 3, (0, 1): 1}
    assert p_mul(X, Y) == {(1, 1): Fraction(1)}
    assert p_diff({(2, 0): Fraction(1)}, 0) == {(1, 0): Fraction(2)}
    assert p_sub(X, X) == {}


def test_multivector_component_sign():
    assert PI_CONST.component((0, 1)) == {(0, 0): Fraction(1)}
    assert PI_CONST.component((1, 0)) == {(0, 0): Fraction(-1)}
    assert PI_CONST.component((0, 0)) == {}


def test_multivector_validation():
    with pytest.raises(ValueError, match="increasing"):
        PolyMultivector.build(2, 2, [((1, 0), (0, 0), 1)])
    with pytest.raises(ValueError, match="range"):
        PolyMultivector.build(2, 2, [((0, 5), (0, 0), 1)])


def test_d_gamma_wedge_is_contraction():
    D = d_gamma(WEDGE, [PI_CONST])
    assert D.apply([X, Y]) == {(0, 0): Fraction(1)}
    assert D.apply([Y, X]) == {(0, 0): Fraction(-1)}
    assert D.apply([X, X]) == {}


def test_d_gamma_degree_mismatch_zero():
    xi = vector_field(2, [(0, (0, 0), 1)])
    assert d_gamma(WEDGE, [xi]).is_zero()


def test_d_gamma_edge_transposition_flips_sign():
    swapped = make_graph(1, 2, [(0, 2), (0, 1)])
    D1 = d_gamma(WEDGE, [PI_CONST])
    D2 = d_gamma(swapped, [PI_CONST])
    assert D1.plus(D2).is_zero()


def test_d_gamma_aerial_edge_differentiates():
    # two vertices, edge between them: the coefficient of the target is
    # differentiated by the edge index
    g = parse_graph("2 2 ; a1>a2 a1>g1 a2>g1 a2>g2")
    D = d_gamma(g, [PI_LINEAR, PI_LINEAR])
    assert not D.is_zero()  # the linear coefficient survives one derivative
    assert D.apply([{(1, 1): Fraction(1)}, Y]) == {(1, 0): Fraction(1)}
    Dc = d_gamma(g, [PI_CONST, PI_CONST])
    assert Dc.is_zero()  # constant coefficients are killed by the edge


def test_operator_arity_formula():
    assert operator_arity([PI_CONST]) == 2
    assert operator_arity([PI_CONST, PI_CONST]) == 2
    xi = vector_field(2, [(0, (0, 0), 1)])
    assert operator_arity([xi, xi]) == 0
    f = function_field(2, {(0, 0): Fraction(1)})
    assert operator_arity([f]) == 0


def test_u1_is_half_contraction():
    U1 = u_n(ANGLE, [PI_CONST], 10 ** 5, seed=2)
    val = U1.apply([X, Y])
    assert abs(complex(val[(0, 0)]) - 0.5) < 0.01
    val2 = U1.apply([Y, X])
    assert abs(complex(val2[(0, 0)]) + 0.5) < 0.01


def test_u1_exact_weight_isolates_combinatorics():
    # replacing the wedge weight by its exact 1/2 must reproduce the half
    # contraction with no integration error at all
    D = d_gamma(WEDGE, [PI_CONST]).scaled(Fraction(1, 2))
    assert D.apply([X, Y]) == {(0, 0): Fraction(1, 2)}
    anti = D.plus(D.swapped().scaled(-1)).scaled(Fraction(1, 2))
    assert anti.apply([X, Y]) == {(0, 0): Fraction(1, 2)}


def test_u1_on_function_is_multiplication():
    f = function_field(2, {(2, 0): Fraction(3)})
    U1 = u_n(ANGLE, [f], 10 ** 4, seed=2)
    assert U1.arity == 0
    assert U1.apply([]) == {(2, 0): complex(3)}


def test_u2_vanishes_on_vector_fields():
    xi1 = vector_field(2, [(0, (0, 0), 1)])
    xi2 = vector_field(2, [(1, (0, 0), 1)])
    U2 = u_n(LOG, [xi1, xi2], 10 ** 5, seed=2)
    assert U2.max_abs() < 5e-3


def test_star_zero_bivector_is_plain_product():
    zero = bivector(2, [])
    star = star_product(zero, 2, ANGLE, 10 ** 4, seed=1)
    out = star.multiply(X, Y)
    assert out[0] == {(1, 1): Fraction(1)}
    assert out[1] == {} and out[2] == {}


def test_star_first_order_commutator():
    star = star_product(PI_CONST, 1, ANGLE, 4 * 10 ** 5, seed=2)
    xy = star.multiply(X, Y)
    yx = star.multiply(Y, X)
    assert abs(complex(xy[1][(0, 0)]) - 0.5) < 5e-3
    assert abs(complex(yx[1][(0, 0)]) + 0.5) < 5e-3


def moyal_order2_oracle(f, g):
    """Brute-force second-order term of the constant-coefficient product."""
    from kwl.operators import p_acc, p_diff_multi
    out = {}
    comps = {(0, 1): 1, (1, 0): -1}
    for (i1, j1), s1 in comps.items():
        for (i2, j2), s2 in comps.items():
            df = [0, 0]; df[i1] += 1; df[i2] += 1
            dg = [0, 0]; dg[j1] += 1; dg[j2] += 1
            for mono, c in p_mul(p_diff_multi(f, tuple(df)),
                                 p_diff_multi(g, tuple(dg))).items():
                p_acc(out, mono, c * s1 * s2 * Fraction(1, 8))
    return out


def test_star_order2_matches_moyal():
    star = star_product(PI_CONST, 2, ANGLE, 4 * 10 ** 5, seed=2)
    for f in [{(2, 0): Fraction(1)}, {(1, 1): Fraction(1)}]:
        for g in [{(0, 2): Fraction(1)}, {(1, 1): Fraction(1)}]:
            got = star.ops[2].apply([f, g])
            want = moyal_order2_oracle(f, g)
            dev = p_max_abs(p_sub(got, want))
            assert dev < 0.02, (f, g, dev)


def test_associativity_order_zero_exact():
    rep = check_associativity(PI_CONST, X, Y, X, 0, ANGLE, 10 ** 4, seed=1)
    assert rep.residuals == (0.0,)
    assert rep.passed


def test_associativity_linear_poisson():
    star = star_product(PI_LINEAR, 2, ANGLE, 2 * 10 ** 5, seed=2)
    rep = check_associativity(PI_LINEAR, X, Y, {(1, 1): Fraction(1)}, 2,
                              ANGLE, 2 * 10 ** 5, seed=2, star=star)
    assert rep.passed


def test_non_poisson_rejected():
    if jacobi_defect(bivector(3, [(0, 1, (0, 0, 1), 1), (1, 2, (1, 0, 0), 1)])) > 0:
        with pytest.raises(ValueError, match="Poisson"):
            check_associativity(
                bivector(3, [(0, 1, (0, 0, 1), 1), (1, 2, (1, 0, 0), 1)]),
                {(1, 0, 0): Fraction(1)}, {(0, 1, 0): Fraction(1)},
                {(0, 0, 1): Fraction(1)}, 1, ANGLE, 10 ** 4, 1)


def test_jacobi_defect_two_dim_always_zero():
    assert jacobi_defect(PI_LINEAR) == 0.0
    assert jacobi_defect(PI_CONST) == 0.0


def test_one_in_one_out_integral_vanishes():
    val, err, _ = one_in_one_out_integral(0.3 + 1.1j, -0.4 + 0.8j, 2 * 10 ** 5, 3)
    assert abs(val) < max(1e-2, 3 * err)


def test_globalization_log():
    rep = check_globalization(LOG, 10 ** 5, seed=4, contour_pairs=2)
    assert rep.passed
    assert all(ok for _, _, ok in rep.linear_slot)
    classes = {c for _, c, _ in rep.linear_slot}
    assert "zero-by-linearity" in classes


def test_bivector_json_round_trip():
    d = bivector_to_json_dict(PI_LINEAR)
    assert d["dim"] == 2
    back = bivector_from_json_dict(d)
    assert back.component((0, 1)) == {(1, 0): 1.0}


def test_poly_json_round_trip():
    p = {(1, 2): 1.5, (0, 0): -2.0}
    rows = poly_to_json_list(p)
    back = poly_from_json_list(2, rows)
    assert back == p


def test_multiplication_operator():
    mult = multiplication_operator(2)
    assert mult.apply([X, Y]) == {(1, 1): Fraction(1)}


def test_weight_times_operator_order_invariant():
    from kwl.graphs import parse_graph
    from kwl.weights import cached_weight
    g = parse_graph("2 1 ; a1>a2 a2>g1 a1>g1")
    h = parse_graph("2 1 ; a2>g1 a1>a2 a1>g1")
    wg = cached_weight(g, ANGLE, 10 ** 4, 5).value
    wh = cached_weight(h, ANGLE, 10 ** 4, 5).value
    Dg = d_gamma(g, [PI_LINEAR, PI_LINEAR])
    Dh = d_gamma(h, [PI_LINEAR, PI_LINEAR])
    probe = [{(1, 1): Fraction(1)}]
    left = {k: complex(wg) * complex(v) for k, v in Dg.apply(probe).items()}
    right = {k: complex(wh) * complex(v) for k, v in Dh.apply(probe).items()}
    assert set(left) == set(right)
    for k in left:
        assert abs(left[k] - right[k]) < 1e-12
