"""Small worked examples, each checked against an independent computation."""

import json
import math

import numpy as np
import pytest

from qintcart.catalog import _family6, gauge_transform, make_case
from qintcart.classical import (
    PhaseState,
    case_observables,
    concretize,
    integrate_trajectory,
    parse_profiles,
    random_ranks,
)
from qintcart.cli import main
from qintcart.determining import (
    eq4_residuals,
    eq4_sextuple,
    gauge_function,
    general_solution_ansatz,
)
from qintcart.diffop import (
    DiffOp,
    MomentumPolynomial,
    build_bilinear,
    commutator,
    compose,
    from_momentum,
    momentum,
    multiplication,
    rotation,
    split_by_order,
)
from qintcart.expr import (
    HBAR,
    AbstractFn,
    EvalPoint,
    RewriteRule,
    Var,
    add,
    diff,
    evaluate,
    fn,
    is_zero,
    mul,
    neg,
    parse,
    reduce,
    substitute,
)
from qintcart.testing import random_expr

integrate = pytest.importorskip("scipy.integrate")


def op_zero(op):
    return all(is_zero(c) for _, c in op.items())


def test_third_derivative_through_ode_rule_matches_finite_differences():
    C, C1, C4 = 0.7, -0.4, 0.3
    rule = RewriteRule("f", "x", parse("C*f(x)^2 + C1*f(x) + C4"))
    f3 = reduce(diff(diff(diff(fn("f", "x"), "x"), "x"), "x"), [rule])
    sol = integrate.solve_ivp(lambda t, y: [y[1], C * y[0] ** 2 + C1 * y[0] + C4], (0, 2), [0.2, 0.1],
                              method="DOP853", rtol=1e-13, atol=1e-14, dense_output=True)
    x0, h = 1.1, 1e-3
    fpp = lambda t: C * sol.sol(t)[0] ** 2 + C1 * sol.sol(t)[0] + C4  # noqa: E731
    fd = (fpp(x0 + h) - fpp(x0 - h)) / (2 * h)
    f0, fp0 = sol.sol(x0)
    pt = EvalPoint(params=dict(C=C, C1=C1, C4=C4))
    pt.set_jet("f", "x", 0, f0)
    pt.set_jet("f", "x", 1, fp0)
    assert abs(evaluate(f3, pt) - fd) < 1e-6


def test_case61_u1_against_hand_sum():
    a1, a2, a3, r1, k1, C = 0.7, 1.3, -0.9, 0.4, 1.1, 0.6
    x = 0.35
    want = (a2**2 * a3**2 / 4 * ((r1**2 + k1**2) * math.cosh(2 * a1 * x) + 2 * r1 * k1 * math.sinh(2 * a1 * x))
            + C * (r1 * math.cosh(a1 * x) + k1 * math.sinh(a1 * x)))
    pt = EvalPoint(variables={"x": x}, params=dict(a1=a1, a2=a2, a3=a3, r1=r1, k1=k1, C=C))
    assert abs(evaluate(_family6("6.1")["u1"], pt) - want) < 1e-12


def test_eq4_with_case61_closed_forms_and_a_broken_g1():
    s = make_case("6.1a")
    d = eq4_sextuple(s)
    assert all(is_zero(e) for e in eq4_residuals(**d))
    d["g1"] = add(d["g1"], 1)
    t = is_zero(eq4_residuals(**d)[0])
    assert not t and t.witness


def test_symmetrized_magnetic_terms():
    A1 = parse("g'(y)")
    op = from_momentum(MomentumPolynomial({(1, 0, 0): mul(2, A1)}, "symmetrized"))
    assert list(op.terms) == [(1, 0, 0)]
    assert is_zero(add(op[(1, 0, 0)], neg(parse("-2*i*hbar*g'(y)"))))
    op = from_momentum(MomentumPolynomial({(0, 0, 1): parse("2*(f(x) + g(y))")}, "symmetrized"))
    assert list(op.terms) == [(0, 0, 1)]
    assert is_zero(add(op[(0, 0, 1)], neg(parse("-2*i*hbar*(f(x) + g(y))"))))


def test_case2_commutator_on_polynomial_test_functions():
    s = make_case("2")
    assert op_zero(commutator(s.H, s.Q, prune_zeros=False))
    rng = np.random.default_rng(5)
    for _ in range(10):
        phi = random_expr(rng, 2, negative_powers=False, builtins=False, allow_hbar=False, allow_i=False,
                          allow_float=False)
        phi = substitute(phi, functions={"f": parse("x^2"), "g": parse("y^3"), "h": parse("z"),
                                         "F": parse("x*y + z^2")})
        lhs = add(s.H.apply(s.Q.apply(phi)), neg(s.Q.apply(s.H.apply(phi))))
        assert is_zero(lhs)


def test_rotation_against_momentum():
    # M3 = x p2 - y p1, so [M3, p1] = [x, p1] p2 = i hbar p2
    c = commutator(rotation(2), momentum(0))
    assert op_zero(c - momentum(1).scale(mul(parse("i"), HBAR)))


def test_rotation_squared_by_hand():
    x, y = multiplication(Var("x")), multiplication(Var("y"))
    m3 = compose(x, momentum(1)) - compose(y, momentum(0))
    z = [[0] * 3 for _ in range(3)]
    a = [[0, 0, 0], [0, 0, 0], [0, 0, 1]]
    assert op_zero(build_bilinear(a, z, z, [0, 0, 0], 0) - compose(m3, m3))


def test_bilinear_p1_squared():
    z = [[0] * 3 for _ in range(3)]
    op = build_bilinear(z, z, [[1, 0, 0], [0, 0, 0], [0, 0, 0]], [0, 0, 0], 0)
    assert op.terms == {(2, 0, 0): mul(-1, HBAR, HBAR)}


def test_third_order_terms_are_gradients_of_the_leading_coefficient():
    alpha = AbstractFn("alpha", ("x", "y", "z"))
    Q = DiffOp({(2, 0, 0): mul(-1, HBAR, HBAR, alpha)})
    kin = sum((compose(momentum(j), momentum(j)) for j in range(3)), DiffOp()).scale(parse("1/2"))
    top = {a: c for a, c in commutator(kin, Q).items() if sum(a) == 3}
    assert set(top) == {(3, 0, 0), (2, 1, 0), (2, 0, 1)}
    # (1/2)(-hbar^2)(-hbar^2) * 2 alpha_m d_m d_1^2
    for a, v in zip(((3, 0, 0), (2, 1, 0), (2, 0, 1)), "xyz"):
        assert is_zero(add(top[a], neg(mul(HBAR, HBAR, HBAR, HBAR, diff(alpha, v)))))


def test_case3_integral_orders():
    assert sorted(split_by_order(make_case("3").Q)) == [0, 1, 2]


def test_case_constructors():
    s2 = make_case("2")
    assert s2.field.A == (fn("v1", "z"), fn("v2", "z"), parse("0")) and s2.field.V == fn("v3", "z")
    s1 = make_case("1")
    assert s1.field.A == (parse("0"),) * 3
    assert is_zero(add(s1.q.symbol(), neg(parse("p1^2 + 2*u1(x)"))))
    s = make_case("6.1a", {"a1": 1, "a2": 2, "a3": 3})
    assert s.params["C"] == parse("0") and s.params["C1"] == parse("0")
    want = diff(parse("3*(r1*cosh(x) + k1*sinh(x))"), "x")
    assert is_zero(add(s.q.terms[(0, 1, 0)], neg(want)))


def test_gauge_sign_matters():
    # the stripping gauge is -(s + k1 + k2 + r3)/4; the unscaled sum adds to A instead
    a = general_solution_ansatz()
    wrong = gauge_transform(a.field, mul(-4, gauge_function())).A[0]
    assert not is_zero(add(wrong, neg(parse("(g1(y) + r1(z))/4"))))


def test_case1_oscillator_drift():
    sys_ = concretize(make_case("1"), parse_profiles("u1=x^2/2, u2=y^2, u3=3*z^2/2"))
    log = integrate_trajectory(sys_, PhaseState((1, 0.5, -0.3), (0.2, 0.1, 0.4)), 100, 1e-10)
    assert max(log.drift.values()) < 1e-8


def test_case2_generic_rank():
    ranks = random_ranks(case_observables(make_case("2")), 10, 8)
    assert ranks.count(3) >= 9


def test_verify_perturbed_case3_exit(capsys):
    assert main(["verify", "--case", "3", "--seed", "42"]) == 0
    assert main(["verify", "--case", "3", "--perturb", "V+x*y"]) == 1
    assert "witness" in capsys.readouterr().out


def test_determining_json_contains_leading_relation(capsys):
    main(["determining", "--format", "json"])
    rows = json.loads(capsys.readouterr().out)["residuals"]
    got = next(r for r in rows if r["commutator"] == "HP" and r["index"] == [0, 2, 0] and r["hbar_power"] == 0)
    assert is_zero(add(parse(got["residual"]), neg(parse("4*A2^(0,1,0)(x,y,z) - g2^(0,1,0)(x,y,z)"))))


def test_simulate_oscillator_exit(capsys):
    code = main(["simulate", "--case", "1", "--profile", "u1=x^2,u2=y^2,u3=z^2", "--t-final", "100"])
    assert code == 0

