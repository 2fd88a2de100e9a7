import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qintcart.diffop import (
    MAX_ORDER,
    DiffOp,
    MomentumPolynomial,
    OrderOverflowError,
    build_bilinear,
    commutator,
    compose,
    from_momentum,
    momentum,
    multiplication,
    parse_momentum,
    parse_operator,
    partial,
    rotation,
    split_by_order,
    to_momentum,
)
from qintcart.expr import HBAR, I, Var, add, fn, is_zero, mul, neg, parse, power
from qintcart.testing import random_diffop, test_function

SEEDS = st.integers(min_value=0, max_value=2**32 - 1)


def op_is_zero(op, seed=0):
    return all(is_zero(c, seed=seed) for _, c in op.items())


def op_equal(a, b, seed=0):
    return op_is_zero(a - b, seed)


def test_canonical_commutator():
    # [x, p1] = i hbar
    c = commutator(multiplication(Var("x")), momentum(0))
    assert list(c.terms) == [(0, 0, 0)]
    assert is_zero(add(c[(0, 0, 0)], neg(mul(I, HBAR))))


def test_momenta_commute():
    assert len(commutator(momentum(0), momentum(2))) == 0


def test_leibniz_example():
    # d/dx . f(x) = f'(x) + f(x) d/dx
    f = fn("f", "x")
    op = compose(partial(0), multiplication(f))
    assert op[(0, 0, 0)] == f.__class__(f.name, f.args, (1,))
    assert op[(1, 0, 0)] == f


def test_order_bound():
    with pytest.raises(OrderOverflowError):
        compose(DiffOp({(2, 1, 0): 1}), DiffOp({(0, 1, 1): 1}))
    assert DiffOp({(2, 2, 0): 1}).order == MAX_ORDER


def test_immutable():
    op = partial(1)
    with pytest.raises(AttributeError):
        op.foo = 1


@pytest.mark.parametrize("i, k, l", [(0, 1, 2), (1, 2, 0), (2, 0, 1)])
def test_rotation_algebra(i, k, l):
    # [M_i, M_k] = i hbar eps_ikl M_l
    c = commutator(rotation(i), rotation(k))
    assert op_equal(c, rotation(l).scale(mul(I, HBAR)))


def test_rotation_commutes_with_p_squared():
    p2 = sum((compose(momentum(j), momentum(j)) for j in range(3)), DiffOp())
    for i in range(3):
        assert len(commutator(rotation(i), p2)) == 0


def test_bilinear_form():
    z = [[0] * 3 for _ in range(3)]
    c = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
    op = build_bilinear(z, z, c, [0, 0, 0], parse("u1(x)"))
    assert op_equal(op, parse_operator("p1^2 + u1(x)"))
    with pytest.raises(ValueError):
        build_bilinear([[0, 1, 0], [0, 0, 0], [0, 0, 0]], z, z, [0, 0, 0], 0)


def test_symmetrized_first_order_term():
    # (A p1 + p1 A) with A = x^2 is 2 x^2 p1 - 2 i hbar x
    mp = MomentumPolynomial({(1, 0, 0): parse("2*x^2")}, "symmetrized")
    want = from_momentum(MomentumPolynomial({(1, 0, 0): parse("2*x^2"), (0, 0, 0): parse("-2*i*hbar*x")}))
    assert op_equal(from_momentum(mp), want)


def test_momentum_round_trip():
    mp = parse_momentum("p1^2 + 4*f(x)*p3 + 2*u1(x)")
    back = to_momentum(from_momentum(mp))
    for alpha in set(mp.terms) | set(back.terms):
        a = mp.terms.get(alpha, 0)
        assert is_zero(add(a, neg(back.terms.get(alpha, 0))))


def test_parse_momentum_rejects_non_polynomials():
    with pytest.raises(ValueError):
        parse_momentum("sin(p1)")
    with pytest.raises(ValueError):
        parse_momentum("p1^5")


def test_split_by_order():
    op = parse_operator("p1^2 + x*p2 + 3")
    assert sorted(split_by_order(op)) == [0, 1, 2]


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_diffop(rng, 1, 2, 1) for _ in range(3))
    assert op_equal(compose(compose(a, b), c), compose(a, compose(b, c)), seed)


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_composition_acts_like_successive_application(seed):
    rng = np.random.default_rng(seed)
    a, b = random_diffop(rng), random_diffop(rng)
    phi = test_function(rng)
    assert is_zero(add(compose(a, b).apply(phi), neg(a.apply(b.apply(phi)))), seed=seed, tol=1e-10)


@settings(max_examples=30, deadline=None)
@given(SEEDS)
def test_jacobi_identity(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_diffop(rng, 1, 2, 1) for _ in range(3))
    cyc = (commutator(a, commutator(b, c, prune_zeros=False), prune_zeros=False)
           + commutator(b, commutator(c, a, prune_zeros=False), prune_zeros=False)
           + commutator(c, commutator(a, b, prune_zeros=False), prune_zeros=False))
    assert op_is_zero(cyc, seed)


@settings(max_examples=40, deadline=None)
@given(SEEDS)
def test_commutator_antisymmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = random_diffop(rng), random_diffop(rng)
    assert op_is_zero(commutator(a, b, prune_zeros=False) + commutator(b, a, prune_zeros=False), seed)


def test_power_of_momentum():
    p1 = momentum(0)
    assert compose(p1, p1)[(2, 0, 0)] == power(mul(-1, I, HBAR), 2)
