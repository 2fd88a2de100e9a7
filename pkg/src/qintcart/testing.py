"""Seeded random corpora of expressions and operators for property tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .diffop import DiffOp
from .expr import (
    HBAR,
    I,
    AbstractFn,
    Const,
    Expr,
    Param,
    Var,
    add,
    apply,
    mul,
    power,
)

SPATIAL_VARS = ("x", "y", "z")
_FUNCS = (
    AbstractFn("f", ("x",)),
    AbstractFn("g", ("y",)),
    AbstractFn("h", ("z",)),
    AbstractFn("F", ("x", "y", "z")),
)
_PARAMS = (Param("a"), Param("b"), Param("C1"))


def _leaf(rng, *, allow_hbar=True, allow_i=True, allow_float=True) -> Expr:
    k = rng.integers(0, 9)
    if k <= 2:
        return Var(SPATIAL_VARS[rng.integers(0, 3)])
    if k == 3:
        return _PARAMS[rng.integers(0, len(_PARAMS))]
    if k == 4:
        fn = _FUNCS[rng.integers(0, len(_FUNCS))]
        orders = tuple(int(v) for v in rng.integers(0, 3, len(fn.args)))
        return AbstractFn(fn.name, fn.args, orders)
    if k == 5 and allow_hbar:
        return HBAR
    if k == 6 and allow_i:
        return I
    if k == 7 and allow_float:
        return Const(float(np.round(rng.uniform(-3, 3), 3)) or 0.5)
    num = int(rng.integers(-5, 6)) or 1
    return Const(Fraction(num, int(rng.integers(1, 4))))


def random_expr(rng, depth: int = 3, *, negative_powers=True, builtins=True, **leaf_opts) -> Expr:
    """A random expression; ``rng`` is a numpy Generator."""
    while True:
        try:
            return _random_expr(rng, depth, negative_powers, builtins, leaf_opts)
        except ZeroDivisionError:
            continue


def _random_expr(rng, depth, negative_powers, builtins, leaf_opts) -> Expr:
    if depth <= 0 or rng.random() < 0.25:
        return _leaf(rng, **leaf_opts)
    k = rng.integers(0, 5 if builtins else 4)
    sub = lambda: _random_expr(rng, depth - 1, negative_powers, builtins, leaf_opts)  # noqa: E731
    if k == 0:
        return add(*(sub() for _ in range(rng.integers(2, 4))))
    if k == 1:
        return mul(*(sub() for _ in range(rng.integers(2, 4))))
    if k == 2:
        lo = -2 if negative_powers else 1
        e = int(rng.integers(lo, 4)) or 2
        return power(sub(), e)
    if k == 3:
        return add(sub(), mul(-1, sub()))
    func = ("sin", "cos", "sinh", "cosh", "exp")[rng.integers(0, 5)]
    return apply(func, _random_expr(rng, min(depth - 1, 1), negative_powers, False, leaf_opts))


def expression_corpus(n: int, seed: int = 0, depth: int = 3, **opts) -> list[Expr]:
    rng = np.random.default_rng(seed)
    return [random_expr(rng, depth, **opts) for _ in range(n)]


def random_diffop(rng, max_order: int = 2, n_terms: int = 3, depth: int = 2) -> DiffOp:
    """Operator with up to ``n_terms`` random multi-indices of order <= ``max_order``."""
    terms = {}
    for _ in range(int(rng.integers(1, n_terms + 1))):
        order = int(rng.integers(0, max_order + 1))
        alpha = [0, 0, 0]
        for _ in range(order):
            alpha[int(rng.integers(0, 3))] += 1
        c = random_expr(rng, depth, negative_powers=False, builtins=False, allow_hbar=False, allow_float=False)
        alpha = tuple(alpha)
        terms[alpha] = add(terms[alpha], c) if alpha in terms else c
    return DiffOp(terms)


def test_function(rng) -> Expr:
    """A smooth function of x, y, z for operator-application oracles."""
    F = AbstractFn("phi", SPATIAL_VARS)
    kind = rng.integers(0, 3)
    if kind == 0:
        return F
    if kind == 1:
        return mul(apply("exp", add(mul(Const(Fraction(1, 2)), Var("x")), Var("y"))), apply("sin", Var("z")))
    return add(mul(Var("x"), Var("x"), Var("y")), mul(Var("z"), F))


test_function.__test__ = False
