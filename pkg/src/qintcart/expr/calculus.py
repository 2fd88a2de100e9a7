"""Differentiation, substitution and ODE rewrite reduction on expressions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .nodes import (
    HBAR,
    ONE,
    ZERO,
    AbstractFn,
    Add,
    Apply,
    Const,
    Expr,
    Hbar,
    ImaginaryUnit,
    Mul,
    Param,
    Pow,
    Var,
    VARIABLES,
    add,
    apply,
    as_expr,
    mul,
    neg,
    power,
)


class ReductionError(RuntimeError):
    """A rewrite rule failed to terminate (malformed rule)."""


def diff(e: Expr, v: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``v``.

    ``v`` is one of x, y, z, p1, p2, p3, or ``"hbar"``.
    """
    if v != "hbar" and v not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to {v!r}")
    return _diff(e, v)


@lru_cache(maxsize=1 << 17)
def _diff(e: Expr, v: str) -> Expr:
    if isinstance(e, (Const, ImaginaryUnit, Param)):
        return ZERO
    if isinstance(e, Hbar):
        return ONE if v == "hbar" else ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, AbstractFn):
        if v not in e.args:
            return ZERO
        k = e.args.index(v)
        orders = e.orders[:k] + (e.orders[k] + 1,) + e.orders[k + 1 :]
        return AbstractFn(e.name, e.args, orders)
    if isinstance(e, Add):
        return add(*(_diff(t, v) for t in e.args))
    if isinstance(e, Mul):
        terms = []
        args = e.args
        for k, f in enumerate(args):
            df = _diff(f, v)
            if df.is_zero_literal:
                continue
            terms.append(mul(*args[:k], df, *args[k + 1 :]))
        return add(*terms)
    if isinstance(e, Pow):
        db = _diff(e.base, v)
        if db.is_zero_literal:
            return ZERO
        return mul(e.exp, power(e.base, e.exp - 1), db)
    if isinstance(e, Apply):
        da = _diff(e.arg, v)
        if da.is_zero_literal:
            return ZERO
        outer = {
            "sin": lambda a: apply("cos", a),
            "cos": lambda a: neg(apply("sin", a)),
            "sinh": lambda a: apply("cosh", a),
            "cosh": lambda a: apply("sinh", a),
            "exp": lambda a: apply("exp", a),
        }[e.func](e.arg)
        return mul(outer, da)
    raise TypeError(f"unexpected node {type(e).__name__}")


def diff_multi(e: Expr, orders, variables=("x", "y", "z")) -> Expr:
    """Apply ``∂^orders`` (one order per entry of ``variables``)."""
    for v, n in zip(variables, orders):
        for _ in range(n):
            e = diff(e, v)
            if e.is_zero_literal:
                return e
    return e


def rebuild(e: Expr, leaf) -> Expr:
    """Bottom-up rebuild through the canonical constructors.

    ``leaf(node)`` returns a replacement for atoms or ``None`` to keep them.
    Composite nodes are rebuilt only when a child changed.
    """
    memo: dict[int, Expr] = {}

    def walk(n: Expr) -> Expr:
        key = id(n)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(n, (Add, Mul)):
            kids = [walk(a) for a in n.args]
            if all(k is a for k, a in zip(kids, n.args)):
                out = n
            else:
                out = add(*kids) if isinstance(n, Add) else mul(*kids)
        elif isinstance(n, Pow):
            b = walk(n.base)
            out = n if b is n.base else power(b, n.exp)
        elif isinstance(n, Apply):
            a = walk(n.arg)
            out = n if a is n.arg else apply(n.func, a)
        else:
            r = leaf(n)
            out = n if r is None else as_expr(r)
        memo[key] = out
        return out

    return walk(e)


def substitute(e: Expr, params=None, variables=None, functions=None, hbar=None) -> Expr:
    """Replace symbols by expressions.

    Parameters
    ----------
    params : dict name -> Expr or number
    variables : dict variable name -> Expr or number
    functions : dict function name -> Expr
        The replacement body is written in the function's own argument
        variables; derivative nodes are replaced by the matching partial
        derivatives of the body.
    hbar : Expr or number, optional
    """
    params = {k: as_expr(v) for k, v in (params or {}).items()}
    variables = {k: as_expr(v) for k, v in (variables or {}).items()}
    functions = {k: as_expr(v) for k, v in (functions or {}).items()}
    hbar_value = None if hbar is None else as_expr(hbar)
    jet_cache: dict = {}

    def leaf(n):
        if isinstance(n, Param):
            return params.get(n.name)
        if isinstance(n, Var):
            return variables.get(n.name)
        if isinstance(n, Hbar):
            return hbar_value
        if isinstance(n, AbstractFn) and n.name in functions:
            key = n.jet_key
            if key not in jet_cache:
                jet_cache[key] = diff_multi(functions[n.name], n.orders, n.args)
            return jet_cache[key]
        return None

    return rebuild(e, leaf)


def rename_variables(e: Expr, mapping: dict) -> Expr:
    """Relabel spatial variables everywhere, including abstract-function arguments."""

    def leaf(n):
        if isinstance(n, Var) and n.name in mapping:
            return Var(mapping[n.name])
        if isinstance(n, AbstractFn) and any(a in mapping for a in n.args):
            return AbstractFn(n.name, tuple(mapping.get(a, a) for a in n.args), n.orders)
        return None

    return rebuild(e, leaf)


@dataclass(frozen=True)
class RewriteRule:
    """``f''(v) -> replacement`` where the replacement uses only f, f' and parameters."""

    function: str
    variable: str
    replacement: Expr

    def __post_init__(self):
        object.__setattr__(self, "replacement", as_expr(self.replacement))

    @property
    def target(self) -> AbstractFn:
        return AbstractFn(self.function, (self.variable,), (2,))

    def __str__(self):
        return f"{self.target} = {self.replacement}"


MAX_REDUCTION_DEPTH = 64


def reduce(e: Expr, rules) -> Expr:
    """Eliminate derivatives of order >= 2 of every ruled function.

    Order n is rewritten by differentiating the order n-1 form and reducing
    again; each step lowers the maximum order, so well-formed rules
    terminate. A depth guard turns a malformed rule into ReductionError.
    """
    rules = list(rules)
    if not rules:
        return e
    by_name = {}
    for r in rules:
        if r.function in by_name:
            raise ValueError(f"two rules target {r.function!r}")
        by_name[r.function] = r
    forms: dict[tuple, Expr] = {}

    def reduced_form(name: str, var: str, n: int, depth: int) -> Expr:
        if depth > MAX_REDUCTION_DEPTH:
            raise ReductionError(f"rule for {name!r} does not terminate")
        key = (name, var, n)
        if key in forms:
            return forms[key]
        rule = by_name[name]
        if rule.variable != var:
            raise ReductionError(f"rule for {name!r} is in {rule.variable}, used with {var}")
        if n == 2:
            out = run(rule.replacement, depth + 1)
        else:
            out = run(diff(reduced_form(name, var, n - 1, depth + 1), var), depth + 1)
        forms[key] = out
        return out

    def run(expr: Expr, depth: int) -> Expr:
        if depth > MAX_REDUCTION_DEPTH:
            raise ReductionError("reduction depth exceeded")

        def leaf(n):
            if isinstance(n, AbstractFn) and n.name in by_name and n.order >= 2:
                if len(n.args) != 1:
                    raise ReductionError(f"rules apply to univariate functions, got {n}")
                return reduced_form(n.name, n.args[0], n.orders[0], depth + 1)
            return None

        return rebuild(expr, leaf)

    return run(e, 0)


def atoms(e: Expr) -> set:
    """All leaf nodes (symbols and constants) occurring in ``e``."""
    seen: set[int] = set()
    out: set = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, (Add, Mul)):
            stack.extend(n.args)
        elif isinstance(n, Pow):
            stack.append(n.base)
        elif isinstance(n, Apply):
            stack.append(n.arg)
        else:
            out.add(n)
    return out


def free_symbols(e: Expr) -> set:
    return {a for a in atoms(e) if not isinstance(a, (Const, ImaginaryUnit))}


def free_variables(e: Expr) -> set[str]:
    """Names of spatial/momentum variables ``e`` depends on, including via function arguments."""
    out = set()
    for a in atoms(e):
        if isinstance(a, Var):
            out.add(a.name)
        elif isinstance(a, AbstractFn):
            out.update(a.args)
    return out


def function_names(e: Expr) -> set[str]:
    return {a.name for a in atoms(e) if isinstance(a, AbstractFn)}


def param_names(e: Expr) -> set[str]:
    return {a.name for a in atoms(e) if isinstance(a, Param)}


def hbar_coefficients(e: Expr, max_degree: int = 8) -> list[Expr]:
    """Split a polynomial in ħ: returns c_0..c_d with e = Σ ħ^j c_j.

    Coefficients come from repeated ħ-derivatives at ħ = 0, so ``e`` must not
    contain negative powers of ħ.
    """
    out = []
    cur = e
    for j in range(max_degree + 1):
        if cur.is_zero_literal:
            break
        out.append(mul(Const(Fraction(1, math.factorial(j))), substitute(cur, hbar=0)))
        cur = diff(cur, "hbar")
    else:
        if not cur.is_zero_literal:
            raise ValueError(f"expression is not a polynomial of degree <= {max_degree} in hbar")
    while out and out[-1].is_zero_literal:
        out.pop()
    return out


def depends_on_hbar(e: Expr) -> bool:
    return HBAR in atoms(e)


def _terms(e: Expr) -> tuple:
    return e.args if isinstance(e, Add) else (e,)


def expand(e: Expr) -> Expr:
    """Distribute products and positive integer powers over sums.

    Arguments of builtin functions are expanded too; abstract functions are
    leaves.
    """
    memo: dict[Expr, Expr] = {}

    def walk(n: Expr) -> Expr:
        hit = memo.get(n)
        if hit is not None:
            return hit
        if isinstance(n, Add):
            out = add(*(walk(a) for a in n.args))
        elif isinstance(n, Mul):
            acc = [ONE]
            for a in n.args:
                parts = _terms(walk(a))
                acc = [mul(x, y) for x in acc for y in parts]
            out = add(*acc)
        elif isinstance(n, Pow):
            b = walk(n.base)
            if isinstance(b, Add) and n.exp > 0:
                acc = [ONE]
                for _ in range(n.exp):
                    acc = [mul(x, y) for x in acc for y in b.args]
                out = add(*acc)
            else:
                out = power(b, n.exp)
        elif isinstance(n, Apply):
            out = apply(n.func, walk(n.arg))
        else:
            out = n
        memo[n] = out
        return out

    return walk(e)
