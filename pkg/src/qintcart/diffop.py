"""Normal-ordered differential operators with expression coefficients.

A :class:`DiffOp` is ``Σ c_α(x, y, z) ∂^α`` with every derivative to the
right of its coefficient. Momenta enter as ``p_j = -iħ ∂_j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

from .expr import (
    HBAR,
    I,
    MOMENTA,
    ONE,
    SPATIAL,
    ZERO,
    Const,
    Expr,
    Var,
    add,
    as_expr,
    diff,
    diff_multi,
    hbar_coefficients,
    is_zero,
    mul,
    parse,
    power,
    substitute,
    to_string,
)
from .expr.evaluate import DEFAULT_TOL, DEFAULT_TRIALS

MAX_ORDER = 4
MINUS_I_HBAR = mul(-1, I, HBAR)


class OrderOverflowError(ValueError):
    pass


def _index_add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _unit(j: int):
    return tuple(1 if k == j else 0 for k in range(3))


class DiffOp:
    """Immutable map multi-index -> coefficient; literal zeros are never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != 3 or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha}")
            if sum(alpha) > MAX_ORDER:
                raise OrderOverflowError(f"order {sum(alpha)} exceeds {MAX_ORDER}")
            c = as_expr(c)
            if not c.is_zero_literal:
                clean[alpha] = c
        object.__setattr__(self, "_terms", dict(sorted(clean.items())))

    def __setattr__(self, name, value):
        raise AttributeError("DiffOp is immutable")

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __getitem__(self, alpha) -> Expr:
        return self._terms.get(tuple(alpha), ZERO)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    @property
    def order(self) -> int:
        return max((sum(a) for a in self._terms), default=0)

    def __eq__(self, other):
        return isinstance(other, DiffOp) and self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __add__(self, other):
        other = _as_op(other)
        out = dict(self._terms)
        for a, c in other.items():
            out[a] = add(out[a], c) if a in out else c
        return DiffOp(out)

    __radd__ = __add__

    def __neg__(self):
        return DiffOp({a: mul(-1, c) for a, c in self.items()})

    def __sub__(self, other):
        return self + (-_as_op(other))

    def __rsub__(self, other):
        return _as_op(other) - self

    def scale(self, factor) -> "DiffOp":
        """Left-multiply every coefficient by an expression."""
        factor = as_expr(factor)
        return DiffOp({a: mul(factor, c) for a, c in self.items()})

    def __mul__(self, other):
        if isinstance(other, DiffOp):
            return compose(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return _as_op(other) * self if isinstance(other, DiffOp) else self.scale(other)

    def __matmul__(self, other):
        return compose(self, other)

    def map(self, f) -> "DiffOp":
        """Apply ``f`` to every coefficient."""
        return DiffOp({a: f(c) for a, c in self.items()})

    def apply(self, phi) -> Expr:
        """Act on a function given as an expression."""
        phi = as_expr(phi)
        return add(*(mul(c, diff_multi(phi, a)) for a, c in self.items()))

    def __str__(self):
        return momentum_string(self)

    def __repr__(self):
        return f"DiffOp({momentum_string(self)!r})"


def _as_op(v) -> DiffOp:
    if isinstance(v, DiffOp):
        return v
    return multiplication(as_expr(v))


def multiplication(c) -> DiffOp:
    """The operator of multiplication by ``c``."""
    return DiffOp({(0, 0, 0): as_expr(c)})


def partial(j: int) -> DiffOp:
    return DiffOp({_unit(j): ONE})


def momentum(j: int) -> DiffOp:
    """``p_j = -iħ ∂_j`` (0-based axis index)."""
    return DiffOp({_unit(j): MINUS_I_HBAR})


def compose(a: DiffOp, b: DiffOp) -> DiffOp:
    """Operator product ``a ∘ b`` normal-ordered by the Leibniz rule.

    ``c ∂^α ∘ d ∂^β = c Σ_{γ≤α} C(α,γ) (∂^γ d) ∂^{α-γ+β}``
    """
    if a.order + b.order > MAX_ORDER:
        raise OrderOverflowError(f"composition order {a.order + b.order} exceeds {MAX_ORDER}")
    buckets: dict[tuple, list] = {}
    derivs: dict[tuple, Expr] = {}
    for alpha, c in a.items():
        for gamma in itertools.product(*(range(k + 1) for k in alpha)):
            weight = comb(alpha[0], gamma[0]) * comb(alpha[1], gamma[1]) * comb(alpha[2], gamma[2])
            rest = (alpha[0] - gamma[0], alpha[1] - gamma[1], alpha[2] - gamma[2])
            for beta, d in b.items():
                key = (id(d), gamma)
                dd = derivs.get(key)
                if dd is None:
                    dd = diff_multi(d, gamma)
                    derivs[key] = dd
                if dd.is_zero_literal:
                    continue
                buckets.setdefault(_index_add(rest, beta), []).append(mul(weight, c, dd))
    return DiffOp({k: add(*v) for k, v in buckets.items()})


def prune(op: DiffOp, trials=DEFAULT_TRIALS, tol=DEFAULT_TOL, seed=0, fixed=None) -> DiffOp:
    """Drop coefficients that zero-test."""
    return DiffOp({a: c for a, c in op.items() if not is_zero(c, trials, tol, seed, fixed)})


def commutator(a: DiffOp, b: DiffOp, *, prune_zeros=True, trials=DEFAULT_TRIALS, tol=DEFAULT_TOL,
               seed=0, fixed=None) -> DiffOp:
    """``[a, b] = a∘b - b∘a``; coefficients that zero-test are removed unless ``prune_zeros`` is off."""
    raw = compose(a, b) - compose(b, a)
    return prune(raw, trials, tol, seed, fixed) if prune_zeros else raw


def split_by_order(op: DiffOp) -> dict[int, list]:
    """Group ``(multi-index, coefficient)`` pairs by total derivative order."""
    out: dict[int, list] = {}
    for alpha, c in op.items():
        out.setdefault(sum(alpha), []).append((alpha, c))
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class MomentumPolynomial:
    """Polynomial in the momenta with expression coefficients.

    ``ordering="left"`` means ``c p^α`` with the coefficient to the left of
    every momentum. ``ordering="symmetrized"`` means ``½(c p^α + p^α c)``, so a
    coefficient ``2A`` encodes the pair ``A p + p A`` and the classical symbol
    of any term is just ``c p^α`` in both orderings.
    """

    terms: dict
    ordering: str = "left"

    def __post_init__(self):
        if self.ordering not in ("left", "symmetrized"):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        clean = {}
        for alpha, c in self.terms.items():
            c = as_expr(c)
            if not c.is_zero_literal:
                clean[tuple(alpha)] = c
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    def __add__(self, other: "MomentumPolynomial"):
        if other.ordering != self.ordering:
            raise ValueError("cannot add momentum polynomials with different orderings")
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = add(out[a], c) if a in out else c
        return MomentumPolynomial(out, self.ordering)

    def map(self, f) -> "MomentumPolynomial":
        return MomentumPolynomial({a: f(c) for a, c in self.terms.items()}, self.ordering)

    def symbol(self) -> Expr:
        """The polynomial with commuting momenta p1, p2, p3."""
        ps = [Var(m) for m in MOMENTA]
        return add(*(mul(c, *(power(ps[j], k) for j, k in enumerate(a) if k)) for a, c in self.terms.items()))

    def __str__(self):
        return _poly_string(self.terms)


def _momentum_power(alpha) -> DiffOp:
    k = sum(alpha)
    return DiffOp({tuple(alpha): power(MINUS_I_HBAR, k) if k else ONE})


def from_momentum(mp: MomentumPolynomial) -> DiffOp:
    """Substitute ``p_j = -iħ ∂_j`` and normal-order."""
    out = DiffOp()
    for alpha, c in mp.terms.items():
        left = compose(multiplication(c), _momentum_power(alpha))
        if mp.ordering == "left" or sum(alpha) == 0:
            out = out + left
        else:
            right = compose(_momentum_power(alpha), multiplication(c))
            out = out + (left + right).scale(Const(1) / 2)
    return out


def to_momentum(op: DiffOp) -> MomentumPolynomial:
    """Left-ordered momentum form: ``c ∂^α = c (i/ħ)^{|α|} p^α``."""
    i_over_hbar = mul(I, power(HBAR, -1))
    return MomentumPolynomial({a: mul(c, power(i_over_hbar, sum(a))) for a, c in op.items()}, "left")


def _poly_string(terms: dict) -> str:
    if not terms:
        return "0"
    pieces = []
    for alpha, c in sorted(terms.items(), key=lambda t: (-sum(t[0]), tuple(-k for k in t[0]))):
        mono = "*".join(f"p{j + 1}" + (f"^{k}" if k > 1 else "") for j, k in enumerate(alpha) if k)
        if not mono:
            pieces.append(to_string(c))
        elif c == ONE:
            pieces.append(mono)
        elif c == Const(-1):
            pieces.append("-" + mono)
        else:
            text = to_string(c)
            if _needs_parens(c):
                text = f"({text})"
            pieces.append(f"{text}*{mono}")
    out = pieces[0]
    for p in pieces[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def _needs_parens(c: Expr) -> bool:
    from .expr import Add

    return isinstance(c, Add)


def momentum_string(op: DiffOp) -> str:
    """Print an operator as a left-ordered momentum polynomial."""
    return _poly_string(to_momentum(op).terms)


def momentum_coefficients(e: Expr, max_degree: int = MAX_ORDER) -> dict:
    """Coefficients of the commuting momenta p1, p2, p3 in a polynomial expression."""
    from math import factorial

    out = {}
    zero_p = {m: 0 for m in MOMENTA}
    for n in range(max_degree + 1):
        for alpha in _indices_of_order(n):
            d = e
            for j, k in enumerate(alpha):
                for _ in range(k):
                    d = diff(d, MOMENTA[j])
            if d.is_zero_literal:
                continue
            c = substitute(d, variables=zero_p)
            denom = factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2])
            c = mul(Const(1) / denom, c) if denom != 1 else c
            if not c.is_zero_literal:
                out[alpha] = c
    return out


def _indices_of_order(n: int):
    return [a for a in itertools.product(range(n + 1), repeat=3) if sum(a) == n]


def parse_momentum(text: str, ordering: str = "left") -> MomentumPolynomial:
    """Parse ``"p1^2 + 4*f'(x)*p2"`` into a momentum polynomial.

    Momenta are treated as commuting symbols and collected; the ordering tag
    says how the resulting monomials are to be read as operators.
    """
    e = parse(text)
    terms = momentum_coefficients(e)
    rebuilt = MomentumPolynomial(terms, ordering).symbol()
    if not is_zero(add(e, mul(-1, rebuilt)), trials=8):
        raise ValueError(f"not a polynomial of degree <= {MAX_ORDER} in the momenta: {text!r}")
    return MomentumPolynomial(terms, ordering)


def parse_operator(text: str, ordering: str = "left") -> DiffOp:
    return from_momentum(parse_momentum(text, ordering))


def levi_civita(i: int, k: int, l: int) -> int:
    return (i - k) * (k - l) * (l - i) // 2


def rotation(i: int) -> DiffOp:
    """``M_i = ε_{ikl} x_k p_l`` (0-based axis index)."""
    xs = [Var(v) for v in SPATIAL]
    out = DiffOp()
    for k in range(3):
        for l in range(3):
            eps = levi_civita(i, k, l)
            if eps:
                out = out + compose(multiplication(mul(eps, xs[k])), momentum(l))
    return out


def _check_symmetric(m, name):
    for i in range(3):
        for k in range(i + 1, 3):
            if as_expr(m[i][k]) != as_expr(m[k][i]):
                raise ValueError(f"{name} must be symmetric: entries ({i},{k}) and ({k},{i}) differ")


def build_bilinear(a, b, c, f, gamma) -> DiffOp:
    """``a_ik M_i M_k + b_ik (p_i M_k + M_k p_i) + c_ik p_i p_k + f_i p_i + γ``."""
    _check_symmetric(a, "a")
    _check_symmetric(c, "c")
    M = [rotation(i) for i in range(3)]
    p = [momentum(i) for i in range(3)]
    out = DiffOp()
    for i in range(3):
        for k in range(3):
            aik, bik, cik = as_expr(a[i][k]), as_expr(b[i][k]), as_expr(c[i][k])
            if not aik.is_zero_literal:
                out = out + compose(M[i], M[k]).scale(aik)
            if not bik.is_zero_literal:
                out = out + (compose(p[i], M[k]) + compose(M[k], p[i])).scale(bik)
            if not cik.is_zero_literal:
                out = out + compose(p[i], p[k]).scale(cik)
        fi = as_expr(f[i])
        if not fi.is_zero_literal:
            out = out + compose(multiplication(fi), p[i])
    return out + multiplication(gamma)


def classical_coefficients(op: DiffOp) -> dict:
    """Principal-symbol coefficients of each monomial ``p^α`` (ħ -> 0 limit).

    A coefficient ``c_α`` of ``∂^α`` carries ``(-iħ)^{|α|}``; the classical
    coefficient is the ħ^{|α|} part times ``i^{|α|}``.
    """
    out = {}
    for alpha, c in op.items():
        k = sum(alpha)
        parts = hbar_coefficients(c)
        lower = [p for p in parts[:k] if not p.is_zero_literal]
        if lower and not all(is_zero(p, trials=8) for p in lower):
            raise ValueError(f"coefficient of order {k} has ħ-powers below {k}: not a quantized symbol")
        if len(parts) > k and not parts[k].is_zero_literal:
            out[alpha] = mul(power(I, k), parts[k])
    return out
