"""Data types shared by the catalog, the determining pipeline and the classical checks."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

from .diffop import DiffOp, MomentumPolynomial, from_momentum
from .expr import ZERO, Const, Expr, RewriteRule, as_expr, mul

HALF = Const(1) / 2


@dataclass(frozen=True)
class EMField:
    """Scalar potential ``V`` and vector potential ``A = (A1, A2, A3)``."""

    V: Expr
    A: tuple

    def __post_init__(self):
        object.__setattr__(self, "V", as_expr(self.V))
        A = tuple(as_expr(a) for a in self.A)
        if len(A) != 3:
            raise ValueError("vector potential needs three components")
        object.__setattr__(self, "A", A)

    def map(self, f) -> "EMField":
        return EMField(f(self.V), tuple(f(a) for a in self.A))


def hamiltonian_momentum(fld: EMField) -> tuple[MomentumPolynomial, MomentumPolynomial]:
    """``(½p² + V, A_i p_i + p_i A_i)`` as left-ordered and symmetrized parts."""
    kinetic = {(2, 0, 0): HALF, (0, 2, 0): HALF, (0, 0, 2): HALF, (0, 0, 0): fld.V}
    magnetic = {tuple(1 if k == j else 0 for k in range(3)): mul(2, a) for j, a in enumerate(fld.A)}
    return MomentumPolynomial(kinetic, "left"), MomentumPolynomial(magnetic, "symmetrized")


def hamiltonian(fld: EMField) -> DiffOp:
    """``H = ½p² + V + A_i p_i + p_i A_i`` in normal form."""
    left, sym = hamiltonian_momentum(fld)
    return from_momentum(left) + from_momentum(sym)


@dataclass(frozen=True)
class CaseSpec:
    """One catalog entry: field, commuting integrals, and the attached ODE rules.

    ``q`` and ``p`` are left-ordered momentum polynomials; ``Q`` and ``P`` are
    their normal-ordered operators. ``params`` maps every parameter name to
    its bound expression, or ``None`` while it is free.
    """

    id: str
    field: EMField
    q: MomentumPolynomial
    p: MomentumPolynomial
    params: dict = field(default_factory=dict)
    rules: tuple = ()
    omega: tuple | None = None
    constraint_residuals: tuple = ()
    summary: str = ""
    leading: tuple = (0, 1)

    @cached_property
    def Q(self) -> DiffOp:
        return from_momentum(self.q)

    @cached_property
    def P(self) -> DiffOp:
        return from_momentum(self.p)

    @cached_property
    def H(self) -> DiffOp:
        return hamiltonian(self.field)

    @property
    def free_params(self) -> list[str]:
        return sorted(n for n, v in self.params.items() if v is None)

    def with_changes(self, **changes) -> "CaseSpec":
        return replace(self, **changes)

    def reduced(self, e: Expr) -> Expr:
        from .expr import reduce

        return reduce(e, self.rules)


def rule(function: str, variable: str, replacement) -> RewriteRule:
    return RewriteRule(function, variable, as_expr(replacement))


__all__ = ["EMField", "CaseSpec", "hamiltonian", "hamiltonian_momentum", "rule", "ZERO"]
