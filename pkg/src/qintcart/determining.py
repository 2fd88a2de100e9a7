"""Determining equations for the Cartesian pair Q = p1² + f·p + γ1, P = p2² + g·p + γ2.

:func:`generate` commutes the general ansatz with H, splits every commutator
by momentum monomial and by power of ħ, and returns the coefficients as a
:class:`ResidualSystem`. Residuals are normalized so that the leading ħ
power of ``[A, B] / (iħ)`` equals the Poisson-bracket coefficient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .diffop import DiffOp, MomentumPolynomial, commutator, from_momentum
from .expr import (
    HBAR,
    I,
    ZERO,
    AbstractFn,
    Const,
    Expr,
    EvalPoint,
    Var,
    add,
    as_expr,
    diff,
    expand,
    free_variables,
    hbar_coefficients,
    is_zero,
    mul,
    neg,
    power,
    reduce,
    rename_variables,
    substitute,
    to_latex,
    to_string,
)
from .expr.evaluate import DEFAULT_TOL, DEFAULT_TRIALS
from .model import CaseSpec, EMField, hamiltonian, rule

QUARTER = Const(1) / 4
XYZ = ("x", "y", "z")


def _full(name: str) -> AbstractFn:
    return AbstractFn(name, XYZ)


@dataclass(frozen=True)
class CartesianAnsatz:
    """``Q = p1² + f·p + γ1``, ``P = p2² + g·p + γ2`` with a field (V, A).

    The default instance is fully abstract: every unknown is a function of
    x, y, z.
    """

    f: tuple = (_full("f1"), _full("f2"), _full("f3"))
    g: tuple = (_full("g1"), _full("g2"), _full("g3"))
    gamma1: Expr = _full("gamma1")
    gamma2: Expr = _full("gamma2")
    field: EMField = EMField(_full("V"), (_full("A1"), _full("A2"), _full("A3")))

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(as_expr(c) for c in self.f))
        object.__setattr__(self, "g", tuple(as_expr(c) for c in self.g))
        object.__setattr__(self, "gamma1", as_expr(self.gamma1))
        object.__setattr__(self, "gamma2", as_expr(self.gamma2))

    @property
    def q(self) -> MomentumPolynomial:
        return MomentumPolynomial({(2, 0, 0): 1, (1, 0, 0): self.f[0], (0, 1, 0): self.f[1],
                                   (0, 0, 1): self.f[2], (0, 0, 0): self.gamma1})

    @property
    def p(self) -> MomentumPolynomial:
        return MomentumPolynomial({(0, 2, 0): 1, (1, 0, 0): self.g[0], (0, 1, 0): self.g[1],
                                   (0, 0, 1): self.g[2], (0, 0, 0): self.gamma2})

    def substitution(self) -> dict:
        """Map from the abstract unknown names to this ansatz's expressions."""
        return {
            "f1": self.f[0], "f2": self.f[1], "f3": self.f[2],
            "g1": self.g[0], "g2": self.g[1], "g3": self.g[2],
            "gamma1": self.gamma1, "gamma2": self.gamma2,
            "V": self.field.V, "A1": self.field.A[0], "A2": self.field.A[1], "A3": self.field.A[2],
        }


def ansatz_from_case(spec: CaseSpec) -> CartesianAnsatz:
    """Read f, g, γ1, γ2 off a catalog entry's integrals."""
    if spec.q.terms.get((2, 0, 0)) != as_expr(1) or spec.p.terms.get((0, 2, 0)) != as_expr(1):
        raise ValueError(f"case {spec.id} is not in the Cartesian p1²/p2² frame")
    units = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    return CartesianAnsatz(
        f=tuple(spec.q.terms.get(u, ZERO) for u in units),
        g=tuple(spec.p.terms.get(u, ZERO) for u in units),
        gamma1=spec.q.terms.get((0, 0, 0), ZERO),
        gamma2=spec.p.terms.get((0, 0, 0), ZERO),
        field=spec.field,
    )


@dataclass(frozen=True)
class Residual:
    commutator: str
    order: int
    index: tuple
    hbar_power: int
    expr: Expr
    raw: Expr

    def to_dict(self) -> dict:
        return {
            "commutator": self.commutator,
            "order": self.order,
            "index": list(self.index),
            "hbar_power": self.hbar_power,
            "residual": to_string(self.expr),
            "raw": to_string(self.raw),
        }


@dataclass
class ResidualSystem:
    """Coefficients that must vanish for ``[H,Q] = [H,P] = [Q,P] = 0``."""

    residuals: list = field(default_factory=list)

    def __len__(self):
        return len(self.residuals)

    def __iter__(self):
        return iter(self.residuals)

    def select(self, commutator=None, order=None, hbar_power=None) -> list[Residual]:
        return [
            r for r in self.residuals
            if (commutator is None or r.commutator == commutator)
            and (order is None or r.order == order)
            and (hbar_power is None or r.hbar_power == hbar_power)
        ]

    def find(self, commutator: str, index, hbar_power: int = 0) -> Expr:
        for r in self.residuals:
            if r.commutator == commutator and r.index == tuple(index) and r.hbar_power == hbar_power:
                return r.expr
        return ZERO

    def to_json(self) -> list[dict]:
        return [r.to_dict() for r in self.residuals]

    def dumps(self) -> str:
        return json.dumps({"schema": "qintcart/1", "residuals": self.to_json()}, indent=2)

    def to_latex(self) -> str:
        lines = [r"\begin{align*}"]
        for r in self.residuals:
            mono = " ".join(f"p_{j + 1}^{{{k}}}" if k > 1 else f"p_{j + 1}" for j, k in enumerate(r.index) if k)
            tag = rf"\text{{{r.commutator}}},\ {mono or '1'},\ \hbar^{{{r.hbar_power}}}"
            lines.append(rf"  & {to_latex(r.expr)} = 0 && ({tag}) \\")
        lines.append(r"\end{align*}")
        return "\n".join(lines)


def split_commutator(name: str, op: DiffOp) -> list[Residual]:
    """Split an operator coefficient-wise into normalized residuals.

    The coefficient ``c_α`` of ``∂^α`` is ``(-iħ)^{|α|}`` times the momentum
    coefficient; dividing the whole commutator by ``iħ`` leaves
    ``R_α = c_α / ((-iħ)^{|α|} iħ)``, a Laurent polynomial in ħ whose
    ħ^0 part is the classical bracket coefficient.
    """
    out = []
    for alpha, c in op.items():
        k = sum(alpha)
        factor = mul(-1, power(I, k + 1))
        for j, part in enumerate(hbar_coefficients(c)):
            if part.is_zero_literal:
                continue
            out.append(Residual(name, k, alpha, j - k - 1, expand(mul(factor, part)), c))
    out.sort(key=lambda r: (-r.order, r.index, r.hbar_power))
    return out


def generate(ansatz: CartesianAnsatz | None = None, *, prune_zeros=True, trials=DEFAULT_TRIALS,
             tol=DEFAULT_TOL, seed=0) -> ResidualSystem:
    """Commute the ansatz with H, split by momentum order and ħ power."""
    ansatz = ansatz or CartesianAnsatz()
    H = hamiltonian(ansatz.field)
    Q = from_momentum(ansatz.q)
    P = from_momentum(ansatz.p)
    system = ResidualSystem()
    for name, (a, b) in (("HQ", (H, Q)), ("HP", (H, P)), ("QP", (Q, P))):
        op = commutator(a, b, prune_zeros=False)
        for r in split_commutator(name, op):
            if prune_zeros and is_zero(r.expr, trials, tol, seed):
                continue
            system.residuals.append(r)
    return system


@dataclass
class SubstitutionReport:
    case_id: str
    results: list  # (Residual, reduced Expr, ZeroTest)

    @property
    def passed(self) -> bool:
        return all(t.passed for _, _, t in self.results)

    @property
    def failures(self) -> list:
        return [(r, e, t) for r, e, t in self.results if not t.passed]

    def to_dict(self) -> dict:
        return {
            "case": self.case_id,
            "passed": self.passed,
            "residuals": [
                {**r.to_dict(), "reduced_zero": t.passed, "max_residual": t.residual}
                for r, _, t in self.results
            ],
        }


def substitute_case(system: ResidualSystem, spec: CaseSpec, *, trials=DEFAULT_TRIALS, tol=DEFAULT_TOL,
                    seed=0, fixed: EvalPoint | None = None) -> SubstitutionReport:
    """Plug a catalog entry into the abstract residuals, reduce by its ODE rules, zero-test."""
    mapping = ansatz_from_case(spec).substitution()
    results = []
    for r in system:
        e = reduce(substitute(r.expr, functions=mapping), spec.rules)
        results.append((r, e, is_zero(e, trials, tol, seed, fixed)))
    return SubstitutionReport(spec.id, results)


# general solution of the highest-power system -------------------------------------------


def general_solution_ansatz(drop_r3=False, g1_variable="y") -> CartesianAnsatz:
    """Ansatz with A from the general solution in terms of s, k1, k2, r1, r2, r3.

    ``f1 = s_x + k1_x`` and ``g2 = s_y + k2_y`` are the choices forced by the
    first-order relations (up to additive constants, which drop out).
    """
    s = _full("s")
    k1 = AbstractFn("k1", ("x", "z"))
    k2 = AbstractFn("k2", ("y", "z"))
    r1, r2 = AbstractFn("r1", ("z",)), AbstractFn("r2", ("z",))
    r3p = AbstractFn("r3", ("z",), (1,))
    f2, f3 = AbstractFn("f2", ("x",)), AbstractFn("f3", ("x",))
    g1, g3 = AbstractFn("g1", (g1_variable,)), AbstractFn("g3", ("y",))
    A1 = mul(QUARTER, add(diff(s, "x"), diff(k1, "x"), g1, r1))
    A2 = mul(QUARTER, add(diff(s, "y"), diff(k2, "y"), f2, r2))
    A3 = mul(QUARTER, add(diff(s, "z"), diff(k1, "z"), diff(k2, "z"), f3, AbstractFn("g3", ("y",)),
                          ZERO if drop_r3 else r3p))
    return CartesianAnsatz(
        f=(add(diff(s, "x"), diff(k1, "x")), f2, f3),
        g=(AbstractFn("g1", ("y",)), add(diff(s, "y"), diff(k2, "y")), g3),
        field=EMField(_full("V"), (A1, A2, A3)),
    )


def check_A_general_solution(drop_r3=False, g1_variable="y", trials=DEFAULT_TRIALS, tol=DEFAULT_TOL,
                             seed=0) -> bool:
    """Verify the general solution for A against the highest-power system.

    The highest-power system is regenerated, not transcribed: it is every
    momentum-order-2 residual of the three commutators. With A, f1 and g2
    from :func:`general_solution_ansatz` and f2, f3, g1, g3 univariate, all of
    them must vanish for arbitrary jets of s, k1, k2 and the r's.
    """
    system = generate(general_solution_ansatz(drop_r3, g1_variable), prune_zeros=False)
    top = [r for r in system if r.order == 2]
    return all(is_zero(r.expr, trials, tol, seed) for r in top)


def gauge_function():
    """``F = -¼(s + k1 + k2 + r3)``, the gauge that strips the general solution."""
    return mul(-QUARTER, add(_full("s"), AbstractFn("k1", ("x", "z")), AbstractFn("k2", ("y", "z")),
                             AbstractFn("r3", ("z",))))


# the three residuals of the ODE system on g1, r1, f2, r2, f3, g3 --------------------------


_DESIGNATED = {"f2": "x", "f3": "x", "g1": "y", "g3": "y", "r1": "z", "r2": "z"}


def eq4_residuals(f2, f3, g1, g3, r1, r2, *, check=True) -> tuple[Expr, Expr, Expr]:
    """``(f2 g3' - g1 f3', r1 f2' - f3 r2', r2 g1' - g3 r1')``.

    Each function may depend only on its own variable (f's on x, g's on y,
    r's on z); a violation raises ValueError.
    """
    funcs = dict(f2=f2, f3=f3, g1=g1, g3=g3, r1=r1, r2=r2)
    funcs = {k: as_expr(v) for k, v in funcs.items()}
    if check:
        for name, e in funcs.items():
            _check_single_variable(name, e, _DESIGNATED[name])
    d = lambda n: diff(funcs[n], _DESIGNATED[n])  # noqa: E731
    F = funcs
    return (
        add(mul(F["f2"], d("g3")), neg(mul(F["g1"], d("f3")))),
        add(mul(F["r1"], d("f2")), neg(mul(F["f3"], d("r2")))),
        add(mul(F["r2"], d("g1")), neg(mul(F["g3"], d("r1")))),
    )


def _check_single_variable(name: str, e: Expr, var: str):
    extra = free_variables(e) - {var}
    for v in sorted(extra):
        if not is_zero(diff(e, v), trials=8):
            raise ValueError(f"{name} must depend on {var} only, but depends on {v}")


def eq4_sextuple(spec: CaseSpec) -> dict:
    """(f2, f3, g1, g3, r1, r2) of a catalog entry in the gauge A = ¼(g1 + r1, f2 + r2, f3 + g3)."""
    a = ansatz_from_case(spec)
    four = as_expr(4)
    return {
        "f2": a.f[1], "f3": a.f[2], "g1": a.g[0], "g3": a.g[2],
        "r1": add(mul(four, spec.field.A[0]), neg(a.g[0])),
        "r2": add(mul(four, spec.field.A[1]), neg(a.f[1])),
    }


def case_eq4_residuals(spec: CaseSpec) -> tuple[Expr, Expr, Expr]:
    return eq4_residuals(**eq4_sextuple(spec))


# permutation equivalence ----------------------------------------------------------------

# Each column sends axis k of the original frame to axis COLUMNS[c][k]; the
# table's second column, for instance, moves A1 -> A3, A2 -> A1, A3 -> A2
# together with x -> z, y -> x, z -> y.
COLUMNS = {
    1: (0, 1, 2),
    2: (2, 0, 1),
    3: (1, 2, 0),
    4: (0, 2, 1),
    5: (1, 0, 2),
    6: (2, 1, 0),
}


def column_product(c1: int, c2: int) -> int:
    """The column equal to applying ``c1`` and then ``c2``."""
    a, b = COLUMNS[c1], COLUMNS[c2]
    composed = tuple(b[a[k]] for k in range(3))
    return next(c for c, perm in COLUMNS.items() if perm == composed)


def _permute_index(alpha, perm):
    out = [0, 0, 0]
    for k in range(3):
        out[perm[k]] = alpha[k]
    return tuple(out)


def permute(spec: CaseSpec, column: int) -> CaseSpec:
    """Relabel axes by one of the six equivalence columns."""
    if column not in COLUMNS:
        raise ValueError(f"column must be 1..6, got {column}")
    perm = COLUMNS[column]
    if perm == (0, 1, 2):
        return spec
    names = {XYZ[k]: XYZ[perm[k]] for k in range(3)}
    ren = lambda e: rename_variables(e, names)  # noqa: E731
    A = [ZERO, ZERO, ZERO]
    for k in range(3):
        A[perm[k]] = ren(spec.field.A[k])
    omega = None
    if spec.omega is not None:
        # Ω is a pseudovector: odd permutations flip its sign
        sign = 1 if column in (1, 2, 3) else -1
        om = [ZERO, ZERO, ZERO]
        for k in range(3):
            om[perm[k]] = mul(sign, ren(spec.omega[k]))
        omega = tuple(om)

    def mp(poly: MomentumPolynomial) -> MomentumPolynomial:
        return MomentumPolynomial({_permute_index(a, perm): ren(c) for a, c in poly.terms.items()},
                                  poly.ordering)

    rules = tuple(rule(r.function, names[r.variable], ren(r.replacement)) for r in spec.rules)
    base, _, prev = spec.id.partition("|col")
    new_col = column_product(int(prev), column) if prev else column
    return spec.with_changes(
        id=base if new_col == 1 else f"{base}|col{new_col}",
        field=EMField(ren(spec.field.V), tuple(A)),
        q=mp(spec.q),
        p=mp(spec.p),
        rules=rules,
        omega=omega,
        constraint_residuals=tuple(ren(e) for e in spec.constraint_residuals),
        leading=tuple(perm[k] for k in spec.leading),
    )
