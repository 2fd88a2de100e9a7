"""Catalog of magnetic fields admitting the Cartesian pair of commuting integrals.

Every entry is built by :func:`make_case`; f, g, u_i, v_i, ... stay abstract
unless the case fixes them in closed form. Cases 4 and 5 carry their
second-order ODEs as rewrite rules.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .diffop import MomentumPolynomial, commutator, parse_momentum
from .expr import (
    ZERO,
    EvalPoint,
    Expr,
    I,
    Param,
    ImaginaryUnit,
    add,
    as_expr,
    atoms,
    cos,
    cosh,
    diff,
    evaluate,
    fn,
    free_symbols,
    is_zero,
    mul,
    neg,
    param_names,
    parse,
    rational,
    sin,
    sinh,
    substitute,
    to_string,
)
from .expr.evaluate import DEFAULT_TOL, DEFAULT_TRIALS
from .model import CaseSpec, EMField, rule

SCHEMA = "qintcart/1"

FAMILIES = ("6.1", "6.2", "6.3", "6.4")
SUBCASES = "abcde"
CASE_IDS = ("1", "2", "3", "4", "5") + tuple(f"{f}{s}" for f in FAMILIES for s in SUBCASES)

CASE4_PARAMS = ("C", "C1", "C2", "C3", "C4", "C5")
CASE5_PARAMS = CASE4_PARAMS + ("C6",)
CASE6_PARAMS = ("a1", "a2", "a3", "r1", "r2", "r3", "k1", "k2", "k3", "C", "C1")


class CatalogError(ValueError):
    pass


class UnknownCaseError(CatalogError, KeyError):
    def __str__(self):
        return self.args[0]


class UnknownParameterError(CatalogError):
    pass


class ContradictoryBindingError(CatalogError):
    pass


class MissingBindingError(CatalogError):
    pass


def normalize_id(case_id) -> str:
    s = str(case_id).strip()
    if s not in CASE_IDS:
        raise UnknownCaseError(f"unknown case id {case_id!r}; expected one of {', '.join(CASE_IDS)}")
    return s


def case_parameters(case_id) -> tuple[str, ...]:
    cid = normalize_id(case_id)
    if cid in ("1", "2", "3"):
        return ()
    if cid == "4":
        return CASE4_PARAMS
    if cid == "5":
        return CASE5_PARAMS
    return CASE6_PARAMS


# subcase constraints: (r1, r2, r3 as multiples of k1, k2, k3; C1 as a multiple of C)
_SUB = {
    "6.1": {"b": (1, 1, 1, 1), "c": (1, -1, -1, 1), "d": (-1, 1, -1, -1), "e": (-1, -1, 1, -1)},
    "6.2": {"b": (1j, -1j, -1, 1j), "c": (1j, 1j, 1, 1j), "d": (-1j, -1j, 1, -1j), "e": (-1j, 1j, -1, -1j)},
    "6.3": {"b": (1j, -1j, 1j, 1j), "c": (-1j, -1j, -1j, 1j), "d": (-1j, 1j, 1j, -1j), "e": (1j, 1j, -1j, -1j)},
    "6.4": {"b": (-1, -1, -1j, 1), "c": (1, -1, 1j, 1), "d": (1, 1, -1j, -1), "e": (-1, 1, 1j, -1)},
}


def _coef(c) -> Expr:
    if isinstance(c, complex):
        return mul(int(c.imag), I)
    return as_expr(rational(c))


def subcase_constraints(case_id) -> dict[str, Expr]:
    """Parameter relations imposed by a Case 6 subcase, as ``name -> expression``."""
    cid = normalize_id(case_id)
    if not cid.startswith("6."):
        return {}
    fam, sub = cid[:3], cid[3]
    if sub == "a":
        return {"C": ZERO, "C1": ZERO}
    m1, m2, m3, mc = _SUB[fam][sub]
    k1, k2, k3, C = (Param(n) for n in ("k1", "k2", "k3", "C"))
    return {
        "r1": mul(_coef(m1), k1),
        "r2": mul(_coef(m2), k2),
        "r3": mul(_coef(m3), k3),
        "C1": mul(_coef(mc), C),
    }


# -- the cases ----------------------------------------------------------------

X_, Y_, Z_ = "x", "y", "z"
QUARTER = rational(1, 4)
HALF = rational(1, 2)


def _mp(terms) -> MomentumPolynomial:
    return MomentumPolynomial(terms, "left")


def _case1() -> CaseSpec:
    u1, u2, u3 = fn("u1", X_), fn("u2", Y_), fn("u3", Z_)
    return CaseSpec(
        id="1",
        field=EMField(add(u1, u2, u3), (ZERO, ZERO, ZERO)),
        q=_mp({(2, 0, 0): 1, (0, 0, 0): mul(2, u1)}),
        p=_mp({(0, 2, 0): 1, (0, 0, 0): mul(2, u2)}),
        omega=(ZERO, ZERO, ZERO),
        summary="zero magnetic field, separable scalar potential",
    )


def _case2() -> CaseSpec:
    v1, v2, v3 = fn("v1", Z_), fn("v2", Z_), fn("v3", Z_)
    return CaseSpec(
        id="2",
        field=EMField(v3, (v1, v2, ZERO)),
        q=_mp({(2, 0, 0): 1}),
        p=_mp({(0, 2, 0): 1}),
        omega=(neg(diff(v2, Z_)), diff(v1, Z_), ZERO),
        summary="A depends on z only, Q = p1^2, P = p2^2",
    )


def _case3() -> CaseSpec:
    f, g = fn("f", X_), fn("g", Y_)
    u1, u2 = fn("u1", X_), fn("u2", Y_)
    return CaseSpec(
        id="3",
        field=EMField(add(u1, u2), (ZERO, ZERO, add(f, g))),
        q=_mp({(2, 0, 0): 1, (0, 0, 1): mul(4, f), (0, 0, 0): mul(2, u1)}),
        p=_mp({(0, 2, 0): 1, (0, 0, 1): mul(4, g), (0, 0, 0): mul(2, u2)}),
        omega=(diff(g, Y_), neg(diff(f, X_)), ZERO),
        summary="A3 = f(x) + g(y)",
    )


def _case45(five: bool) -> CaseSpec:
    f, g = fn("f", X_), fn("g", Y_)
    fp, gp = diff(f, X_), diff(g, Y_)
    fpp, gpp = diff(fp, X_), diff(gp, Y_)
    C, C1, C2, C3, C4, C5 = (Param(n) for n in CASE4_PARAMS)
    quad = Param("C6") if five else C
    # -(C3 f + C3 g + 2 C2 f^2 + 2 C1 g^2 [+ r(z)] + 4 g f'' + 4 f g'')
    core = [mul(C3, f), mul(C3, g), mul(2, C2, f**2), mul(2, C1, g**2), mul(4, g, fpp), mul(4, f, gpp)]
    if not five:
        core.append(fn("r", Z_))
    V = neg(add(*core))
    gamma1 = mul(-2, add(mul(4, g, fpp), mul(2, C2, f**2), mul(C3, f)))
    gamma2 = mul(-2, add(mul(4, f, gpp), mul(2, C1, g**2), mul(C3, g)))
    A3 = add(mul(C, f), mul(C, g)) if five else ZERO
    q = {(2, 0, 0): 1, (0, 1, 0): mul(4, fp), (0, 0, 0): gamma1}
    p = {(0, 2, 0): 1, (1, 0, 0): mul(4, gp), (0, 0, 0): gamma2}
    if five:
        q[(0, 0, 1)] = mul(4, C, f)
        p[(0, 0, 1)] = mul(4, C, g)
    omega = (mul(C, gp), neg(mul(C, fp)), add(fpp, neg(gpp))) if five else (ZERO, ZERO, add(fpp, neg(gpp)))
    rules = (
        rule("f", X_, add(mul(quad, f**2), mul(C1, f), C4)),
        rule("g", Y_, add(mul(quad, g**2), mul(C2, g), C5)),
    )
    names = CASE5_PARAMS if five else CASE4_PARAMS
    return CaseSpec(
        id="5" if five else "4",
        field=EMField(V, (gp, fp, A3)),
        q=_mp(q),
        p=_mp(p),
        params={n: None for n in names},
        rules=rules,
        omega=omega,
        summary=("A = (g', f', C f + C g)" if five else "A = (g', f', 0)") + ", f and g solve quadratic ODEs",
    )


def _hyp(r, k, t):
    return add(mul(r, cosh(t)), mul(k, sinh(t))), add(mul(r, sinh(t)), mul(k, cosh(t)))


def _trig(r, k, t):
    # (r sin t - k cos t, r cos t + k sin t)
    return add(mul(r, sin(t)), neg(mul(k, cos(t)))), add(mul(r, cos(t)), mul(k, sin(t)))


def _double_hyp(r, k, t):
    return add(mul(add(r**2, k**2), cosh(mul(2, t))), mul(2, r, k, sinh(mul(2, t))))


def _double_trig(r, k, t):
    return add(mul(add(r**2, neg(k**2)), cos(mul(2, t))), mul(2, r, k, sin(mul(2, t))))


def _family6(fam: str) -> dict[str, Expr]:
    a1, a2, a3, r1, r2, r3, k1, k2, k3, C, C1 = (Param(n) for n in CASE6_PARAMS)
    from .expr import X, Y, Z

    tx, ty, tz = mul(a1, X), mul(a2, Y), mul(a3, Z)
    cx = mul(QUARTER, a2**2, a3**2)
    cy = mul(QUARTER, a1**2, a3**2)
    cz = mul(QUARTER, a1**2, a2**2)
    if fam == "6.1":
        hx, hsx = _hyp(r1, k1, tx)
        hy, hsy = _hyp(r2, k2, ty)
        hz, hsz = _hyp(r3, k3, tz)
        return dict(
            u2=mul(a3, hx), u3=mul(a2, hsx), w1=mul(a3, hy), w3=mul(a1, hsy), v1=mul(a2, hz), v2=mul(a1, hsz),
            u1=add(mul(cx, _double_hyp(r1, k1, tx)), mul(C, hx)),
            w2=add(mul(cy, _double_hyp(r2, k2, ty)), mul(C, hy)),
            v3=add(mul(cz, _double_hyp(r3, k3, tz)), mul(C1, hz)),
        )
    if fam == "6.2":
        sx, cxx = _trig(r1, k1, tx)
        sy, cyy = _trig(r2, k2, ty)
        hz, hsz = _hyp(r3, k3, tz)
        return dict(
            u2=mul(a3, sx), u3=mul(a2, cxx), w1=mul(a3, sy), w3=mul(a1, cyy), v1=mul(a2, hz), v2=mul(a1, hsz),
            u1=add(mul(cx, _double_trig(r1, k1, tx)), mul(C, sx)),
            w2=add(mul(cy, _double_trig(r2, k2, ty)), mul(C, sy)),
            v3=add(neg(mul(cz, _double_hyp(r3, k3, tz))), mul(C1, hz)),
        )
    if fam == "6.3":
        sx, cxx = _trig(r1, k1, tx)
        sy, cyy = _trig(r2, k2, ty)
        sz, czz = _trig(r3, k3, tz)
        return dict(
            u2=mul(a3, cxx), u3=mul(I, a2, sx), w1=mul(a3, cyy), w3=mul(I, a1, sy),
            v1=mul(a2, czz), v2=mul(I, a1, sz),
            u1=add(neg(mul(cx, _double_trig(r1, k1, tx))), mul(C, cxx)),
            w2=add(neg(mul(cy, _double_trig(r2, k2, ty))), mul(C, cyy)),
            v3=add(neg(mul(cz, _double_trig(r3, k3, tz))), mul(C1, sz)),
        )
    if fam == "6.4":
        hx, hsx = _hyp(r1, k1, tx)
        hy, hsy = _hyp(r2, k2, ty)
        sz, czz = _trig(r3, k3, tz)
        return dict(
            u2=mul(a3, hx), u3=mul(-1, I, a2, hsx), w1=mul(a3, hy), w3=mul(-1, I, a1, hsy),
            v1=mul(a2, czz), v2=mul(I, a1, sz),
            u1=add(mul(cx, _double_hyp(r1, k1, tx)), mul(C, hx)),
            w2=add(mul(cy, _double_hyp(r2, k2, ty)), mul(C, hy)),
            v3=add(mul(cz, _double_trig(r3, k3, tz)), mul(C1, sz)),
        )
    raise UnknownCaseError(f"unknown Case 6 family {fam!r}")


def case6_template(fns: dict[str, Expr]):
    """Field, integrals and Ω of Case 6 from the nine functions u1..v3.

    ``fns`` maps u1, u2, u3 (of x), w1, w2, w3 (of y), v1, v2, v3 (of z) to
    expressions; abstract functions work as well as closed forms.
    """
    u1, u2, u3 = fns["u1"], fns["u2"], fns["u3"]
    w1, w2, w3 = fns["w1"], fns["w2"], fns["w3"]
    v1, v2, v3 = fns["v1"], fns["v2"], fns["v3"]
    d = diff
    A = (
        mul(QUARTER, add(d(w1, Y_), d(v1, Z_))),
        mul(QUARTER, add(d(u2, X_), d(v2, Z_))),
        mul(QUARTER, add(d(u3, X_), d(w3, Y_))),
    )
    u2pp, u3pp = d(d(u2, X_), X_), d(d(u3, X_), X_)
    w1pp, w3pp = d(d(w1, Y_), Y_), d(d(w3, Y_), Y_)
    v1pp, v2pp = d(d(v1, Z_), Z_), d(d(v2, Z_), Z_)
    V = mul(-QUARTER, add(u1, w2, v3, mul(w1, u2pp), mul(v1, u3pp), mul(u2, w1pp), mul(v2, w3pp),
                          mul(u3, v1pp), mul(w3, v2pp)))
    q = _mp({(2, 0, 0): 1, (0, 1, 0): d(u2, X_), (0, 0, 1): d(u3, X_),
             (0, 0, 0): mul(-HALF, add(mul(w1, u2pp), mul(v1, u3pp), u1))})
    p = _mp({(0, 2, 0): 1, (1, 0, 0): d(w1, Y_), (0, 0, 1): d(w3, Y_),
             (0, 0, 0): mul(-HALF, add(mul(u2, w1pp), mul(v2, w3pp), w2))})
    omega = (
        mul(QUARTER, add(w3pp, neg(v2pp))),
        mul(QUARTER, add(v1pp, neg(u3pp))),
        mul(QUARTER, add(u2pp, neg(w1pp))),
    )
    return EMField(V, A), q, p, omega


def _case6(cid: str) -> CaseSpec:
    fld, q, p, omega = case6_template(_family6(cid[:3]))
    return CaseSpec(
        id=cid,
        field=fld,
        q=q,
        p=p,
        params={n: None for n in CASE6_PARAMS},
        omega=omega,
        summary=f"Case {cid[:3]} closed forms, subcase {cid[3]}",
    )


@lru_cache(maxsize=None)
def _base_case(cid: str) -> CaseSpec:
    if cid == "1":
        return _case1()
    if cid == "2":
        return _case2()
    if cid == "3":
        return _case3()
    if cid == "4":
        return _case45(False)
    if cid == "5":
        return _case45(True)
    return _case6(cid)


def bind(spec: CaseSpec, values: dict[str, Expr]) -> CaseSpec:
    """Substitute parameter values everywhere in a spec (field, integrals, rules, Ω)."""
    if not values:
        return spec
    sub = lambda e: substitute(e, params=values)  # noqa: E731
    return spec.with_changes(
        field=spec.field.map(sub),
        q=spec.q.map(sub),
        p=spec.p.map(sub),
        rules=tuple(rule(r.function, r.variable, sub(r.replacement)) for r in spec.rules),
        omega=None if spec.omega is None else tuple(sub(e) for e in spec.omega),
        constraint_residuals=tuple(sub(e) for e in spec.constraint_residuals),
    )


def _numeric(e: Expr):
    if free_symbols(e):
        return None
    return complex(evaluate(e, EvalPoint()))


def make_case(case_id, bindings: dict | None = None, *, strict: bool = False) -> CaseSpec:
    """Build a catalog entry.

    ``bindings`` maps parameter names to numbers or expressions. Subcase
    constraints are applied first; a binding of a constrained parameter must
    agree with its constraint. Unbound parameters stay free (``None`` in
    ``params``) unless ``strict`` is set, which makes them an error.
    """
    from .determining import case_eq4_residuals

    cid = normalize_id(case_id)
    names = case_parameters(cid)
    bindings = {k: as_expr(v) for k, v in (bindings or {}).items()}
    unknown = sorted(set(bindings) - set(names))
    if unknown:
        raise UnknownParameterError(f"case {cid} has no parameter(s) {', '.join(unknown)}"
                                    + (f"; parameters are {', '.join(names)}" if names else ""))
    constraints = subcase_constraints(cid)
    values: dict[str, Expr] = {}
    for n, rhs in constraints.items():
        val = substitute(rhs, params=bindings)
        if n in bindings:
            want, got = _numeric(val), _numeric(bindings[n])
            if want is None or got is None or abs(want - got) > 1e-12 * (1 + abs(want)):
                raise ContradictoryBindingError(
                    f"case {cid} fixes {n} = {to_string(rhs)}; binding {n} = {to_string(bindings[n])} contradicts it")
        values[n] = val
    for n, v in bindings.items():
        if n not in constraints:
            values[n] = v
    params = {n: values.get(n) for n in names}
    if strict:
        missing = [n for n, v in params.items() if v is None or param_names(v)]
        if missing:
            raise MissingBindingError(f"case {cid} needs values for {', '.join(missing)}")
    spec = bind(_base_case(cid), values).with_changes(params=params)
    return spec.with_changes(constraint_residuals=case_eq4_residuals(spec))


# -- fields -------------------------------------------------------------------


def curl(A) -> tuple[Expr, Expr, Expr]:
    A1, A2, A3 = (as_expr(a) for a in A)
    return (
        add(diff(A3, Y_), neg(diff(A2, Z_))),
        add(diff(A1, Z_), neg(diff(A3, X_))),
        add(diff(A2, X_), neg(diff(A1, Y_))),
    )


def gauge_transform(fld: EMField, F) -> EMField:
    """``A -> A + grad F``; V is unchanged."""
    F = as_expr(F)
    return EMField(fld.V, tuple(add(a, diff(F, v)) for a, v in zip(fld.A, (X_, Y_, Z_))))


# -- perturbations --------------------------------------------------------------

PERTURB_TARGETS = ("V", "A1", "A2", "A3", "Q", "P")


def parse_perturbation(text: str) -> tuple[str, Expr | MomentumPolynomial]:
    """``"V+x*y"`` -> ``("V", x*y)``; ``"Q-p3"`` adds ``-p3`` to Q."""
    s = text.strip()
    for t in sorted(PERTURB_TARGETS, key=len, reverse=True):
        if s.startswith(t) and len(s) > len(t) and s[len(t)] in "+-":
            rest = s[len(t):]
            if t in ("Q", "P"):
                return t, parse_momentum("0" + rest)
            return t, parse("0" + rest)
    raise ValueError(f"perturbation must look like TARGET+expr with TARGET in {', '.join(PERTURB_TARGETS)}: {text!r}")


def perturb(spec: CaseSpec, target: str, delta) -> CaseSpec:
    """A copy of ``spec`` with ``delta`` added to one of V, A1..A3, Q, P."""
    if target == "V":
        return spec.with_changes(id=spec.id + "*", field=EMField(add(spec.field.V, delta), spec.field.A))
    if target in ("A1", "A2", "A3"):
        A = list(spec.field.A)
        j = int(target[1]) - 1
        A[j] = add(A[j], delta)
        return spec.with_changes(id=spec.id + "*", field=EMField(spec.field.V, tuple(A)))
    if target in ("Q", "P"):
        if not isinstance(delta, MomentumPolynomial):
            delta = MomentumPolynomial({(0, 0, 0): delta})
        attr = target.lower()
        return spec.with_changes(id=spec.id + "*", **{attr: getattr(spec, attr) + delta})
    raise ValueError(f"unknown perturbation target {target!r}")


# -- verification ---------------------------------------------------------------


@dataclass
class Check:
    commutator: str
    index: tuple
    passed: bool
    residual: float
    witness: dict | None = None

    def to_dict(self) -> dict:
        d = {"commutator": self.commutator, "index": list(self.index), "passed": self.passed,
             "max_residual": self.residual}
        if self.witness is not None:
            d["witness"] = _jsonable(self.witness)
        return d


@dataclass
class VerificationReport:
    case_id: str
    seed: int
    trials: int
    tol: float
    samples: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    eq4: list = field(default_factory=list)
    omega: list = field(default_factory=list)
    non_real: bool = False

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks + self.eq4 + self.omega)

    @property
    def commutators_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks + self.eq4 + self.omega if not c.passed]

    def max_residual(self, commutator: str | None = None) -> float:
        vals = [c.residual for c in self.checks if commutator is None or c.commutator == commutator]
        return max(vals, default=0.0)

    def to_dict(self) -> dict:
        return {
            "case": self.case_id,
            "passed": self.passed,
            "seed": self.seed,
            "trials": self.trials,
            "tol": self.tol,
            "non_real_field": self.non_real,
            "parameter_samples": [_jsonable(s) for s in self.samples],
            "commutators": {
                name: {
                    "passed": all(c.passed for c in self.checks if c.commutator == name),
                    "max_residual": self.max_residual(name),
                    "coefficients": [c.to_dict() for c in self.checks if c.commutator == name],
                }
                for name in ("HQ", "HP", "QP")
            },
            "eq4": [c.to_dict() for c in self.eq4],
            "omega": [c.to_dict() for c in self.omega],
        }


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        v = complex(v)
        if v.imag == 0:
            return float(v.real)
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def sample_parameters(spec: CaseSpec, seed: int, index: int) -> dict[str, float]:
    """Real values with 0.5 <= |v| <= 2 for the spec's free parameters."""
    out = {}
    free = {n for n, v in spec.params.items() if v is None}
    for v in spec.params.values():
        if v is not None:
            free |= param_names(v)
    for n in sorted(free):
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, index, zlib.crc32(n.encode())])
        out[n] = float(rng.uniform(0.5, 2.0) * rng.choice((-1.0, 1.0)))
    return out


def commutators(spec: CaseSpec) -> dict:
    """``{"HQ": [H,Q], "HP": [H,P], "QP": [Q,P]}`` with every coefficient reduced by the spec's rules."""
    out = {}
    for name, (a, b) in (("HQ", (spec.H, spec.Q)), ("HP", (spec.H, spec.P)), ("QP", (spec.Q, spec.P))):
        op = commutator(a, b, prune_zeros=False)
        out[name] = {alpha: spec.reduced(c) for alpha, c in op.items()}
    return out


def _non_real(spec: CaseSpec) -> bool:
    exprs = (spec.field.V,) + spec.field.A
    return any(any(isinstance(a, ImaginaryUnit) for a in atoms(e)) for e in exprs)


def verify_case(spec: CaseSpec, trials: int = DEFAULT_TRIALS, tol: float = DEFAULT_TOL, seed: int = 0,
                samples: int = 1, *, coms: dict | None = None) -> VerificationReport:
    """Zero-test ``[H,Q]``, ``[H,P]``, ``[Q,P]`` coefficient by coefficient.

    Free parameters are fixed to ``samples`` independent real draws; abstract
    functions, coordinates and ħ are drawn per trial. The report also holds
    the Eq.-4-style constraint residuals and ``curl A`` against the stored Ω.
    """
    coms = coms if coms is not None else commutators(spec)
    rep = VerificationReport(spec.id, seed, trials, tol)
    curl_A = curl(spec.field.A)
    for s in range(samples):
        values = sample_parameters(spec, seed, s)
        rep.samples.append(values)
        fixed = EvalPoint(params=dict(values))
        sub_seed = seed * 1009 + s

        def record(bucket, name, idx, e):
            t = is_zero(e, trials, tol, sub_seed, fixed)
            prev = next((c for c in bucket if c.commutator == name and c.index == idx), None)
            if prev is None:
                bucket.append(Check(name, idx, t.passed, t.residual, t.witness))
            else:
                prev.residual = max(prev.residual, t.residual)
                if prev.passed and not t.passed:
                    prev.passed, prev.witness = False, t.witness

        for name, terms in coms.items():
            for alpha, c in terms.items():
                record(rep.checks, name, alpha, c)
        for j, e in enumerate(spec.constraint_residuals):
            record(rep.eq4, "eq4", (j,), spec.reduced(e))
        if spec.omega is not None:
            for j in range(3):
                record(rep.omega, "omega", (j,), spec.reduced(add(curl_A[j], neg(spec.omega[j]))))
    rep.non_real = _non_real(spec)
    return rep


# -- JSON -----------------------------------------------------------------------


def to_json(spec: CaseSpec) -> dict:
    d = {
        "schema": SCHEMA,
        "id": spec.id,
        "params": {n: ("free" if v is None else to_string(v)) for n, v in spec.params.items()},
        "field": {"V": to_string(spec.field.V), "A": [to_string(a) for a in spec.field.A]},
        "Q": str(spec.q),
        "P": str(spec.p),
        "rules": [{"function": r.function, "variable": r.variable, "replacement": to_string(r.replacement)}
                  for r in spec.rules],
    }
    if spec.omega is not None:
        d["omega"] = [to_string(e) for e in spec.omega]
    return d


def dumps(spec: CaseSpec) -> str:
    return json.dumps(to_json(spec), indent=2, sort_keys=True)


def from_json(data) -> CaseSpec:
    from .determining import case_eq4_residuals

    if isinstance(data, str):
        data = json.loads(data)
    if data.get("schema", SCHEMA) != SCHEMA:
        raise CatalogError(f"unsupported schema {data.get('schema')!r}")
    params = {n: (None if v == "free" else parse(v)) for n, v in data.get("params", {}).items()}
    spec = CaseSpec(
        id=str(data["id"]),
        field=EMField(parse(data["field"]["V"]), tuple(parse(a) for a in data["field"]["A"])),
        q=parse_momentum(data["Q"]),
        p=parse_momentum(data["P"]),
        params=params,
        rules=tuple(rule(r["function"], r["variable"], parse(r["replacement"])) for r in data.get("rules", [])),
        omega=tuple(parse(e) for e in data["omega"]) if "omega" in data else None,
    )
    try:
        return spec.with_changes(constraint_residuals=case_eq4_residuals(spec))
    except ValueError:
        return spec
