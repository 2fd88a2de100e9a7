"""Classical limit: phase-space symbols, Poisson brackets, trajectories, independence."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..diffop import DiffOp, MomentumPolynomial, classical_coefficients
from ..expr import (
    MOMENTA,
    SPATIAL,
    AbstractFn,
    EvalPoint,
    Expr,
    ImaginaryUnit,
    Var,
    add,
    atoms,
    diff,
    evaluate,
    free_symbols,
    lambdify,
    mul,
    neg,
    parse,
    random_point,
    rational,
    substitute,
)
from ..model import CaseSpec, EMField
from .dopri import dopri5
from .profile import Profile, ProfileRangeError

PHASE = SPATIAL + MOMENTA


class MissingBindingError(ValueError):
    """A symbol still has no numeric meaning where one is required."""

    def __init__(self, symbols):
        self.symbols = sorted(symbols)
        super().__init__("no value or profile for " + ", ".join(self.symbols))


@dataclass
class PhaseState:
    q: tuple
    p: tuple

    def __post_init__(self):
        self.q = tuple(float(v) for v in self.q)
        self.p = tuple(float(v) for v in self.p)
        if len(self.q) != 3 or len(self.p) != 3:
            raise ValueError("phase state needs three positions and three momenta")
        if not np.all(np.isfinite(self.q + self.p)):
            raise ValueError("phase state must be finite")

    def as_array(self) -> np.ndarray:
        return np.array(self.q + self.p)

    @classmethod
    def from_array(cls, a) -> "PhaseState":
        return cls(tuple(a[:3]), tuple(a[3:]))

    def variables(self) -> dict:
        return dict(zip(PHASE, self.q + self.p))


# -- symbols and brackets --------------------------------------------------------


def classical_hamiltonian(fld: EMField) -> Expr:
    """``½p² + 2A·p + V``, the symbol of ``½p̂² + V + Âp̂ + p̂Â``."""
    p = [Var(m) for m in MOMENTA]
    kinetic = add(*(mul(Var(m), Var(m)) for m in MOMENTA))
    return add(mul(kinetic, _HALF), *(mul(2, a, pj) for a, pj in zip(fld.A, p)), fld.V)


def classicalize(obj) -> Expr:
    """Phase-space function of an operator: commuting momenta, ħ -> 0.

    Accepts a :class:`DiffOp`, a :class:`MomentumPolynomial` (either ordering;
    both have the same principal symbol) or an :class:`EMField` (its
    Hamiltonian).
    """
    if isinstance(obj, EMField):
        return classical_hamiltonian(obj)
    if isinstance(obj, MomentumPolynomial):
        terms = {a: substitute(c, hbar=0) for a, c in obj.terms.items()}
        return MomentumPolynomial(terms).symbol()
    if isinstance(obj, DiffOp):
        return MomentumPolynomial(classical_coefficients(obj)).symbol()
    raise TypeError(f"cannot classicalize {type(obj).__name__}")


def poisson(a: Expr, b: Expr) -> Expr:
    """``Σ_j ∂a/∂x_j ∂b/∂p_j - ∂a/∂p_j ∂b/∂x_j``."""
    return add(*(
        add(mul(diff(a, xj), diff(b, pj)), neg(mul(diff(a, pj), diff(b, xj))))
        for xj, pj in zip(SPATIAL, MOMENTA)
    ))


def case_observables(spec: CaseSpec) -> tuple[Expr, Expr, Expr]:
    """``(H_cl, Q_cl, P_cl)`` reduced by the case's rules."""
    return tuple(spec.reduced(e) for e in (classical_hamiltonian(spec.field), classicalize(spec.q),
                                           classicalize(spec.p)))


def case_brackets(spec: CaseSpec) -> dict[str, Expr]:
    H, Q, P = case_observables(spec)
    return {name: spec.reduced(poisson(a, b)) for name, (a, b) in
            (("HQ", (H, Q)), ("HP", (H, P)), ("QP", (Q, P)))}


# -- concrete fields ---------------------------------------------------------------


def parse_profiles(text: str) -> dict[str, Expr]:
    """``"u1=x^2, u2=y^2"`` -> ``{"u1": x^2, "u2": y^2}``."""
    out = {}
    for piece in filter(None, (s.strip() for s in text.split(","))):
        name, eq, body = piece.partition("=")
        if not eq or not name.strip():
            raise ValueError(f"profile must look like name=expression: {piece!r}")
        out[name.strip()] = parse(body)
    return out


@dataclass
class ConcreteSystem:
    """Observables whose only remaining symbols are phase-space variables and numeric profiles."""

    H: Expr
    Q: Expr
    P: Expr
    numeric: dict  # function name -> Profile
    rules: tuple = ()

    def functions(self) -> dict:
        out = {}
        for name, prof in self.numeric.items():
            for k in range(3):
                out[(name, k)] = prof.derivative(k)
        return out


def concretize(spec: CaseSpec, profiles: dict | None = None, params: dict | None = None) -> ConcreteSystem:
    """Bind parameters and replace abstract functions by closed forms or numeric profiles.

    ``profiles`` maps a function name to an expression in that function's own
    argument or to a :class:`Profile`. Anything left unbound raises
    :class:`MissingBindingError`.
    """
    profiles = dict(profiles or {})
    params = {k: v for k, v in (params or {}).items()}
    symbolic = {k: v for k, v in profiles.items() if not isinstance(v, Profile)}
    numeric = {k: v for k, v in profiles.items() if isinstance(v, Profile)}
    bound_params = {n: v for n, v in spec.params.items() if v is not None}
    bound_params = {n: substitute(v, params=params) for n, v in bound_params.items()}
    all_params = {**bound_params, **params}
    rules = tuple(r for r in spec.rules if r.function in numeric)
    out = []
    for e in case_observables(spec):
        e = substitute(e, params=all_params, functions=symbolic)
        out.append(e)
    rules = tuple(r.__class__(r.function, r.variable, substitute(r.replacement, params=all_params)) for r in rules)
    from ..expr import reduce

    out = [reduce(e, rules) for e in out]
    missing = set()
    for e in out:
        for a in free_symbols(e):
            if isinstance(a, Var):
                continue
            if isinstance(a, AbstractFn) and a.name in numeric and len(a.args) == 1:
                continue
            missing.add(str(a) if not isinstance(a, AbstractFn) else a.name)
    if missing:
        raise MissingBindingError(missing)
    return ConcreteSystem(*out, numeric=numeric, rules=rules)


def is_real_system(sys: ConcreteSystem) -> bool:
    return not any(isinstance(a, ImaginaryUnit) for e in (sys.H, sys.Q, sys.P) for a in atoms(e))


# -- trajectories -------------------------------------------------------------------


@dataclass
class TrajectoryLog:
    t: np.ndarray
    states: np.ndarray  # (n, 6)
    values: dict  # name -> array
    status: str = "success"
    message: str = ""
    t_stop: float | None = None
    rtol: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def drift(self) -> dict:
        """``max_t |O(t) - O(0)| / (1 + |O(0)|)`` per observable."""
        return {k: float(np.max(np.abs(v - v[0])) / (1 + abs(v[0]))) if len(v) else 0.0
                for k, v in self.values.items()}

    @property
    def blew_up(self) -> bool:
        return self.status in ("blowup", "domain")

    def to_json(self) -> dict:
        return {
            "schema": "qintcart/1",
            "status": self.status,
            "message": self.message,
            "t_stop": self.t_stop,
            "rtol": self.rtol,
            "samples": int(len(self.t)),
            "drift": self.drift,
            "initial": {k: float(v[0]) for k, v in self.values.items()} if len(self.t) else {},
            **self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.values)
        w.writerow(["t", *PHASE, *names])
        for k in range(len(self.t)):
            w.writerow([repr(float(self.t[k])), *(repr(float(v)) for v in self.states[k]),
                        *(repr(float(self.values[n][k])) for n in names)])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _compile(sys: ConcreteSystem):
    H = sys.H
    grads = [diff(H, v) for v in PHASE]
    from ..expr import reduce

    grads = [reduce(g, sys.rules) for g in grads]
    # q' = ∂H/∂p, p' = -∂H/∂q
    rhs = grads[3:] + [neg(g) for g in grads[:3]]
    funcs = sys.functions()
    flow = lambdify(rhs, PHASE, functions=funcs)
    obs = lambdify([sys.H, sys.Q, sys.P], PHASE, functions=funcs)
    return flow, obs


def integrate_trajectory(sys: ConcreteSystem, state0: PhaseState, t_final: float, rtol: float = 1e-10,
                         samples: int = 1001, atol: float | None = None) -> TrajectoryLog:
    """Hamilton's equations for ``sys.H`` with H, Q, P logged at ``samples`` uniform times.

    Step-size underflow or a non-finite state ends the run with status
    ``"blowup"``; leaving a numeric profile's table gives ``"domain"``. The
    log then covers the interval actually integrated.
    """
    if not is_real_system(sys):
        raise ValueError("trajectory integration needs a real Hamiltonian")
    flow, obs = _compile(sys)

    def f(_, y):
        return np.array(flow(*y))

    y0 = state0.as_array()
    sol = dopri5(f, (0.0, float(t_final)), y0, rtol=rtol, atol=atol if atol is not None else rtol * 1e-2,
                 soft_fail=(ProfileRangeError,), raise_on_failure=False)
    status = {"success": "success", "stopped": "domain"}.get(sol.status, "blowup")
    t_stop = float(sol.t_event) if sol.t_event is not None else float(sol.t[-1])
    n = max(int(samples), 2)
    ts = np.linspace(0.0, float(sol.t[-1]), n)
    states = sol(ts)
    vals = np.array([obs(*s) for s in states])
    return TrajectoryLog(ts, states, {"H": vals[:, 0], "Q": vals[:, 1], "P": vals[:, 2]},
                         status, sol.message, t_stop, rtol)


# -- independence ---------------------------------------------------------------------


def jacobian(observables, point: EvalPoint) -> np.ndarray:
    """Gradients wrt (x, y, z, p1, p2, p3); shape (..., len(observables), 6)."""
    flat = [np.asarray(evaluate(diff(o, v), point), dtype=complex) for o in observables for v in PHASE]
    arr = np.array(np.broadcast_arrays(*flat))
    arr = arr.reshape((len(observables), 6) + arr.shape[1:])
    return np.moveaxis(arr, (0, 1), (-2, -1))


def matrix_rank(J: np.ndarray, rel: float = 1e-8) -> int:
    s = np.linalg.svd(J, compute_uv=False)
    return int(np.sum(s > rel * s[0])) if s.size and s[0] > 0 else 0


def independence_rank(observables, state: PhaseState, point: EvalPoint | None = None) -> int:
    """Rank of the Jacobian of ``observables`` at ``state`` (threshold 1e-8 × largest singular value).

    ``point`` supplies values for parameters and abstract-function jets.
    """
    base = point or EvalPoint()
    pt = EvalPoint(variables={**base.variables, **state.variables()}, params=dict(base.params),
                   hbar=base.hbar, jets=dict(base.jets))
    return matrix_rank(jacobian(observables, pt))


def random_ranks(observables, n: int = 10, seed: int = 0, fixed: EvalPoint | None = None) -> list[int]:
    """Ranks at ``n`` random generic points (phase variables, parameters and jets all drawn)."""
    syms = set()
    for o in observables:
        for v in PHASE:
            syms |= free_symbols(diff(o, v))
    for v in PHASE:
        syms.add(Var(v))
    pt = random_point(syms, n, seed, fixed)
    J = jacobian(observables, pt)
    if J.ndim == 2:
        J = np.broadcast_to(J, (n,) + J.shape)
    return [matrix_rank(J[k]) for k in range(n)]


_HALF = rational(1, 2)
