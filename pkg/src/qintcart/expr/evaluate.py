"""Numeric evaluation and randomized zero testing.

Evaluation is vectorized: every bound value may be a NumPy array, and the
whole tree is evaluated once per call with one array operation per node.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .nodes import (
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
)
from .calculus import free_symbols

DEFAULT_TRIALS = 20
DEFAULT_TOL = 1e-9
ANNULUS = (0.5, 2.0)


class UnboundSymbolError(KeyError):
    def __init__(self, symbol: str):
        super().__init__(symbol)
        self.symbol = symbol

    def __str__(self):
        return f"unbound symbol: {self.symbol}"


class EvaluationError(ArithmeticError):
    pass


@dataclass
class EvalPoint:
    """Values for every symbol an expression may contain.

    ``jets`` maps ``(name, args, orders)`` of an abstract-function node to its
    value; :meth:`jet` accepts the univariate shorthand ``("f", 2)``.
    """

    variables: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    hbar: object = None
    jets: dict = field(default_factory=dict)

    def jet(self, name: str, order: int, var: str | None = None):
        for (n, args, orders), v in self.jets.items():
            if n == name and orders == (order,) and (var is None or args == (var,)):
                return v
        raise UnboundSymbolError(f"{name} derivative {order}")

    def set_jet(self, name: str, var: str, order: int, value):
        self.jets[(name, (var,), (order,))] = value

    def take(self, k: int) -> "EvalPoint":
        """The k-th point of a vectorized EvalPoint, as plain complex numbers."""

        def pick(v):
            a = np.asarray(v)
            return complex(a) if a.ndim == 0 else complex(a[k])

        return EvalPoint(
            variables={n: pick(v) for n, v in self.variables.items()},
            params={n: pick(v) for n, v in self.params.items()},
            hbar=None if self.hbar is None else float(np.real(pick(self.hbar))),
            jets={key: pick(v) for key, v in self.jets.items()},
        )

    def as_dict(self) -> dict:
        out = {}
        for n, v in sorted(self.variables.items()):
            out[n] = v
        for n, v in sorted(self.params.items()):
            out[n] = v
        if self.hbar is not None:
            out["hbar"] = self.hbar
        for (n, args, orders), v in sorted(self.jets.items()):
            out[_jet_label(n, args, orders)] = v
        return out


def _jet_label(name, args, orders) -> str:
    return str(AbstractFn(name, args, orders))


def _evaluate(e: Expr, pt: EvalPoint, with_scale: bool):
    memo: dict[int, tuple] = {}

    def walk(n: Expr):
        hit = memo.get(id(n))
        if hit is not None:
            return hit
        if isinstance(n, Const):
            v = complex(n.value)
            out = (v, abs(v))
        elif isinstance(n, ImaginaryUnit):
            out = (1j, 1.0)
        elif isinstance(n, Hbar):
            if pt.hbar is None:
                raise UnboundSymbolError("hbar")
            out = (pt.hbar, np.abs(pt.hbar))
        elif isinstance(n, Param):
            if n.name not in pt.params:
                raise UnboundSymbolError(n.name)
            v = pt.params[n.name]
            out = (v, np.abs(v))
        elif isinstance(n, Var):
            if n.name not in pt.variables:
                raise UnboundSymbolError(n.name)
            v = pt.variables[n.name]
            out = (v, np.abs(v))
        elif isinstance(n, AbstractFn):
            key = n.jet_key
            if key not in pt.jets:
                raise UnboundSymbolError(str(n))
            v = pt.jets[key]
            out = (v, np.abs(v))
        elif isinstance(n, Add):
            vals = [walk(a) for a in n.args]
            v = vals[0][0]
            for a in vals[1:]:
                v = v + a[0]
            s = None
            if with_scale:
                s = vals[0][1]
                for a in vals[1:]:
                    s = np.maximum(s, a[1])
            out = (v, s)
        elif isinstance(n, Mul):
            vals = [walk(a) for a in n.args]
            v = vals[0][0]
            s = vals[0][1]
            for a in vals[1:]:
                v = v * a[0]
                if with_scale:
                    s = s * a[1]
            out = (v, s)
        elif isinstance(n, Pow):
            b, bs = walk(n.base)
            if n.exp < 0:
                if np.any(np.asarray(b) == 0):
                    raise EvaluationError(f"division by zero evaluating {n}")
                v = (1 / b) ** (-n.exp)
                out = (v, np.abs(v))
            else:
                out = (b**n.exp, bs**n.exp if with_scale else None)
        elif isinstance(n, Apply):
            a, _ = walk(n.arg)
            v = getattr(np, n.func)(a)
            out = (v, np.abs(v))
        else:
            raise TypeError(f"unexpected node {type(n).__name__}")
        memo[id(n)] = out
        return out

    with np.errstate(over="ignore", invalid="ignore"):
        return walk(e)


def evaluate(e: Expr, pt: EvalPoint):
    """Evaluate ``e`` at ``pt``; complex scalar, or array for vectorized points."""
    v, _ = _evaluate(e, pt, with_scale=False)
    if np.ndim(v) == 0:
        return complex(v)
    return np.asarray(v, dtype=complex)


def evaluate_with_scale(e: Expr, pt: EvalPoint):
    """Value plus the magnitude of the largest additive term met while evaluating.

    The scale propagates as max over sums and products over products, which
    bounds the size of intermediates that could cancel in floating point.
    """
    return _evaluate(e, pt, with_scale=True)


def _symbol_seed(seed: int, label: str) -> list[int]:
    return [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF, zlib.crc32(label.encode())]


def sample_annulus(seed: int, label: str, n: int, lo: float = ANNULUS[0], hi: float = ANNULUS[1]):
    """Complex samples with lo <= |v| <= hi, reproducible per (seed, label)."""
    rng = np.random.default_rng(_symbol_seed(seed, label))
    r = rng.uniform(lo, hi, n)
    t = rng.uniform(0.0, 2 * np.pi, n)
    return r * np.exp(1j * t)


def random_point(symbols, trials: int, seed: int, fixed: EvalPoint | None = None) -> EvalPoint:
    """Vectorized EvalPoint binding each symbol to ``trials`` independent samples.

    Each symbol draws from its own stream keyed by its printed name, so the
    same symbol gets the same samples regardless of what else is present.
    Values already in ``fixed`` are kept.
    """
    fixed = fixed or EvalPoint()
    pt = EvalPoint(
        variables=dict(fixed.variables),
        params=dict(fixed.params),
        hbar=fixed.hbar,
        jets=dict(fixed.jets),
    )
    for s in sorted(symbols, key=lambda a: a.sort_key):
        if isinstance(s, Hbar):
            if pt.hbar is None:
                rng = np.random.default_rng(_symbol_seed(seed, "hbar"))
                pt.hbar = rng.uniform(ANNULUS[0], ANNULUS[1], trials)
        elif isinstance(s, Param):
            if s.name not in pt.params:
                pt.params[s.name] = sample_annulus(seed, "param:" + s.name, trials)
        elif isinstance(s, Var):
            if s.name not in pt.variables:
                pt.variables[s.name] = sample_annulus(seed, "var:" + s.name, trials)
        elif isinstance(s, AbstractFn):
            if s.jet_key not in pt.jets:
                pt.jets[s.jet_key] = sample_annulus(seed, "jet:" + str(s), trials)
    return pt


@dataclass
class ZeroTest:
    """Outcome of :func:`is_zero`; truthy iff the expression tested as zero."""

    passed: bool
    residual: float
    witness: dict | None = None
    value: complex | None = None

    def __bool__(self):
        return self.passed


def is_zero(
    e: Expr,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    fixed: EvalPoint | None = None,
) -> ZeroTest:
    """Randomized identity test.

    ``e`` is evaluated at ``trials`` random points (each symbol drawn from the
    annulus 0.5 <= |v| <= 2, ħ from [0.5, 2]); it passes iff every
    |value| < tol * (1 + scale) with ``scale`` from :func:`evaluate_with_scale`.
    ``residual`` is the worst |value| / (1 + scale). On failure the witness
    is the failing point.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(e, Const):
        r = abs(complex(e.value)) / (1 + abs(complex(e.value)))
        passed = e.value == 0
        return ZeroTest(passed, 0.0 if passed else r, None if passed else {}, complex(e.value))
    pt = random_point(free_symbols(e), trials, seed, fixed)
    value, scale = evaluate_with_scale(e, pt)
    value = np.broadcast_to(np.asarray(value, dtype=complex), (trials,))
    scale = np.broadcast_to(np.asarray(scale, dtype=float), (trials,))
    ratio = np.abs(value) / (1.0 + scale)
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    k = int(np.argmax(ratio))
    worst = float(ratio[k])
    if worst < tol:
        return ZeroTest(True, worst)
    return ZeroTest(False, worst, pt.take(k).as_dict(), complex(value[k]))
