"""Compile expressions into flat Python functions for repeated numeric use."""

from __future__ import annotations

import cmath
import math

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
from .evaluate import EvaluationError, UnboundSymbolError


def lambdify(exprs, args, params=None, functions=None, hbar=None, complex_mode=False):
    """Return ``f(*args) -> tuple`` evaluating every expression in ``exprs``.

    Parameters
    ----------
    exprs : sequence of Expr
    args : sequence of variable names, e.g. ``("x", "y", "z", "p1", "p2", "p3")``
    params : dict name -> number, baked in as constants
    functions : dict ``(name, order)`` -> callable of one argument, for
        univariate abstract functions given numerically
    complex_mode : use cmath instead of math

    Shared subexpressions are computed once; the generated body is one
    assignment per distinct node, so deep trees do not hit parser limits.
    """
    params = dict(params or {})
    functions = dict(functions or {})
    lib = cmath if complex_mode else math
    env = {"_lib": lib, "_F": functions, "_EvaluationError": EvaluationError}
    lines = []
    names: dict[Expr, str] = {}
    consts: dict = {}

    def emit(n: Expr) -> str:
        if n in names:
            return names[n]
        if isinstance(n, Const):
            v = float(n.value)
            key = ("c", v)
            if key not in consts:
                consts[key] = f"_c{len(consts)}"
                env[consts[key]] = v
            return consts[key]
        if isinstance(n, ImaginaryUnit):
            if not complex_mode:
                raise EvaluationError("imaginary unit in real-mode compilation")
            return "1j"
        if isinstance(n, Hbar):
            if hbar is None:
                raise UnboundSymbolError("hbar")
            return repr(float(hbar))
        if isinstance(n, Param):
            if n.name not in params:
                raise UnboundSymbolError(n.name)
            key = ("p", n.name)
            if key not in consts:
                consts[key] = f"_p{len(consts)}"
                env[consts[key]] = params[n.name]
            return consts[key]
        if isinstance(n, Var):
            if n.name not in args:
                raise UnboundSymbolError(n.name)
            return n.name
        if isinstance(n, AbstractFn):
            if len(n.args) != 1 or (n.name, n.orders[0]) not in functions:
                raise UnboundSymbolError(str(n))
            expr = f"_F[{(n.name, n.orders[0])!r}]({n.args[0]})"
        elif isinstance(n, Add):
            expr = " + ".join(emit(a) for a in n.args)
        elif isinstance(n, Mul):
            expr = " * ".join(emit(a) for a in n.args)
        elif isinstance(n, Pow):
            b = emit(n.base)
            expr = f"{b} ** {n.exp}" if n.exp > 0 else f"1.0 / ({b} ** {-n.exp})"
        elif isinstance(n, Apply):
            expr = f"_lib.{n.func}({emit(n.arg)})"
        else:
            raise TypeError(f"unexpected node {type(n).__name__}")
        name = f"_t{len(names)}"
        lines.append(f"    {name} = {expr}")
        names[n] = name
        return name

    outs = [emit(e) for e in exprs]
    body = "\n".join(lines) if lines else "    pass"
    src = f"def _compiled({', '.join(args)}):\n{body}\n    return ({', '.join(outs)}{',' if len(outs) == 1 else ''})\n"
    code = compile(src, "<qintcart-lambdify>", "exec")
    exec(code, env)
    fn = env["_compiled"]
    fn.source = src
    return fn
