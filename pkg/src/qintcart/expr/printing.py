"""Text and LaTeX printers. Text output is valid input for :func:`parse`."""

from __future__ import annotations

from fractions import Fraction

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
    mul,
)

# binding strength of the outermost operator of a printed node
_ATOM, _POW, _MUL, _ADD = 4, 3, 2, 1


def _num(v) -> str:
    if type(v) is float:
        return repr(v)
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _fn_text(n: AbstractFn) -> str:
    args = ",".join(n.args)
    if len(n.args) == 1:
        k = n.orders[0]
        mark = "'" * k if k <= 3 else f"^({k})"
    else:
        mark = "" if n.order == 0 else "^(" + ",".join(map(str, n.orders)) + ")"
    return f"{n.name}{mark}({args})"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _ADD
    if isinstance(e, Mul):
        return _MUL
    if isinstance(e, Const):
        v = e.value
        if v < 0 or (type(v) is not float and Fraction(v).denominator != 1):
            return _MUL
        if type(v) is float and ("e" in repr(v) or "inf" in repr(v)):
            return _MUL
        return _ATOM
    if isinstance(e, Pow):
        return _POW
    return _ATOM


def _wrap(e: Expr, need: int) -> str:
    s = to_string(e)
    return f"({s})" if _prec(e) < need else s


def _negative(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    return isinstance(e, Mul) and isinstance(e.args[0], Const) and e.args[0].value < 0


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        return _num(e.value)
    if isinstance(e, ImaginaryUnit):
        return "i"
    if isinstance(e, Hbar):
        return "hbar"
    if isinstance(e, (Param, Var)):
        return e.name
    if isinstance(e, AbstractFn):
        return _fn_text(e)
    if isinstance(e, Apply):
        return f"{e.func}({to_string(e.arg)})"
    if isinstance(e, Pow):
        base = _wrap(e.base, _ATOM)
        return f"{base}^{e.exp}" if e.exp > 0 else f"{base}^({e.exp})"
    if isinstance(e, Mul):
        args = list(e.args)
        prefix = ""
        if isinstance(args[0], Const):
            c = args[0].value
            if c == -1 and type(c) is not float:
                prefix = "-"
                args = args[1:]
            elif c < 0:
                prefix = "-"
                args[0] = Const(-c)
        parts = [_wrap(a, _MUL + 1) if not isinstance(a, Const) else _num(a.value) for a in args]
        return prefix + "*".join(parts)
    if isinstance(e, Add):
        out = []
        for k, t in enumerate(e.args):
            if _negative(t):
                body = to_string(mul(-1, t)) if not isinstance(t, Const) else _num(-t.value)
                if isinstance(t, Mul) and isinstance(mul(-1, t), Add):
                    body = f"({body})"
                out.append(("-" if k == 0 else " - ") + body)
            else:
                out.append(("" if k == 0 else " + ") + to_string(t))
        return "".join(out)
    raise TypeError(f"unexpected node {type(e).__name__}")


_LATEX_FUNCS = {"sin": r"\sin", "cos": r"\cos", "sinh": r"\sinh", "cosh": r"\cosh", "exp": r"\exp"}


def _latex_name(name: str) -> str:
    head = name.rstrip("0123456789")
    tail = name[len(head):]
    greek = {"gamma": r"\gamma", "alpha": r"\alpha", "beta": r"\beta", "hbar": r"\hbar"}
    head = greek.get(head, head if len(head) == 1 else r"\mathrm{" + head + "}")
    return f"{head}_{{{tail}}}" if tail else head


def to_latex(e: Expr) -> str:
    if isinstance(e, Const):
        v = e.value
        if type(v) is not float and Fraction(v).denominator != 1:
            v = Fraction(v)
            sign = "-" if v < 0 else ""
            return rf"{sign}\frac{{{abs(v.numerator)}}}{{{v.denominator}}}"
        return _num(v)
    if isinstance(e, ImaginaryUnit):
        return "i"
    if isinstance(e, Hbar):
        return r"\hbar"
    if isinstance(e, Param):
        return _latex_name(e.name)
    if isinstance(e, Var):
        return e.name if e.name in "xyz" else f"p_{e.name[1]}"
    if isinstance(e, AbstractFn):
        name = _latex_name(e.name)
        if len(e.args) == 1:
            k = e.orders[0]
            mark = "'" * k if k <= 3 else f"^{{({k})}}"
            return f"{name}{mark}({e.args[0]})"
        if e.order == 0:
            return f"{name}"
        sub = "".join(a * k for a, k in zip(e.args, e.orders))
        return rf"\partial_{{{sub}}} {name}"
    if isinstance(e, Apply):
        return rf"{_LATEX_FUNCS[e.func]}\left({to_latex(e.arg)}\right)"
    if isinstance(e, Pow):
        base = to_latex(e.base)
        if _prec(e.base) < _ATOM or isinstance(e.base, (Apply, AbstractFn)):
            base = rf"\left({base}\right)"
        return f"{base}^{{{e.exp}}}"
    if isinstance(e, Mul):
        args = list(e.args)
        prefix = ""
        if isinstance(args[0], Const) and args[0].value < 0:
            prefix = "-"
            c = -args[0].value
            args = args[1:] if c == 1 and type(c) is not float else [Const(c)] + args[1:]
        parts = []
        for a in args:
            s = to_latex(a)
            parts.append(rf"\left({s}\right)" if isinstance(a, Add) else s)
        return prefix + r" \, ".join(parts)
    if isinstance(e, Add):
        out = []
        for k, t in enumerate(e.args):
            s = to_latex(t)
            if k and not s.startswith("-"):
                s = "+ " + s
            elif k:
                s = "- " + s[1:]
            out.append(s)
        return " ".join(out)
    raise TypeError(f"unexpected node {type(e).__name__}")
