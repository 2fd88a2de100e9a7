"""Immutable expression trees with canonicalizing constructors.

Every node is built through :func:`add`, :func:`mul`, :func:`power`,
:func:`apply` (or the operator overloads, which call them), so any tree a
user can hold is already canonical: sums and products are flattened and
sorted, numeric constants are folded with exact rationals, like terms and
equal bases are collected, and powers of ``i`` are reduced.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

SPATIAL = ("x", "y", "z")
MOMENTA = ("p1", "p2", "p3")
VARIABLES = SPATIAL + MOMENTA
BUILTINS = ("sin", "cos", "sinh", "cosh", "exp")

_RANK = {
    "Const": 0,
    "ImaginaryUnit": 1,
    "Hbar": 2,
    "Param": 3,
    "Var": 4,
    "AbstractFn": 5,
    "Apply": 6,
    "Pow": 7,
    "Mul": 8,
    "Add": 9,
}


class Expr:
    """Base class of all expression nodes.

    Nodes are hashable and compare structurally. Use the module-level
    constructors rather than instantiating subclasses directly.
    """

    __slots__ = ("_hash", "_key")

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _init(self, **fields):
        for name, value in fields.items():
            object.__setattr__(self, name, value)
        object.__setattr__(self, "_hash", None)
        object.__setattr__(self, "_key", None)

    def _fields(self) -> tuple:
        raise NotImplementedError

    def _make_key(self) -> tuple:
        raise NotImplementedError

    @property
    def sort_key(self) -> tuple:
        key = self._key
        if key is None:
            key = self._make_key()
            object.__setattr__(self, "_key", key)
        return key

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((type(self).__name__,) + self._fields())
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        if hash(self) != hash(other):
            return False
        return self._fields() == other._fields()

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __reduce__(self):
        return (_rebuild, (type(self).__name__, self._fields()))

    # arithmetic sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), -1))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, -1))

    def __pow__(self, n):
        if isinstance(n, Const) and n.is_integer:
            n = int(n.value)
        if not isinstance(n, int) or isinstance(n, bool):
            raise TypeError("exponents must be integers")
        return power(self, n)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __str__(self):
        from .printing import to_string

        return to_string(self)

    def __repr__(self):
        return f"Expr({str(self)!r})"

    @property
    def is_zero_literal(self) -> bool:
        return False


def _rebuild(kind, fields):
    return _FACTORY[kind](*fields)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, Rational):
            value = Fraction(value)
        elif isinstance(value, float):
            pass
        else:
            raise TypeError(f"Const needs a rational or float, got {type(value).__name__}")
        self._init(value=value)

    def _fields(self):
        return (type(self.value) is float, self.value)

    def _make_key(self):
        return (0, type(self.value) is float, self.value)

    @property
    def is_float(self) -> bool:
        return type(self.value) is float

    @property
    def is_integer(self) -> bool:
        return not self.is_float and self.value.denominator == 1

    @property
    def is_zero_literal(self) -> bool:
        return self.value == 0


class ImaginaryUnit(Expr):
    __slots__ = ()

    def __init__(self):
        self._init()

    def _fields(self):
        return ()

    def _make_key(self):
        return (1,)


class Hbar(Expr):
    __slots__ = ()

    def __init__(self):
        self._init()

    def _fields(self):
        return ()

    def _make_key(self):
        return (2,)


class Param(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self._init(name=name)

    def _fields(self):
        return (self.name,)

    def _make_key(self):
        return (3, self.name)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if name not in VARIABLES:
            raise ValueError(f"unknown variable {name!r}; expected one of {VARIABLES}")
        self._init(name=name)

    def _fields(self):
        return (self.name,)

    def _make_key(self):
        return (4, VARIABLES.index(self.name))


class AbstractFn(Expr):
    """An unspecified smooth function and one of its partial derivatives.

    ``args`` holds distinct spatial variable names and ``orders`` the
    derivative order taken in each argument. The univariate case
    ``AbstractFn("f", ("x",), (2,))`` is the second derivative ``f''(x)``.
    """

    __slots__ = ("name", "args", "orders")

    def __init__(self, name: str, args, orders=None):
        if isinstance(args, str):
            args = (args,)
        args = tuple(args)
        if orders is None:
            orders = (0,) * len(args)
        elif isinstance(orders, int):
            orders = (orders,)
        orders = tuple(int(o) for o in orders)
        if not args or len(set(args)) != len(args) or any(a not in SPATIAL for a in args):
            raise ValueError(f"abstract function {name!r} needs distinct arguments from {SPATIAL}")
        if len(orders) != len(args) or any(o < 0 for o in orders):
            raise ValueError(f"bad derivative orders {orders} for {name!r}")
        self._init(name=name, args=args, orders=orders)

    def _fields(self):
        return (self.name, self.args, self.orders)

    def _make_key(self):
        return (5, self.name, self.args, self.orders)

    @property
    def order(self) -> int:
        return sum(self.orders)

    @property
    def jet_key(self) -> tuple:
        return (self.name, self.args, self.orders)


class Apply(Expr):
    __slots__ = ("func", "arg")

    def __init__(self, func: str, arg: Expr):
        if func not in BUILTINS:
            raise ValueError(f"unknown builtin {func!r}")
        self._init(func=func, arg=arg)

    def _fields(self):
        return (self.func, self.arg)

    def _make_key(self):
        return (6, self.func, self.arg.sort_key)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        self._init(base=base, exp=int(exp))

    def _fields(self):
        return (self.base, self.exp)

    def _make_key(self):
        return (7, self.base.sort_key, self.exp)


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, *args: Expr):
        self._init(args=tuple(args))

    def _fields(self):
        return self.args

    def _make_key(self):
        return (8, tuple(a.sort_key for a in self.args))

    @property
    def coeff(self):
        first = self.args[0]
        return first.value if isinstance(first, Const) else Fraction(1)

    @property
    def rest(self) -> tuple:
        return self.args[1:] if isinstance(self.args[0], Const) else self.args


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, *args: Expr):
        self._init(args=tuple(args))

    def _fields(self):
        return self.args

    def _make_key(self):
        return (9, tuple(a.sort_key for a in self.args))


_FACTORY = {
    "Const": Const,
    "ImaginaryUnit": lambda: I,
    "Hbar": lambda: HBAR,
    "Param": Param,
    "Var": Var,
    "AbstractFn": AbstractFn,
    "Apply": Apply,
    "Pow": Pow,
    "Mul": Mul,
    "Add": Add,
}

ZERO = Const(0)
ONE = Const(1)
I = ImaginaryUnit()
HBAR = Hbar()
X, Y, Z = (Var(v) for v in SPATIAL)
P1, P2, P3 = (Var(v) for v in MOMENTA)


def as_expr(value) -> Expr:
    """Coerce Python numbers (including complex) to expressions."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, complex):
        re, im = value.real, value.imag
        if im == 0:
            return Const(re)
        return add(Const(re), mul(Const(im), I)) if re != 0 else mul(Const(im), I)
    if isinstance(value, (Rational, float, bool)):
        return Const(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def const(value) -> Expr:
    return as_expr(value)


def _num_add(a, b):
    if type(a) is float or type(b) is float:
        return float(a) + float(b)
    return a + b


def _num_mul(a, b):
    if type(a) is float or type(b) is float:
        return float(a) * float(b)
    return a * b


def _is_one(v) -> bool:
    return type(v) is not float and v == 1


def add(*terms) -> Expr:
    """Canonical sum: flattened, constants folded, like terms collected, sorted."""
    number = Fraction(0)
    collected: dict[Expr, object] = {}
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.args))
            continue
        if isinstance(t, Const):
            number = _num_add(number, t.value)
            continue
        if isinstance(t, Mul) and isinstance(t.args[0], Const):
            c = t.args[0].value
            rest = t.args[1:]
            body = rest[0] if len(rest) == 1 else Mul(*rest)
        else:
            c, body = Fraction(1), t
        if body in collected:
            collected[body] = _num_add(collected[body], c)
        else:
            collected[body] = c
    out = []
    for body, c in collected.items():
        if c == 0:
            continue
        out.append(_scale(c, body))
    out.sort(key=lambda e: e.sort_key)
    if number != 0:
        out.insert(0, Const(number))
    if not out:
        return Const(number) if type(number) is float else ZERO
    if len(out) == 1:
        return out[0]
    return Add(*out)


def _scale(c, body: Expr) -> Expr:
    if _is_one(c):
        return body
    if isinstance(body, Mul):
        return Mul(Const(c), *body.args)
    return Mul(Const(c), body)


def mul(*factors) -> Expr:
    """Canonical product: flattened, constants folded, equal bases merged.

    A numeric (or imaginary) factor times a single sum is distributed.
    """
    number = Fraction(1)
    i_count = 0
    bases: dict[Expr, int] = {}
    stack = [as_expr(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(reversed(f.args))
            continue
        if isinstance(f, Const):
            if f.value == 0:
                return ZERO
            number = _num_mul(number, f.value)
            continue
        if f is I or isinstance(f, ImaginaryUnit):
            i_count += 1
            continue
        if isinstance(f, Pow):
            base, n = f.base, f.exp
        else:
            base, n = f, 1
        bases[base] = bases.get(base, 0) + n
    i_count %= 4
    if i_count >= 2:
        number = _num_mul(number, -1)
        i_count -= 2
    out = [I] if i_count else []
    for base, n in bases.items():
        if n == 0:
            continue
        out.append(base if n == 1 else Pow(base, n))
    if len(out) - bool(i_count) == 1 and isinstance(out[-1], Add) and (i_count or not _is_one(number)):
        # a lone sum absorbs the numeric factor: 2*(x + y) -> 2*x + 2*y
        scale = out[:-1] + ([] if _is_one(number) else [Const(number)])
        return add(*(mul(*scale, t) for t in out[-1].args))
    out.sort(key=lambda e: e.sort_key)
    if not out:
        return Const(number)
    if not _is_one(number):
        out.insert(0, Const(number))
    if len(out) == 1:
        return out[0]
    return Mul(*out)


def neg(e) -> Expr:
    return mul(Const(-1), e)


def power(base, n: int) -> Expr:
    """Canonical integer power. Powers distribute over products."""
    base = as_expr(base)
    n = int(n)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        v = base.value
        if v == 0 and n < 0:
            raise ZeroDivisionError("division by zero in constant power")
        return Const(v**n if type(v) is float else Fraction(v) ** n)
    if isinstance(base, ImaginaryUnit):
        return [ONE, I, Const(-1), neg(I)][n % 4]
    if isinstance(base, Pow):
        return power(base.base, base.exp * n)
    if isinstance(base, Mul):
        return mul(*(power(f, n) for f in base.args))
    return Pow(base, n)


def apply(func: str, arg) -> Expr:
    arg = as_expr(arg)
    if func not in BUILTINS:
        raise ValueError(f"unknown builtin {func!r}")
    if isinstance(arg, Const) and arg.value == 0:
        return ZERO if func in ("sin", "sinh") else ONE
    return Apply(func, arg)


def sin(e):
    return apply("sin", e)


def cos(e):
    return apply("cos", e)


def sinh(e):
    return apply("sinh", e)


def cosh(e):
    return apply("cosh", e)


def exp(e):
    return apply("exp", e)


def param(name: str) -> Param:
    return Param(name)


def params(names: str):
    """``params("a1 a2 a3")`` -> tuple of Param nodes."""
    return tuple(Param(n) for n in names.split())


def fn(name: str, *args: str, orders=None) -> AbstractFn:
    return AbstractFn(name, args, orders)


def rational(p: int, q: int = 1) -> Const:
    return Const(Fraction(p, q))
