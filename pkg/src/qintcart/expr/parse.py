"""Precedence-climbing parser for the expression grammar.

Grammar (loosest to tightest)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | '(' sum ')' | NAME | NAME call
    call    := "'"* '(' args ')' | '^' '(' INT (',' INT)* ')' '(' args ')'

Bare names resolve to ``i``, ``hbar``, the variables x, y, z, p1, p2, p3, or
parameters. ``name(x)`` is an abstract function when every argument is a
bare spatial variable, otherwise ``name`` must be a builtin.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .nodes import (
    BUILTINS,
    HBAR,
    I,
    SPATIAL,
    VARIABLES,
    AbstractFn,
    Const,
    Expr,
    Param,
    Var,
    add,
    apply,
    mul,
    neg,
    power,
)

# names that look like functions but are deliberately unsupported
_KNOWN_UNSUPPORTED = {"tan", "cot", "log", "ln", "sqrt", "arcsin", "arccos", "arctan", "tanh", "abs"}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),'])
    """,
    re.VERBOSE,
)


class ParseError(SyntaxError):
    """Syntax error carrying the byte offset into the source text."""

    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.msg_text = message
        self.offset = offset
        self.source = text


class UnknownBuiltinError(ParseError):
    pass


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, k: int = 0):
        j = min(self.i + k, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self):
        tok = self.tokens[self.i]
        self.i = min(self.i + 1, len(self.tokens) - 1)
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return ParseError(msg, tok[2], self.text)

    def expect(self, text: str):
        tok = self.next()
        if tok[1] != text or tok[0] == "num":
            raise self.error(f"expected {text!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok[0] == "op" and tok[1] == text

    def parse(self) -> Expr:
        e = self.sum()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return e

    def sum(self) -> Expr:
        terms = [self.product()]
        while self.at("+") or self.at("-"):
            op = self.next()[1]
            t = self.product()
            terms.append(t if op == "+" else neg(t))
        return terms[0] if len(terms) == 1 else add(*terms)

    def product(self) -> Expr:
        # one flat mul per chain: the canonical product is not associative
        # once numeric factors distribute over a lone sum
        factors = self.signed()
        while self.at("*") or self.at("/"):
            op = self.next()
            rhs = self.signed()
            if op[1] == "*":
                factors.extend(rhs)
            else:
                base = rhs[-1]
                if isinstance(base, Const) and base.value == 0:
                    raise self.error("division by zero", op)
                factors.extend(rhs[:-1])
                factors.append(power(base, -1))
        return factors[0] if len(factors) == 1 else mul(*factors)

    def signed(self) -> list:
        """Leading signs as ``-1`` factors followed by the operand."""
        out = []
        while self.at("-") or self.at("+"):
            if self.next()[1] == "-":
                out.append(Const(-1))
        out.append(self.power())
        return out

    def unary(self) -> Expr:
        parts = self.signed()
        return parts[0] if len(parts) == 1 else mul(*parts)

    def power(self) -> Expr:
        base = self.primary()
        if self.at("^"):
            tok = self.next()
            ex = self.unary()
            if not (isinstance(ex, Const) and ex.is_integer):
                raise self.error("exponent must be an integer constant", tok)
            return power(base, int(ex.value))
        return base

    def primary(self) -> Expr:
        tok = self.peek()
        kind, text, _ = tok
        if kind == "num":
            self.next()
            if any(c in text for c in ".eE"):
                return Const(float(text))
            return Const(Fraction(int(text)))
        if self.at("("):
            self.next()
            e = self.sum()
            self.expect(")")
            return e
        if kind == "name":
            self.next()
            return self.name(tok)
        raise self.error(f"unexpected {text or 'end of input'!r}")

    def _derivative_suffix(self):
        # f'(x), f''(x), f^(3)(x), F^(1,0,2)(x,y,z)
        primes = 0
        while self.at("'"):
            self.next()
            primes += 1
        if primes:
            return (primes,)
        if not (self.at("^") and self.at("(", 1) and self.peek(2)[0] == "num"):
            return None
        j = 2
        orders = []
        while True:
            tok = self.peek(j)
            if tok[0] != "num" or not tok[1].isdigit():
                return None
            orders.append(int(tok[1]))
            if self.at(",", j + 1):
                j += 2
                continue
            if self.at(")", j + 1) and self.at("(", j + 2):
                break
            return None
        for _ in range(j + 2):
            self.next()
        return tuple(orders)

    def name(self, tok) -> Expr:
        text = tok[1]
        orders = self._derivative_suffix()
        if orders is None and not self.at("("):
            if text == "i":
                return I
            if text == "hbar":
                return HBAR
            if text in VARIABLES:
                return Var(text)
            return Param(text)
        if text in ("i", "hbar") or text in VARIABLES:
            raise self.error(f"{text!r} cannot be applied as a function", tok)
        open_tok = self.expect("(")
        args = [self.sum()]
        while self.at(","):
            self.next()
            args.append(self.sum())
        self.expect(")")
        bare = all(isinstance(a, Var) and a.name in SPATIAL for a in args)
        if text in BUILTINS and orders is None:
            if len(args) != 1:
                raise self.error(f"{text} takes one argument", open_tok)
            return apply(text, args[0])
        if text in _KNOWN_UNSUPPORTED or text in BUILTINS:
            raise UnknownBuiltinError(f"unknown builtin {text!r}", tok[2], self.text)
        if not bare:
            raise UnknownBuiltinError(
                f"unknown builtin {text!r} (abstract functions take bare variables)", tok[2], self.text
            )
        names = tuple(a.name for a in args)
        if len(set(names)) != len(names):
            raise self.error(f"repeated argument in {text}", open_tok)
        if orders is None:
            orders = (0,) * len(names)
        if len(orders) != len(names):
            raise self.error(f"{text} has {len(names)} arguments but {len(orders)} derivative orders", tok)
        return AbstractFn(text, names, orders)


def parse(text: str) -> Expr:
    """Parse the text grammar into a canonical expression."""
    return _Parser(text).parse()
