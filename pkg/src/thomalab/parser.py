"""Expression language for polynomials.

Grammar, loosest binding first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | factor
    factor := atom ('^' nat)?
    atom   := 'q'nat | 'qs'nat'@'nat','nat | 'a'nat | 'b'nat
            | 'theta' | 's1' | 's2' | 'pa' | 'ptau'
            | number | '(' expr ')'

So ``-q1^2`` is ``-(q1^2)``. A divisor must be a unit of the coefficient
ring: a nonzero rational times a power of theta.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .poly import (
    PARAM_NAMES, ExtPoly, MomentPoly, NatPoly, Poly, PolyError,
)


class ParseError(ValueError):
    def __init__(self, msg: str, src: str, offset: int):
        self.msg = msg
        self.offset = offset
        self.line = src.count("\n", 0, offset) + 1
        self.column = offset - (src.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"{msg} at line {self.line}, column {self.column} (offset {offset})")


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction
    pos: int


@dataclass(frozen=True)
class Param:
    name: str
    pos: int


@dataclass(frozen=True)
class Gen:
    kind: str  # "q", "qs", "a", "b"
    idx: int
    level: tuple[int, int] | None
    pos: int


@dataclass(frozen=True)
class Neg:
    arg: object
    pos: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    pos: int


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int
    pos: int


# -- lexer --------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),@]))")
_GEN = re.compile(r"(qs|q|a|b)(\d+)")


def _tokens(src: str):
    pos = 0
    out = []
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            out.append(("eof", None, pos))
            return out
        m = _TOKEN.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokens(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, self.src, tok[2])

    def expect_op(self, op):
        t = self.peek()
        if t[0] != "op" or t[1] != op:
            self.error(f"expected {op!r}, found {self.describe(t)}")
        return self.take()

    @staticmethod
    def describe(t):
        return "end of input" if t[0] == "eof" else repr(t[1])

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "eof":
            self.error(f"unexpected {self.describe(self.peek())}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()
            node = BinOp(op[1], node, self.term(), op[2])
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()
            node = BinOp(op[1], node, self.unary(), op[2])
        return node

    def unary(self):
        t = self.peek()
        if t[0] == "op" and t[1] == "-":
            self.take()
            return Neg(self.unary(), t[2])
        return self.factor()

    def factor(self):
        base = self.atom()
        t = self.peek()
        if t[0] == "op" and t[1] == "^":
            self.take()
            e = self.peek()
            if e[0] != "num" or "." in e[1]:
                self.error(f"exponent must be a natural number, found {self.describe(e)}")
            self.take()
            return Pow(base, int(e[1]), t[2])
        return base

    def nat(self, what):
        t = self.peek()
        if t[0] != "num" or "." in t[1]:
            self.error(f"expected {what}, found {self.describe(t)}")
        self.take()
        return int(t[1])

    def atom(self):
        t = self.peek()
        kind, text, pos = t
        if kind == "num":
            self.take()
            return Num(Fraction(text), pos)
        if kind == "op" and text == "(":
            self.take()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "ident":
            self.take()
            if text in PARAM_NAMES:
                return Param(text, pos)
            m = _GEN.fullmatch(text)
            if not m:
                self.error(f"unknown identifier {text!r}", t)
            g, idx = m.group(1), int(m.group(2))
            if g == "qs":
                self.expect_op("@")
                n = self.nat("level N")
                self.expect_op(",")
                mm = self.nat("level M")
                return Gen("qs", idx, (n, mm), pos)
            if g in "ab" and idx == 0:
                self.error(f"coordinate index must be >= 1 in {text!r}", t)
            return Gen(g, idx, None, pos)
        self.error(f"expected an operand, found {self.describe(t)}")


def parse_expr(src: str):
    """Parse ``src`` to an AST; raises ParseError with offset/line/column."""
    if not isinstance(src, str):
        raise TypeError("expression source must be a string")
    return _Parser(src).parse()


# -- lowering -----------------------------------------------------------------------

FAMILIES = {"moment": MomentPoly, "ext": ExtPoly, "nat": NatPoly}


def _walk(node):
    yield node
    for child in ("arg", "left", "right", "base"):
        sub = getattr(node, child, None)
        if sub is not None:
            yield from _walk(sub)


def _resolve(node, src, family, level):
    gens = [n for n in _walk(node) if isinstance(n, Gen)]
    kinds = {g.kind for g in gens}

    def fail(msg, at):
        raise ParseError(msg, src, at.pos)

    if "q" in kinds and kinds - {"q"}:
        other = next(g for g in gens if g.kind != "q")
        fail("cannot mix moment generators q_k with shifted or coordinate generators", other)
    if family is None:
        family = "moment" if "q" in kinds or not kinds else "ext" if "qs" in kinds else "nat"
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if family == "moment":
        if kinds - {"q"}:
            fail("expected a moment polynomial (q_k only)", next(g for g in gens if g.kind != "q"))
        return family, None
    if "q" in kinds:
        fail(f"q_k is not a generator of the {family} family", gens[0])
    if family == "nat" and "qs" in kinds:
        fail("shifted moments are not natural-coordinate generators",
             next(g for g in gens if g.kind == "qs"))
    for g in gens:
        if g.kind == "qs":
            if level is None:
                level = g.level
            elif g.level != tuple(level):
                fail(f"level {g.level} differs from {tuple(level)}", g)
    if level is None:
        level = (max([g.idx for g in gens if g.kind == "a"], default=0),
                 max([g.idx for g in gens if g.kind == "b"], default=0))
        if family == "nat" and level == (0, 0):
            level = (1, 0)
    level = tuple(level)
    for g in gens:
        if (g.kind == "a" and g.idx > level[0]) or (g.kind == "b" and g.idx > level[1]):
            fail(f"{g.kind}{g.idx} lies outside level {level}", g)
    return family, level


def _unit_inverse(p: Poly):
    """Inverse of c*theta^e, or None when p is not such a unit."""
    if len(p) != 1:
        return None
    ((mono, pm), c), = p.items()
    if mono or any(pm[1:]):
        return None
    return p._make({((), (-pm[0], 0, 0, 0, 0)): Fraction(1) / Fraction(c)}, p.level)


def lower(node, src: str = "", family: str | None = None, level=None) -> Poly:
    """AST to MomentPoly / ExtPoly / NatPoly, inferring the family unless given."""
    family, level = _resolve(node, src, family, level)
    cls = FAMILIES[family]

    def go(n) -> Poly:
        if isinstance(n, Num):
            return cls.const(n.value, level)
        if isinstance(n, Param):
            return cls.param(n.name, 1, level)
        if isinstance(n, Gen):
            if n.kind == "q":
                return cls.q(n.idx)
            if n.kind == "qs":
                return cls.qs(n.idx, level)
            return cls.gen("x", n.idx if n.kind == "a" else -n.idx, level)
        if isinstance(n, Neg):
            return -go(n.arg)
        if isinstance(n, Pow):
            return go(n.base) ** n.exp
        if isinstance(n, BinOp):
            a, b = go(n.left), go(n.right)
            if n.op == "+":
                return a + b
            if n.op == "-":
                return a - b
            if n.op == "*":
                return a * b
            inv = _unit_inverse(b)
            if inv is None:
                raise ParseError("divisor must be a nonzero rational times a power of theta",
                                 src, n.pos)
            return a * inv
        raise TypeError(f"unknown node {n!r}")

    try:
        return go(node)
    except PolyError as exc:
        raise ParseError(str(exc), src, 0) from None


def parse_poly(src: str, family: str | None = None, level=None) -> Poly:
    return lower(parse_expr(src), src, family, level)


__all__ = [
    "ParseError", "parse_expr", "lower", "parse_poly", "Num", "Param", "Gen", "Neg",
    "BinOp", "Pow", "FAMILIES",
]
