"""Closed-form scalar expressions: AST, parser, printer and evaluator.

Grammar (EBNF, whitespace ignored between tokens)::

    expr     = term , { ("+" | "-") , term } ;
    term     = unary , { ("*" | "/") , unary } ;
    unary    = "-" , unary | "+" , unary | power ;
    power    = atom , [ "^" , exponent ] ;
    exponent = [ "-" ] , INTEGER | "(" , [ "-" ] , INTEGER , ")" | "^"-chain ;
    atom     = NUMBER | IDENT | IDENT , "(" , expr , ")" | "(" , expr , ")" ;
    NUMBER   = digit , { digit } , [ "." , digit , { digit } ] ;
    IDENT    = letter , { letter | digit | "_" } ;

``^`` binds tighter than unary minus (``-x1^2`` is ``-(x1^2)``) and is
right-associative (``x1^2^3`` is ``x1^(2^3)``; the exponent must still reduce
to an integer literal).  Identifiers are the coordinates ``x1 .. xn``, the
time ``t``, the constants ``pi`` and ``i`` (imaginary unit), any declared
alias for a coordinate, and the functions ``sin cos tan exp log sqrt sinh
cosh``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from cqmq.errors import DomainError, ExpressionSyntaxError, UnknownIdentifier
from cqmq.jetcalc import jet as J

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh")


class Expression:
    """Base class of AST nodes. Nodes are immutable and compare structurally."""

    def __add__(self, other):
        return BinOp("+", self, _wrap(other))

    def __radd__(self, other):
        return BinOp("+", _wrap(other), self)

    def __sub__(self, other):
        return BinOp("-", self, _wrap(other))

    def __rsub__(self, other):
        return BinOp("-", _wrap(other), self)

    def __mul__(self, other):
        return BinOp("*", self, _wrap(other))

    def __rmul__(self, other):
        return BinOp("*", _wrap(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, _wrap(other))

    def __rtruediv__(self, other):
        return BinOp("/", _wrap(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        return Pow(self, int(k))

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Num(Expression):
    value: Fraction


@dataclass(frozen=True, eq=True)
class Var(Expression):
    """Coordinate ``x<index>``; index 0 denotes time ``t``."""

    index: int


@dataclass(frozen=True, eq=True)
class Const(Expression):
    name: str  # "pi" or "i"


@dataclass(frozen=True, eq=True)
class Neg(Expression):
    operand: Expression


@dataclass(frozen=True, eq=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression


@dataclass(frozen=True, eq=True)
class Pow(Expression):
    base: Expression
    exponent: int


@dataclass(frozen=True, eq=True)
class Call(Expression):
    func: str
    arg: Expression


def _wrap(x):
    if isinstance(x, Expression):
        return x
    if isinstance(x, (int, Fraction)):
        return Num(Fraction(x)) if x >= 0 else Neg(Num(Fraction(-x)))
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def var(i):
    return Var(i)


def num(x):
    return _wrap(Fraction(x))


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Tok:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int  # byte offset


def _tokenize(source):
    toks = []
    pos = 0
    raw = source.encode("utf-8")
    while True:
        m = _TOKEN.match(source, pos)
        if m is None:
            rest = source[pos:]
            if rest.strip() == "":
                break
            stripped = len(rest) - len(rest.lstrip())
            off = len(source[: pos + stripped].encode("utf-8"))
            raise ExpressionSyntaxError(
                f"unexpected character {source[pos + stripped]!r}",
                off,
                {"number", "identifier", "operator"},
            )
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), len(source[:start].encode("utf-8"))))
        pos = m.end()
    toks.append(_Tok("end", "", len(raw)))
    return toks


class _Parser:
    def __init__(self, source, n, aliases):
        self.toks = _tokenize(source)
        self.k = 0
        self.n = n
        self.aliases = dict(aliases or {})

    @property
    def tok(self):
        return self.toks[self.k]

    def fail(self, expected):
        t = self.tok
        what = "end of input" if t.kind == "end" else repr(t.text)
        raise ExpressionSyntaxError(f"unexpected {what}", t.offset, expected)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.k += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.fail({repr(text)})

    def parse(self):
        e = self.expr()
        if self.tok.kind != "end":
            self.fail({"operator", "end of input"})
        return e

    def expr(self):
        e = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.k += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.k += 1
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^"):
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        paren = self.accept("(")
        sign = -1 if self.accept("-") else 1
        t = self.tok
        if t.kind != "num" or "." in t.text:
            self.fail({"integer exponent"})
        self.k += 1
        value = sign * int(t.text)
        if paren:
            self.expect(")")
        if self.accept("^"):
            # right-associative chain of integer literals
            value = value ** self.exponent()
            if not isinstance(value, int):
                raise ExpressionSyntaxError("exponent is not an integer", t.offset, {"integer exponent"})
        return value

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.k += 1
            return Num(Fraction(t.text))
        if t.kind == "ident":
            self.k += 1
            name = t.text
            if name in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            if name in ("pi", "i"):
                return Const(name)
            if name == "t":
                return Var(0)
            if name in self.aliases:
                return Var(self.aliases[name])
            m = re.fullmatch(r"x([1-9][0-9]*)", name)
            if m:
                idx = int(m.group(1))
                if self.n is not None and idx > self.n:
                    raise UnknownIdentifier(name, t.offset)
                return Var(idx)
            raise UnknownIdentifier(name, t.offset)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.fail({"number", "identifier", "'('", "'-'"})


def parse(source, n=None, aliases=None):
    """Parse ``source`` into an :class:`Expression`.

    Parameters
    ----------
    source : str
    n : int, optional
        Chart dimension; coordinates ``x<k>`` with ``k > n`` are rejected.
    aliases : dict, optional
        Extra coordinate names, e.g. ``{"theta": 1, "phi": 2}``.
    """
    if isinstance(source, Expression):
        return source
    return _Parser(source, n, aliases).parse()


# --------------------------------------------------------------------------
# printer


def _fmt_fraction(q):
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"({q.numerator}/{q.denominator})"
    digits = max(twos, fives)
    scaled = q.numerator * 10**digits // q.denominator
    s = str(scaled).rjust(digits + 1, "0")
    return f"{s[:-digits]}.{s[-digits:]}"


def to_source(e):
    """Render ``e`` so that ``parse(to_source(e)) == e`` for parsed trees."""
    if isinstance(e, Num):
        return _fmt_fraction(e.value)
    if isinstance(e, Var):
        return "t" if e.index == 0 else f"x{e.index}"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Pow):
        exp = str(e.exponent) if e.exponent >= 0 else f"(-{-e.exponent})"
        base = to_source(e.base)
        if isinstance(e.base, Pow):
            base = f"({base})"
        return f"{base}^{exp}"
    if isinstance(e, Call):
        return f"{e.func}({to_source(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e):
    """Set of variable indices referenced by ``e`` (0 is time)."""
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, (Neg,)):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, Call):
        return variables(e.arg)
    return set()


# --------------------------------------------------------------------------
# evaluation

_JET_FUNCS = {
    "sin": J.sin,
    "cos": J.cos,
    "tan": J.tan,
    "exp": J.exp,
    "log": J.log,
    "sqrt": J.sqrt,
    "sinh": J.sinh,
    "cosh": J.cosh,
}


def evaluate(e, env, nvars, order):
    """Evaluate ``e`` with variables bound to jets (or plain numbers).

    ``env`` maps variable index (0 = time) to a :class:`Jet` or a scalar.
    Every intermediate result is a jet with ``nvars`` variables; this is
    also how expressions are composed with coordinate changes.
    """
    memo = {}

    def ev(node):
        key = id(node)
        if key in memo:
            return memo[key][1]
        out = _eval_node(node, ev, env, nvars, order)
        memo[key] = (node, out)
        return out

    return ev(e)


def _eval_node(node, ev, env, nvars, order):
    if isinstance(node, Num):
        return J.Jet.constant(float(node.value), nvars, order)
    if isinstance(node, Const):
        return J.Jet.constant(math.pi if node.name == "pi" else 1j, nvars, order)
    if isinstance(node, Var):
        if node.index not in env:
            name = "t" if node.index == 0 else f"x{node.index}"
            raise DomainError(f"variable {name} is not bound")
        v = env[node.index]
        return v if isinstance(v, J.Jet) else J.Jet.constant(v, nvars, order)
    if isinstance(node, Neg):
        return -ev(node.operand)
    if isinstance(node, BinOp):
        a, b = ev(node.left), ev(node.right)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Pow):
        return ev(node.base).ipow(node.exponent)
    if isinstance(node, Call):
        return _JET_FUNCS[node.func](ev(node.arg))
    raise TypeError(f"not an expression node: {node!r}")


def eval_jet(e, p, d=4, t=None):
    """Taylor coefficients of ``e`` at point ``p`` up to total order ``d``.

    ``p`` has shape ``(n,)`` or ``(n,) + batch``. If ``t`` is given the time
    variable is bound to that constant.
    """
    if isinstance(e, str):
        e = parse(e)
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    env = {i + 1: xi for i, xi in enumerate(J.Jet.variables(p, d))}
    if t is not None:
        env[0] = t
    return evaluate(e, env, n, d).broadcast_to(p.shape[1:])


def eval_point(e, p, t=None):
    """Plain value of ``e`` at ``p`` (order-0 jet)."""
    return eval_jet(e, p, 0, t=t).value
