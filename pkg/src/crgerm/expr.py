"""A small expression language for the non-analytic functions P and Q.

Expressions are immutable trees over the variables ``z``, ``zbar`` and ``v``
(the last one standing for ``Im z1``).  They can be parsed from text,
printed back, evaluated numerically (``complex``, numpy arrays or mpmath),
and differentiated symbolically with the Wirtinger operators d/dz, d/dzbar
and the real derivative d/dv.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] integer)?
    atom   := number | 'i' | ident | ident '(' expr ')' | '(' expr ')'

so exponentiation binds tighter than unary minus: ``-z^2`` is ``-(z^2)``.
Constant sub-expressions are folded while parsing, which is how rational
literals ``p/q`` and complex constants such as ``(1+2*i)`` become single
exact :class:`Const` nodes.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath
import numpy as np

from .numbers import QQi

VARIABLES = ("z", "zbar", "v")
FUNCTIONS = ("exp", "log", "logabs", "sin", "cos", "tan", "re", "im", "conj", "abs2")
HOLOMORPHIC_FUNCTIONS = ("exp", "log", "sin", "cos", "tan")


class ExprSyntaxError(SyntaxError):
    """Malformed source text; ``offset`` is the 1-based byte offset."""

    def __init__(self, message: str, source: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.msg = message
        self.text = source
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    def __init__(self, name: str, source: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", source, offset)
        self.name = name


class EvalSingularity(ArithmeticError):
    """Raised when evaluation hits a pole, log(0) or an overflow."""

    def __init__(self, node: "Expr", point: tuple):
        super().__init__(f"singular evaluation of {to_source(node)} at z={point[0]!r}, v={point[1]!r}")
        self.node = node
        self.point = point


class NotDifferentiable(ValueError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Expr:
    """Base class; concrete nodes are frozen dataclasses below."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n: int):
        return power(self, n)

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: QQi


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def __post_init__(self):
        if self.name not in VARIABLES:
            raise ValueError(f"unknown variable {self.name!r}")


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ValueError(f"unknown function {self.name!r}")


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class PiecewiseAtZero(Expr):
    """``origin_value`` at z = 0, ``body`` everywhere else."""

    body: Expr
    origin_value: Fraction = Fraction(0)


Number = Union[int, Fraction, QQi]


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Const(QQi.coerce(x))


def const(x) -> Const:
    return Const(QQi.coerce(x))


Z = Var("z")
ZBAR = Var("zbar")
V = Var("v")


def _is_const(e: Expr, value=None) -> bool:
    if type(e) is not Const:
        return False
    return value is None or e.value == value


# Simplifying constructors.  They fold constants and drop neutral elements,
# which keeps symbolic derivatives readable and makes d/dzbar of a
# holomorphic expression collapse to the literal 0.


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0) or _is_const(b, 0):
        return Const(QQi(0))
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if _is_const(a, -1):
        return neg(b)
    if _is_const(b, -1):
        return neg(a)
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b) and not b.value.is_zero():
        if _is_const(a):
            return Const(a.value / b.value)
        if b.value == 1:
            return a
    if _is_const(a, 0) and not _is_const(b, 0):
        return Const(QQi(0))
    return BinOp("/", a, b)


def neg(a: Expr) -> Expr:
    if type(a) is Const:
        return Const(-a.value)
    if type(a) is Neg:
        return a.arg
    return Neg(a)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return Const(QQi(1))
    if n == 1:
        return a
    if _is_const(a) and (n > 0 or not a.value.is_zero()):
        return Const(a.value**n)
    return Pow(a, n)


def func(name: str, a: Expr) -> Expr:
    if type(a) is Const:
        c = a.value
        if name == "conj":
            return Const(c.conjugate())
        if name == "re":
            return Const(QQi(c.re))
        if name == "im":
            return Const(QQi(c.im))
        if name == "abs2":
            return Const(QQi(c.abs2()))
    if name == "conj" and type(a) is Func and a.name == "conj":
        return a.arg
    return Func(name, a)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", source, _byte_offset(source, pos))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


def _byte_offset(source: str, pos: int) -> int:
    return len(source[:pos].encode("utf-8")) + 1


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return ExprSyntaxError(message, self.source, _byte_offset(self.source, tok[2]))

    def expect(self, text: str):
        tok = self.take()
        if tok[0] != "op" or tok[1] != text:
            raise self.error(f"expected {text!r}", tok)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = _fold(op, e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            e = _fold(op, e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek()[0] == "op" and self.peek()[1] == "-":
            self.take()
            arg = self.unary()
            return Const(-arg.value) if type(arg) is Const else Neg(arg)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            tok = self.take()
            if tok[0] != "num" or not tok[1].isdigit():
                raise self.error("exponent must be an integer", tok)
            n = sign * int(tok[1])
            if type(base) is Const and (n >= 0 or not base.value.is_zero()):
                return Const(base.value**n)
            return Pow(base, n)
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Const(QQi(Fraction(text)))
        if kind == "ident":
            if text == "i":
                return Const(QQi(0, 1))
            if text in VARIABLES:
                return Var(text)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                nxt = self.peek()
                if nxt[0] == "op" and nxt[1] == ",":
                    raise self.error(f"{text} takes exactly one argument", nxt)
                self.expect(")")
                return Func(text, arg)
            raise UnknownIdentifier(text, self.source, _byte_offset(self.source, tok[2]))
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "end":
            raise self.error("unexpected end of input", tok)
        raise self.error(f"unexpected token {text!r}", tok)


def _fold(op: str, a: Expr, b: Expr) -> Expr:
    if type(a) is Const and type(b) is Const:
        if op == "+":
            return Const(a.value + b.value)
        if op == "-":
            return Const(a.value - b.value)
        if op == "*":
            return Const(a.value * b.value)
        if op == "/" and not b.value.is_zero():
            return Const(a.value / b.value)
    return BinOp(op, a, b)


def parse(source: str) -> Expr:
    """Parse DSL text into an :class:`Expr`."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _const_source(c: QQi) -> str:
    def frac(x: Fraction) -> str:
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

    if not c.im:
        text = frac(c.re)
        simple = c.re >= 0 and c.re.denominator == 1
        return text if simple else f"({text})"
    if c.im == 1:
        imag = "i"
    elif c.im == -1:
        imag = "-i"
    else:
        imag = f"{frac(c.im)}*i"
    if not c.re:
        return "i" if imag == "i" else f"({imag})"
    sign = "" if imag.startswith("-") else "+"
    return f"({frac(c.re)}{sign}{imag})"


def _prec(e: Expr) -> int:
    t = type(e)
    if t is BinOp:
        return _PREC[e.op]
    if t is Neg:
        return 3
    if t is Pow:
        return 4
    if t is PiecewiseAtZero:
        return _prec(e.body)
    return 5


def to_source(e: Expr) -> str:
    """Print an expression so that ``parse`` reads it back.

    A :class:`PiecewiseAtZero` prints as its body; the origin value lives
    outside the grammar (germ files carry it as ``P_origin_value``).
    """
    t = type(e)
    if t is Const:
        return _const_source(e.value)
    if t is Var:
        return e.name
    if t is Func:
        return f"{e.name}({to_source(e.arg)})"
    if t is Neg:
        inner = to_source(e.arg)
        return "-" + (f"({inner})" if _prec(e.arg) < 3 else inner)
    if t is Pow:
        inner = to_source(e.base)
        if _prec(e.base) < 5:
            inner = f"({inner})"
        return f"{inner}^{e.exponent}"
    if t is BinOp:
        p = _PREC[e.op]
        left = to_source(e.left)
        right = to_source(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left}{e.op}{right}"
    if t is PiecewiseAtZero:
        return to_source(e.body)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Structural queries
# ---------------------------------------------------------------------------


def children(e: Expr) -> tuple:
    t = type(e)
    if t in (Neg, Func):
        return (e.arg,)
    if t is BinOp:
        return (e.left, e.right)
    if t is Pow:
        return (e.base,)
    if t is PiecewiseAtZero:
        return (e.body,)
    return ()


def variables(e: Expr) -> set[str]:
    if type(e) is Var:
        return {e.name}
    out: set[str] = set()
    for c in children(e):
        out |= variables(c)
    return out


def substitute_v(e: Expr, value) -> Expr:
    """Replace the variable ``v`` by a constant (used for slices Q(., v0))."""
    if type(e) is Var:
        return as_expr(value) if e.name == "v" else e
    t = type(e)
    if t is Const:
        return e
    if t is Neg:
        return neg(substitute_v(e.arg, value))
    if t is Func:
        return func(e.name, substitute_v(e.arg, value))
    if t is BinOp:
        return _fold(e.op, substitute_v(e.left, value), substitute_v(e.right, value))
    if t is Pow:
        return power(substitute_v(e.base, value), e.exponent)
    if t is PiecewiseAtZero:
        return PiecewiseAtZero(substitute_v(e.body, value), e.origin_value)
    raise TypeError(e)


# ---------------------------------------------------------------------------
# Numeric evaluation
# ---------------------------------------------------------------------------


class _ScalarLib:
    """Python complex arithmetic; singularities raise."""

    strict = True
    exp = staticmethod(cmath.exp)
    sin = staticmethod(cmath.sin)
    cos = staticmethod(cmath.cos)
    tan = staticmethod(cmath.tan)

    @staticmethod
    def const(c: QQi):
        return complex(c)

    @staticmethod
    def log(x):
        return cmath.log(x)

    @staticmethod
    def logabs(x):
        return complex(math.log(abs(x)))

    @staticmethod
    def conj(x):
        return x.conjugate()

    @staticmethod
    def re(x):
        return complex(x.real)

    @staticmethod
    def im(x):
        return complex(x.imag)

    @staticmethod
    def is_zero(x):
        return x == 0

    @staticmethod
    def ok(x):
        return cmath.isfinite(x)


class _ArrayLib:
    """Elementwise numpy evaluation; singular entries become nan."""

    strict = False
    exp = staticmethod(np.exp)
    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    tan = staticmethod(np.tan)
    log = staticmethod(np.log)

    @staticmethod
    def const(c: QQi):
        return complex(c)

    @staticmethod
    def logabs(x):
        return np.log(np.abs(x)).astype(complex)

    @staticmethod
    def conj(x):
        return np.conj(x)

    @staticmethod
    def re(x):
        return np.real(x).astype(complex)

    @staticmethod
    def im(x):
        return np.imag(x).astype(complex)


class _MpLib:
    """mpmath evaluation: no underflow, used for flat functions near 0."""

    strict = True
    exp = staticmethod(mpmath.exp)
    sin = staticmethod(mpmath.sin)
    cos = staticmethod(mpmath.cos)
    tan = staticmethod(mpmath.tan)

    @staticmethod
    def const(c: QQi):
        return mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator, mpmath.mpf(c.im.numerator) / c.im.denominator)

    @staticmethod
    def log(x):
        return mpmath.log(x)

    @staticmethod
    def logabs(x):
        return mpmath.mpc(mpmath.log(abs(x)))

    @staticmethod
    def conj(x):
        return mpmath.conj(x)

    @staticmethod
    def re(x):
        return mpmath.mpc(mpmath.re(x))

    @staticmethod
    def im(x):
        return mpmath.mpc(mpmath.im(x))

    @staticmethod
    def is_zero(x):
        return x == 0

    @staticmethod
    def ok(x):
        return mpmath.isfinite(x)


def _ev(e: Expr, z, zb, v, lib, point):
    t = type(e)
    if t is Var:
        return z if e.name == "z" else zb if e.name == "zbar" else v
    if t is Const:
        return lib.const(e.value)
    if t is BinOp:
        a = _ev(e.left, z, zb, v, lib, point)
        b = _ev(e.right, z, zb, v, lib, point)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if lib.strict and lib.is_zero(b):
            raise EvalSingularity(e, point)
        return a / b
    if t is Neg:
        return -_ev(e.arg, z, zb, v, lib, point)
    if t is Pow:
        b = _ev(e.base, z, zb, v, lib, point)
        if e.exponent < 0:
            if lib.strict and lib.is_zero(b):
                raise EvalSingularity(e, point)
            return 1 / (b ** (-e.exponent))
        return b**e.exponent
    if t is Func:
        a = _ev(e.arg, z, zb, v, lib, point)
        name = e.name
        if name == "abs2":
            return a * lib.conj(a)
        if name in ("log", "logabs") and lib.strict and lib.is_zero(a):
            raise EvalSingularity(e, point)
        try:
            out = getattr(lib, name)(a)
        except (OverflowError, ValueError, ZeroDivisionError):
            raise EvalSingularity(e, point) from None
        if lib.strict and not lib.ok(out):
            raise EvalSingularity(e, point)
        return out
    if t is PiecewiseAtZero:
        if lib is _ArrayLib:
            at0 = z == 0
            safe_z = np.where(at0, 1.0, z)
            body = _ev(e.body, safe_z, np.conj(safe_z), v, lib, point)
            return np.where(at0, complex(float(e.origin_value)), body)
        if z == 0:
            return lib.const(QQi(e.origin_value))
        return _ev(e.body, z, zb, v, lib, point)
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, z: complex, v: float = 0.0) -> complex:
    """Evaluate at one point in double precision; ``zbar`` is ``conj(z)``."""
    z = complex(z)
    v = complex(float(v))
    try:
        out = _ev(e, z, z.conjugate(), v, _ScalarLib, (z, v.real))
    except (OverflowError, ZeroDivisionError):
        raise EvalSingularity(e, (z, v.real)) from None
    if not cmath.isfinite(out):
        raise EvalSingularity(e, (z, v.real))
    return out


def evaluate_array(e: Expr, z, v=0.0) -> np.ndarray:
    """Vectorised evaluation; singular points come back as nan."""
    z = np.asarray(z, dtype=complex)
    v = np.broadcast_to(np.asarray(v, dtype=float), z.shape).astype(complex)
    with np.errstate(all="ignore"):
        out = _ev(e, z, np.conj(z), v, _ArrayLib, None)
        out = np.broadcast_to(np.asarray(out, dtype=complex), z.shape).copy()
    out[~np.isfinite(out)] = np.nan
    return out


def evaluate_mp(e: Expr, z, v=0, dps: int = 30):
    """Evaluate with mpmath at ``dps`` digits (no underflow for flat functions)."""
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z)
        vv = mpmath.mpc(v)
        try:
            return _ev(e, zz, mpmath.conj(zz), vv, _MpLib, (complex(z), float(v)))
        except ZeroDivisionError:
            raise EvalSingularity(e, (complex(z), float(v))) from None


def is_real_valued(e: Expr, points, tol: float = 1e-12) -> bool:
    """Numerical check that ``e`` has (relatively) zero imaginary part on ``points``.

    ``points`` is an iterable of ``(z, v)`` pairs; singular points are ignored.
    """
    for z, v in points:
        try:
            w = evaluate(e, z, v)
        except EvalSingularity:
            continue
        if abs(w.imag) > tol * max(1.0, abs(w.real)):
            return False
    return True


# ---------------------------------------------------------------------------
# Wirtinger calculus
# ---------------------------------------------------------------------------

_ALIASES = {"z": "z", "d/dz": "z", "zbar": "zbar", "d/dzbar": "zbar", "v": "v", "d/dv": "v"}
_DUAL = {"z": "zbar", "zbar": "z", "v": "v"}
_HALF = Const(QQi(Fraction(1, 2)))
_MINUS_HALF_I = Const(QQi(0, Fraction(-1, 2)))  # 1/(2i)


def wirtinger(e: Expr, which: str) -> Expr:
    """Exact derivative of ``e`` by d/dz, d/dzbar or d/dv.

    ``zbar`` is an independent variable for d/dz; ``conj``, ``re``, ``im``,
    ``abs2`` and ``logabs`` are differentiated through the identity
    d conj(u)/dz = conj(du/dzbar).  The derivative of a
    :class:`PiecewiseAtZero` is taken to be 0 at the origin; callers that
    rely on this (germ validation) check the limit numerically.
    """
    try:
        w = _ALIASES[which]
    except KeyError:
        raise ValueError(f"unknown derivative {which!r}; use z, zbar or v") from None
    return _d(e, w, {})


def _d(e: Expr, w: str, memo: dict) -> Expr:
    key = (id(e), w)
    hit = memo.get(key)
    if hit is not None and hit[0] is e:
        return hit[1]
    out = _d_raw(e, w, memo)
    memo[key] = (e, out)
    return out


def _d_raw(e: Expr, w: str, memo) -> Expr:
    t = type(e)
    if t is Const:
        return Const(QQi(0))
    if t is Var:
        return Const(QQi(1 if e.name == w else 0))
    if t is Neg:
        return neg(_d(e.arg, w, memo))
    if t is BinOp:
        a, b = e.left, e.right
        da, db = _d(a, w, memo), _d(b, w, memo)
        if e.op == "+":
            return add(da, db)
        if e.op == "-":
            return sub(da, db)
        if e.op == "*":
            return add(mul(da, b), mul(a, db))
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if t is Pow:
        n = e.exponent
        return mul(mul(const(n), power(e.base, n - 1)), _d(e.base, w, memo))
    if t is PiecewiseAtZero:
        return PiecewiseAtZero(_d(e.body, w, memo), Fraction(0))
    if t is Func:
        u = e.arg
        name = e.name
        du = _d(u, w, memo)
        if name in ("conj", "re", "im", "abs2", "logabs"):
            # derivative of conj(u) is conj of the dual derivative of u
            dcu = func("conj", _d(u, _DUAL[w], memo))
            if name == "conj":
                return dcu
            if name == "re":
                return mul(_HALF, add(du, dcu))
            if name == "im":
                return mul(_MINUS_HALF_I, sub(du, dcu))
            if name == "abs2":
                return add(mul(du, func("conj", u)), mul(u, dcu))
            return mul(_HALF, add(div(du, u), div(dcu, func("conj", u))))
        if _is_const(du, 0):
            return Const(QQi(0))
        if name == "exp":
            return mul(e, du)
        if name == "log":
            return div(du, u)
        if name == "sin":
            return mul(func("cos", u), du)
        if name == "cos":
            return neg(mul(func("sin", u), du))
        if name == "tan":
            return div(du, power(func("cos", u), 2))
    raise NotDifferentiable(f"cannot differentiate {e!r}")
