"""Truncated formal power series with exact Gaussian-rational coefficients.

A :class:`Jet` is a sparse map from exponent tuples ``(a, b, c, d)`` to
coefficients, standing for the monomial ``z^a zbar^b v^c t^d``, truncated at
total degree ``cutoff``.  ``v`` is a real variable (conjugation leaves it
alone) and ``t`` is the holomorphic parameter of curves.  Conjugation is
only defined for jets not involving ``t``; move a curve into the ``z`` slot
with :meth:`Jet.rename` when its conjugate is needed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .numbers import I, ONE, QQi, ZERO, frac_str

SLOTS = ("z", "zbar", "v", "t")
_SLOT_INDEX = {name: k for k, name in enumerate(SLOTS)}
INFINITE_CUTOFF = 1 << 30

Exponent = tuple[int, int, int, int]


class JetError(ValueError):
    pass


class CutoffMismatch(JetError):
    pass


class NotInvertible(JetError):
    pass


class NonzeroConstantTerm(JetError):
    pass


class NotJetExpandable(JetError):
    """The expression has no computable Taylor jet at the origin."""

    def __init__(self, node, reason: str = ""):
        from .expr import to_source

        text = to_source(node) if node is not None else "?"
        super().__init__(f"no Taylor jet for {text}" + (f": {reason}" if reason else ""))
        self.node = node
        self.reason = reason


@dataclass(frozen=True, order=True)
class AtLeast:
    """Vanishing order when every coefficient up to the cutoff is zero."""

    bound: int

    def __str__(self):
        return f">={self.bound}"


VanishingOrder = int | AtLeast


def _deg(e: Exponent) -> int:
    return e[0] + e[1] + e[2] + e[3]


def _mask(e: Exponent) -> frozenset:
    return frozenset(SLOTS[k] for k in range(4) if e[k])


class Jet:
    __slots__ = ("cutoff", "terms", "variables", "real")

    def __init__(self, terms: Mapping[Exponent, QQi] | None = None, cutoff: int = 8,
                 variables: Iterable[str] = (), real: bool = False):
        if cutoff < 0:
            raise JetError("cutoff must be non-negative")
        clean: dict[Exponent, QQi] = {}
        mask = set(variables)
        for e, c in (terms or {}).items():
            c = QQi.coerce(c)
            if c.is_zero() or _deg(e) > cutoff:
                continue
            clean[e] = c
            mask |= _mask(e)
        unknown = mask - set(SLOTS)
        if unknown:
            raise JetError(f"unknown jet variables {sorted(unknown)}")
        self.cutoff = cutoff
        self.terms = clean
        self.variables = frozenset(mask)
        self.real = real

    @classmethod
    def _raw(cls, terms, cutoff, variables, real=False) -> "Jet":
        j = cls.__new__(cls)
        j.cutoff = cutoff
        j.terms = terms
        j.variables = variables
        j.real = real
        return j

    # -- constructors ----------------------------------------------------
    @classmethod
    def constant(cls, c, cutoff: int) -> "Jet":
        c = QQi.coerce(c)
        return cls({(0, 0, 0, 0): c}, cutoff, real=c.is_real())

    @classmethod
    def zero(cls, cutoff: int) -> "Jet":
        return cls({}, cutoff, real=True)

    @classmethod
    def var(cls, name: str, cutoff: int) -> "Jet":
        e = [0, 0, 0, 0]
        e[_SLOT_INDEX[name]] = 1
        return cls({tuple(e): ONE}, cutoff, variables=(name,), real=name == "v")

    @classmethod
    def monomial(cls, exponent: Exponent, coeff, cutoff: int) -> "Jet":
        return cls({tuple(exponent): coeff}, cutoff)

    @classmethod
    def univariate(cls, coeffs: Mapping[int, object] | list, cutoff: int, slot: str = "t") -> "Jet":
        """Series ``sum c_k s^k`` in one slot; ``coeffs`` is a list or {k: c_k}."""
        items = enumerate(coeffs) if isinstance(coeffs, list) else coeffs.items()
        k0 = _SLOT_INDEX[slot]
        terms = {}
        for k, c in items:
            e = [0, 0, 0, 0]
            e[k0] = k
            terms[tuple(e)] = c
        return cls(terms, cutoff, variables=(slot,))

    # -- basic queries ---------------------------------------------------
    def coeff(self, exponent) -> QQi:
        return self.terms.get(tuple(exponent), ZERO)

    def constant_term(self) -> QQi:
        return self.terms.get((0, 0, 0, 0), ZERO)

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self) -> bool:
        """Check ``coeff(a,b,c,d) == conj(coeff(b,a,c,d))`` for every term."""
        for (a, b, c, d), co in self.terms.items():
            if d:
                return False
            if self.terms.get((b, a, c, d), ZERO) != co.conjugate():
                return False
        return True

    def degree_range(self) -> tuple[int, int] | None:
        if not self.terms:
            return None
        degs = [_deg(e) for e in self.terms]
        return min(degs), max(degs)

    def vanishing_order(self) -> VanishingOrder:
        if not self.terms:
            return AtLeast(self.cutoff + 1)
        return min(_deg(e) for e in self.terms)

    def homogeneous_part(self, degree: int) -> "Jet":
        return Jet._raw({e: c for e, c in self.terms.items() if _deg(e) == degree},
                        self.cutoff, self.variables, self.real)

    def truncate(self, cutoff: int) -> "Jet":
        cutoff = min(cutoff, self.cutoff)
        return Jet._raw({e: c for e, c in self.terms.items() if _deg(e) <= cutoff},
                        cutoff, self.variables, self.real)

    def with_cutoff(self, cutoff: int) -> "Jet":
        """Declare a larger cutoff (only valid when the data is known exactly, e.g. polynomials)."""
        return Jet._raw(dict(self.terms), cutoff, self.variables, self.real)

    def sorted_terms(self):
        return sorted(self.terms.items())

    # -- ring operations -------------------------------------------------
    def _combine(self, other: "Jet", sign: int) -> "Jet":
        n = min(self.cutoff, other.cutoff)
        out = {e: c for e, c in self.terms.items() if _deg(e) <= n}
        for e, c in other.terms.items():
            if _deg(e) > n:
                continue
            s = out.get(e)
            val = (c if sign > 0 else -c) if s is None else (s + c if sign > 0 else s - c)
            if val.is_zero():
                out.pop(e, None)
            else:
                out[e] = val
        return Jet._raw(out, n, self.variables | other.variables, self.real and other.real)

    def __add__(self, other):
        if not isinstance(other, Jet):
            try:
                other = Jet.constant(other, self.cutoff)
            except TypeError:
                return NotImplemented
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet):
            try:
                other = Jet.constant(other, self.cutoff)
            except TypeError:
                return NotImplemented
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Jet._raw({e: -c for e, c in self.terms.items()}, self.cutoff, self.variables, self.real)

    def scale(self, c) -> "Jet":
        c = QQi.coerce(c)
        if c.is_zero():
            return Jet._raw({}, self.cutoff, self.variables, True)
        return Jet._raw({e: v * c for e, v in self.terms.items()}, self.cutoff, self.variables,
                        self.real and c.is_real())

    def __mul__(self, other):
        if not isinstance(other, Jet):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        n = min(self.cutoff, other.cutoff)
        left = [(e, _deg(e), c) for e, c in self.terms.items()]
        right = sorted(((e, _deg(e), c) for e, c in other.terms.items()), key=lambda x: x[1])
        out: dict[Exponent, QQi] = {}
        for e1, d1, c1 in left:
            room = n - d1
            if room < 0:
                continue
            for e2, d2, c2 in right:
                if d2 > room:
                    break
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                prod = c1 * c2
                s = out.get(e)
                out[e] = prod if s is None else s + prod
        out = {e: c for e, c in out.items() if not c.is_zero()}
        return Jet._raw(out, n, self.variables | other.variables, self.real and other.real)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Jet":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return invert(self) ** (-k)
        result = Jet.constant(1, self.cutoff)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.cutoff == other.cutoff and self.terms == other.terms

    def __hash__(self):
        return hash((self.cutoff, frozenset(self.terms.items())))

    def equal_up_to(self, other: "Jet", cutoff: int | None = None) -> bool:
        n = min(self.cutoff, other.cutoff) if cutoff is None else cutoff
        return self.truncate(n).terms == other.truncate(n).terms

    # -- conjugation and real parts -------------------------------------
    def conj(self) -> "Jet":
        if "t" in self.variables and any(e[3] for e in self.terms):
            raise JetError("conjugate of a t-jet is undefined; rename t to z first")
        out = {(b, a, c, d): co.conjugate() for (a, b, c, d), co in self.terms.items()}
        mask = set(self.variables)
        if "z" in mask or "zbar" in mask:
            mask |= {"z", "zbar"}
        return Jet._raw(out, self.cutoff, frozenset(mask), self.real)

    def real_part(self) -> "Jet":
        if self.real:
            return self
        out = (self + self.conj()).scale(Fraction(1, 2))
        out.real = True
        return out

    def imag_part(self) -> "Jet":
        out = (self - self.conj()).scale(QQi(0, Fraction(-1, 2)))
        out.real = True
        return out

    # -- calculus --------------------------------------------------------
    def derivative(self, which: str) -> "Jet":
        """Term-by-term derivative in one slot; the cutoff drops by one."""
        k = _SLOT_INDEX[{"d/dz": "z", "d/dzbar": "zbar", "d/dv": "v", "d/dt": "t"}.get(which, which)]
        if self.cutoff == 0:
            return Jet._raw({}, 0, self.variables, True)
        out = {}
        for e, c in self.terms.items():
            p = e[k]
            if not p:
                continue
            e2 = list(e)
            e2[k] -= 1
            out[tuple(e2)] = c * p
        return Jet._raw(out, self.cutoff - 1, self.variables, False)

    def divide_by(self, slot: str) -> "Jet":
        """Exact division by a variable; every term must contain it."""
        k = _SLOT_INDEX[slot]
        out = {}
        for e, c in self.terms.items():
            if not e[k]:
                raise JetError(f"jet is not divisible by {slot}")
            e2 = list(e)
            e2[k] -= 1
            out[tuple(e2)] = c
        return Jet._raw(out, max(self.cutoff - 1, 0), self.variables, self.real and slot == "v")

    def rename(self, src: str, dst: str) -> "Jet":
        """Move slot ``src`` onto slot ``dst`` (which must be unused)."""
        i, j = _SLOT_INDEX[src], _SLOT_INDEX[dst]
        out = {}
        for e, c in self.terms.items():
            if e[j]:
                raise JetError(f"slot {dst} already in use")
            e2 = list(e)
            e2[j], e2[i] = e[i], 0
            out[tuple(e2)] = c
        mask = (self.variables - {src}) | ({dst} if src in self.variables else set())
        return Jet._raw(out, self.cutoff, frozenset(mask), False)

    def substitute(self, images: Mapping[str, "Jet"]) -> "Jet":
        """Replace slots by jets with zero constant term (exact truncated composition)."""
        for name, img in images.items():
            if not img.constant_term().is_zero():
                raise NonzeroConstantTerm(f"image of {name} has a nonzero constant term")
        cut = INFINITE_CUTOFF
        orders = []
        for name, img in images.items():
            cut = min(cut, img.cutoff)
            nu = img.vanishing_order()
            orders.append(nu if isinstance(nu, int) else img.cutoff + 1)
        # unknown terms of self start at degree cutoff+1 and map to degree >= (cutoff+1)*min order
        used = [k for k, name in enumerate(SLOTS) if name not in images and any(e[k] for e in self.terms)]
        if used:
            orders.append(1)
        min_order = min(orders) if orders else 1
        cut = min(cut, (self.cutoff + 1) * min_order - 1)

        per_slot = []
        for k, name in enumerate(SLOTS):
            img = images.get(name)
            if img is None:
                img = Jet.var(name, cut)
            per_slot.append(img.truncate(cut))
        power_cache: list[dict[int, Jet]] = [{0: Jet.constant(1, cut), 1: s} for s in per_slot]

        def pw(k: int, p: int) -> Jet:
            cache = power_cache[k]
            if p not in cache:
                cache[p] = pw(k, p - 1) * per_slot[k]
            return cache[p]

        acc: dict[Exponent, QQi] = {}
        mask: set = set()
        for e, c in self.terms.items():
            term = None
            for k in range(4):
                if e[k]:
                    f = pw(k, e[k])
                    term = f if term is None else term * f
            if term is None:
                term = Jet.constant(1, cut)
            if term.is_zero():
                continue
            mask |= term.variables
            for ee, cc in term.terms.items():
                val = cc * c
                s = acc.get(ee)
                acc[ee] = val if s is None else s + val
        acc = {e: c for e, c in acc.items() if not c.is_zero() and _deg(e) <= cut}
        return Jet._raw(acc, cut, frozenset(mask | _mask_of(acc)), False)

    # -- serialization ----------------------------------------------------
    def to_json_obj(self) -> dict:
        return {
            "cutoff": self.cutoff,
            "terms": [
                {"a": e[0], "b": e[1], "c": e[2], "d": e[3], "re": frac_str(c.re), "im": frac_str(c.im)}
                for e, c in self.sorted_terms()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Jet":
        terms = {}
        for t in obj["terms"]:
            terms[(t["a"], t["b"], t["c"], t["d"])] = QQi(Fraction(t["re"]), Fraction(t["im"]))
        j = cls(terms, obj["cutoff"])
        j.real = j.is_real()
        return j

    @classmethod
    def from_json(cls, text: str) -> "Jet":
        return cls.from_json_obj(json.loads(text))

    # -- display ----------------------------------------------------------
    def __repr__(self):
        if not self.terms:
            return f"Jet(0, cutoff={self.cutoff})"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                f"{SLOTS[k]}^{e[k]}" if e[k] > 1 else SLOTS[k] for k in range(4) if e[k]
            )
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        return f"Jet({' + '.join(parts)}, cutoff={self.cutoff})"


def _mask_of(terms) -> frozenset:
    out: set = set()
    for e in terms:
        out |= _mask(e)
    return frozenset(out)


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def _check_strict(x: Jet, y: Jet, strict: bool):
    if strict and x.cutoff != y.cutoff:
        raise CutoffMismatch(f"cutoffs {x.cutoff} and {y.cutoff} differ")


def add(x: Jet, y: Jet, strict: bool = False) -> Jet:
    _check_strict(x, y, strict)
    return x + y


def sub(x: Jet, y: Jet, strict: bool = False) -> Jet:
    _check_strict(x, y, strict)
    return x - y


def mul(x: Jet, y: Jet, strict: bool = False) -> Jet:
    _check_strict(x, y, strict)
    return x * y


def invert(x: Jet) -> Jet:
    """Multiplicative inverse up to the cutoff (Neumann series around the constant)."""
    c0 = x.constant_term()
    if c0.is_zero():
        raise NotInvertible("constant term is zero")
    n = x.cutoff
    inv0 = ONE / c0
    # x = c0 (1 + w), 1/x = inv0 * sum (-w)^k
    w = (x - c0).scale(inv0)
    nu = w.vanishing_order()
    result = Jet.constant(inv0, n)
    if isinstance(nu, int):
        term = Jet.constant(1, n)
        neg_w = -w
        for _ in range(n // nu):
            term = term * neg_w
            if term.is_zero():
                break
            result = result + term.scale(inv0)
    result.real = x.real
    return result


def compose(outer: Jet, inner: Jet) -> Jet:
    """Substitute ``inner`` for ``t`` in the univariate series ``outer``."""
    if any(e[0] or e[1] or e[2] for e in outer.terms):
        raise JetError("outer series must be univariate in t")
    return outer.substitute({"t": inner})


def vanishing_order(x: Jet) -> VanishingOrder:
    return x.vanishing_order()


def real_part(x: Jet) -> Jet:
    return x.real_part()


def wirtinger_jet(x: Jet, which: str) -> Jet:
    return x.derivative(which)


def times_vanishing(f: Jet, q: Jet) -> Jet:
    """f * q where f is known exactly to its cutoff and has no constant term.

    Missing terms of q (degree > q.cutoff) only reach degree > q.cutoff + ord(f),
    so the product is valid ord(f) degrees beyond the cutoff of q.
    """
    nu = f.vanishing_order()
    if not isinstance(nu, int):
        return Jet.zero(f.cutoff)
    return f * q.with_cutoff(min(q.cutoff + nu, INFINITE_CUTOFF))


# ---------------------------------------------------------------------------
# elementary series
# ---------------------------------------------------------------------------


def _series(w: Jet, coeffs) -> Jet:
    """``sum coeffs[k] w^k`` for ``w`` without constant term, by Horner's rule."""
    n = w.cutoff
    nu = w.vanishing_order()
    kmax = n // nu if isinstance(nu, int) else 0
    result = Jet.constant(coeffs(kmax), n)
    for k in range(kmax - 1, -1, -1):
        result = result * w + coeffs(k)
    return result


def exp_series(w: Jet) -> Jet:
    return _series(w, lambda k: Fraction(1, math.factorial(k)))


def sin_series(w: Jet) -> Jet:
    return _series(w, lambda k: 0 if k % 2 == 0 else Fraction((-1) ** (k // 2), math.factorial(k)))


def cos_series(w: Jet) -> Jet:
    return _series(w, lambda k: 0 if k % 2 else Fraction((-1) ** (k // 2), math.factorial(k)))


def log1p_series(w: Jet) -> Jet:
    return _series(w, lambda k: 0 if k == 0 else Fraction((-1) ** (k + 1), k))


# ---------------------------------------------------------------------------
# expressions -> jets
# ---------------------------------------------------------------------------


def jet_of_expr(e, cutoff: int) -> Jet:
    """Exact Taylor jet at the origin of an expression in z, zbar, v.

    Elementary functions must be applied to arguments whose value at the
    origin keeps the coefficients rational (0 for exp/sin/cos/tan, 1 for
    log, modulus 1 for logabs); anything else, in particular flat functions
    such as ``exp(-1/abs2(z))``, raises :class:`NotJetExpandable`.
    """
    out = _jet(e, cutoff, {})
    out.real = out.is_real()
    return out


def _jet(e, n: int, memo: dict) -> Jet:
    from . import expr as X

    key = id(e)
    hit = memo.get(key)
    if hit is not None and hit[0] is e:
        return hit[1]
    t = type(e)
    if t is X.Const:
        out = Jet.constant(e.value, n)
    elif t is X.Var:
        out = Jet.var(e.name, n)
    elif t is X.Neg:
        out = -_jet(e.arg, n, memo)
    elif t is X.BinOp:
        a = _jet(e.left, n, memo)
        b = _jet(e.right, n, memo)
        if e.op == "+":
            out = a + b
        elif e.op == "-":
            out = a - b
        elif e.op == "*":
            out = a * b
        else:
            if b.constant_term().is_zero():
                raise NotJetExpandable(e, "denominator vanishes at the origin")
            out = a * invert(b)
    elif t is X.Pow:
        b = _jet(e.base, n, memo)
        if e.exponent < 0 and b.constant_term().is_zero():
            raise NotJetExpandable(e, "negative power of a function vanishing at the origin")
        out = b**e.exponent
    elif t is X.Func:
        out = _jet_func(e, _jet(e.arg, n, memo))
    elif t is X.PiecewiseAtZero:
        out = _jet(e.body, n, memo)
        if out.constant_term() != QQi(e.origin_value):
            raise NotJetExpandable(e, "origin value disagrees with the body's limit")
    else:
        raise TypeError(f"not an expression: {e!r}")
    memo[key] = (e, out)
    return out


def _jet_func(e, u: Jet) -> Jet:
    name = e.name
    if name == "conj":
        return u.conj()
    if name == "re":
        return u.real_part()
    if name == "im":
        return u.imag_part()
    if name == "abs2":
        out = u * u.conj()
        out.real = True
        return out
    c0 = u.constant_term()
    if name in ("exp", "sin", "cos", "tan"):
        if not c0.is_zero():
            raise NotJetExpandable(e, f"{name} of an argument not vanishing at the origin")
        if name == "exp":
            return exp_series(u)
        if name == "sin":
            return sin_series(u)
        if name == "cos":
            return cos_series(u)
        return sin_series(u) * invert(cos_series(u))
    if name == "log":
        if c0 != 1:
            raise NotJetExpandable(e, "log of an argument not equal to 1 at the origin")
        return log1p_series(u - 1)
    if name == "logabs":
        m = u * u.conj()
        if m.constant_term() != 1:
            raise NotJetExpandable(e, "logabs of an argument whose modulus is not 1 at the origin")
        out = log1p_series(m - 1).scale(Fraction(1, 2))
        out.real = True
        return out
    raise NotJetExpandable(e, f"unsupported function {name}")


def harmonic_monomials(x: Jet, min_degree: int = 1) -> list[Exponent]:
    """Exponents of pure z^k or zbar^k terms (no v, no t) of degree >= ``min_degree``."""
    out = []
    for e in sorted(x.terms):
        a, b, c, d = e
        if c or d:
            continue
        if (a == 0) != (b == 0) and a + b >= min_degree:
            out.append(e)
    return out


__all__ = [
    "AtLeast", "CutoffMismatch", "I", "Jet", "JetError", "NonzeroConstantTerm", "NotInvertible",
    "NotJetExpandable", "SLOTS", "VanishingOrder", "add", "compose", "cos_series", "exp_series",
    "harmonic_monomials", "invert", "jet_of_expr", "log1p_series", "mul", "real_part", "sin_series",
    "sub", "times_vanishing", "vanishing_order", "wirtinger_jet",
]
