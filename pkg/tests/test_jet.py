from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from crgerm.expr import Const, Func, Var, parse
from crgerm.jet import (AtLeast, CutoffMismatch, Jet, NonzeroConstantTerm, NotInvertible, NotJetExpandable,
                        compose, invert, jet_of_expr, mul, real_part, vanishing_order, wirtinger_jet)
from crgerm.numbers import I, QQi
from strategies import jets, t_series

T = Jet.var("t", 10)
Z = Jet.var("z", 10)
ZB = Jet.var("zbar", 10)
V = Jet.var("v", 10)


def uni(coeffs, cutoff=10):
    return Jet.univariate(coeffs, cutoff)


# -- independent oracle: sympy Taylor expansion ----------------------------------

_z, _zb, _v, _eps = sp.symbols("z zb v eps")
_SP_FUN = {"exp": sp.exp, "log": sp.log, "sin": sp.sin, "cos": sp.cos, "tan": sp.tan}


def to_sympy(e, conj=False):
    """Translate an Expr (or its complex conjugate) with z, zbar independent."""
    if isinstance(e, Var):
        name = {"z": "zb", "zbar": "z"}.get(e.name, e.name) if conj else {"zbar": "zb"}.get(e.name, e.name)
        return {"z": _z, "zb": _zb, "v": _v}[name]
    if isinstance(e, Const):
        im = -e.value.im if conj else e.value.im
        return sp.Rational(e.value.re.numerator, e.value.re.denominator) + sp.I * sp.Rational(im.numerator, im.denominator)
    kind = type(e).__name__
    if kind == "Neg":
        return -to_sympy(e.arg, conj)
    if kind == "BinOp":
        a, b = to_sympy(e.left, conj), to_sympy(e.right, conj)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[e.op]
    if kind == "Pow":
        return to_sympy(e.base, conj) ** e.exponent
    if e.name in _SP_FUN:
        return _SP_FUN[e.name](to_sympy(e.arg, conj))
    if e.name == "conj":
        return to_sympy(e.arg, not conj)
    # re, im, abs2 and logabs are real, hence equal to their own conjugate
    u, uc = to_sympy(e.arg), to_sympy(e.arg, True)
    return {
        "re": (u + uc) / 2,
        "im": (u - uc) / (2 * sp.I),
        "abs2": u * uc,
        "logabs": sp.log(u * uc) / 2,
    }[e.name]


def sympy_jet(src, cutoff):
    e = to_sympy(parse(src))
    scaled = e.subs({_z: _eps * _z, _zb: _eps * _zb, _v: _eps * _v}, simultaneous=True)
    ser = sp.series(scaled, _eps, 0, cutoff + 1).removeO()
    poly = sp.Poly(sp.expand(ser.subs(_eps, 1)), _z, _zb, _v)
    out = {}
    for (a, b, c), coeff in poly.terms():
        re, im = sp.nsimplify(sp.re(coeff)), sp.nsimplify(sp.im(coeff))
        out[(a, b, c, 0)] = QQi(Fraction(str(re)), Fraction(str(im)))
    return out


@pytest.mark.parametrize("src", [
    "tan(im(z)^2)",
    "logabs(cos(im(z)^2))",
    "exp(v*re(z)) - 1",
    "sin(abs2(z) + v)*re(z)",
    "abs2(z)^2/(1 + re(z))",
    "log(1 + z*v) - conj(z)^2",
    "conj(i*im(z)^3 + z)*v",
])
def test_jet_of_expr_matches_sympy_series(src):
    got = jet_of_expr(parse(src), 6)
    assert got.terms == {e: c for e, c in sympy_jet(src, 6).items() if not c.is_zero()}


# -- examples ---------------------------------------------------------------------


def test_ring_examples():
    assert (uni({2: 1}) * uni({3: 1})).terms == uni({5: 1}).terms
    assert (Z + ZB) * (Z - ZB) == Z * Z - ZB * ZB
    x = uni({2: 1, 0: Fraction(-1, 2)})
    assert x * invert(x) == Jet.constant(1, 10)


def test_strict_mode_rejects_mixed_cutoffs():
    with pytest.raises(CutoffMismatch):
        mul(Jet.var("z", 4), Jet.var("z", 5), strict=True)
    assert mul(Jet.var("z", 4), Jet.var("z", 5)).cutoff == 4


def test_invert_examples():
    geometric = invert(uni({0: 1, 1: -1}))
    assert geometric.terms == uni({k: 1 for k in range(11)}).terms
    assert invert(uni({2: 1, 0: Fraction(-1, 2)})).terms == uni({0: -2, 2: -4, 4: -8, 6: -16, 8: -32, 10: -64}).terms
    with pytest.raises(NotInvertible):
        invert(T)


def test_compose_examples():
    assert compose(uni({2: 1}), uni({1: 1, 2: 1})).terms == uni({2: 1, 3: 2, 4: 1}).terms
    inner = uni({1: 3, 4: I})
    assert compose(T, inner) == inner
    g2 = invert(uni({2: 1, 0: Fraction(-1, 2)})) + 2
    assert compose(g2, T) == g2
    with pytest.raises(NonzeroConstantTerm):
        compose(uni({2: 1}), uni({0: 1, 1: 1}))


def test_vanishing_order_examples():
    assert vanishing_order(Jet.zero(8)) == AtLeast(9)
    g2 = invert(uni({2: 1, 0: Fraction(-1, 2)})) + 2
    assert vanishing_order(g2) == 2
    assert vanishing_order(uni({3: 1, 5: 2})) == 3


def test_real_part_examples():
    x = (Z * Z).scale(I)
    assert real_part(x) == ((Z * Z).scale(I) - (ZB * ZB).scale(I)).scale(Fraction(1, 2))
    r = real_part(x)
    assert real_part(r) is r
    y = (Z * V).scale(QQi(1, 1))
    assert real_part(y) == ((Z * V).scale(QQi(1, 1)) + (ZB * V).scale(QQi(1, -1))).scale(Fraction(1, 2))


def test_wirtinger_jet_examples():
    assert wirtinger_jet(Z**2 * ZB**2, "d/dz").terms == (Z * ZB**2).scale(2).terms
    assert wirtinger_jet(Z**3, "d/dzbar").is_zero()
    assert wirtinger_jet(real_part(Z**3), "z").terms == (Z**2).scale(Fraction(3, 2)).terms
    assert wirtinger_jet(Z**3, "z").cutoff == 9


def test_jet_of_expr_examples():
    im = (Z - ZB).scale(QQi(0, Fraction(-1, 2)))
    w = im * im
    expected = (w + (w**3).scale(Fraction(1, 3))).truncate(6)
    assert jet_of_expr(parse("tan(im(z)^2)"), 6).terms == expected.terms
    assert jet_of_expr(parse("abs2(z)^2"), 8).terms == (Z**2 * ZB**2).terms
    with pytest.raises(NotJetExpandable) as info:
        jet_of_expr(parse("exp(-1/abs2(z))"), 8)
    assert info.value.node is not None


def test_json_round_trip_and_ordering():
    x = (Z**2).scale(QQi(Fraction(1, 3), -2)) + V + Jet.constant(5, 10)
    obj = x.to_json_obj()
    assert [tuple(t[k] for k in "abcd") for t in obj["terms"]] == sorted(x.terms)
    assert Jet.from_json(x.to_json()) == x
    assert obj["terms"][0]["re"] == "5/1"


# -- properties -------------------------------------------------------------------

three = st.tuples(jets(), jets(), jets())


@settings(max_examples=1000, deadline=None)
@given(three)
def test_ring_axioms(xyz):
    x, y, w = xyz
    assert (x + y) + w == x + (y + w)
    assert x + y == y + x
    assert (x * y) * w == x * (y * w)
    assert x * y == y * x
    assert x * (y + w) == x * y + x * w


@settings(max_examples=300, deadline=None)
@given(jets(min_degree=1), jets(min_degree=1))
def test_vanishing_order_is_additive(x, y):
    nx, ny = x.vanishing_order(), y.vanishing_order()
    if isinstance(nx, int) and isinstance(ny, int) and nx + ny <= x.cutoff:
        assert (x * y).vanishing_order() == nx + ny


@settings(max_examples=200, deadline=None)
@given(t_series(cutoff=7), t_series(cutoff=7), t_series(cutoff=7))
def test_compose_is_associative(f, g, h):
    assert compose(compose(f, g), h) == compose(f, compose(g, h))


@settings(max_examples=300, deadline=None)
@given(jets())
def test_conjugation_and_real_part(x):
    assert x.conj().conj() == x
    r = real_part(x)
    assert r.is_real()
    assert real_part(r) == r
    assert r + (x.imag_part()).scale(I) == x


@settings(max_examples=1000, deadline=None)
@given(jets(), st.sampled_from([1, -2, QQi(1, 1), Fraction(3, 7)]))
def test_invert_round_trip(x, c0):
    x = x - Jet.constant(x.constant_term(), x.cutoff) + Jet.constant(c0, x.cutoff)
    assert x * invert(x) == Jet.constant(1, x.cutoff)


@settings(max_examples=300, deadline=None)
@given(jets(), jets(), st.sampled_from(["z", "zbar", "v"]))
def test_wirtinger_product_rule(x, y, which):
    lhs = wirtinger_jet(x * y, which)
    rhs = wirtinger_jet(x, which) * y + x * wirtinger_jet(y, which)
    assert lhs.equal_up_to(rhs, x.cutoff - 1)


@settings(max_examples=300, deadline=None)
@given(jets())
def test_json_round_trip(x):
    assert Jet.from_json(x.to_json()) == x
