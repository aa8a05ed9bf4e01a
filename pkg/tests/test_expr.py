import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crgerm.expr import (BinOp, Const, EvalSingularity, ExprSyntaxError, Func, Neg, PiecewiseAtZero, Pow,
                         UnknownIdentifier, Var, evaluate, evaluate_array, evaluate_mp, parse, to_source,
                         wirtinger)
from crgerm.numbers import QQi

# Smooth away from the origin; used for the finite-difference checks.
FIXTURES = [
    "abs2(z)^2",
    "re(z^3) + abs2(z)^4",
    "tan(im(z)^2)",
    "exp(-1/abs2(z))",
    "exp(-1/abs2(z) + im(z^2)/2 - logabs(cos(im(z)^2)))",
    "im(z^2)",
    "abs2(z) + im(z^2)/10",
    "v*tan(im(z)^2) + v^2*re(z)",
    "conj(z)^3*z - 2*i*zbar",
    "sin(z)*cos(zbar) + log(1 + abs2(z))",
    "logabs(1 + z^2) * exp(i*v)",
]
HOLOMORPHIC = ["z^3 - 2*z", "exp(z)", "sin(z)*cos(z)", "tan(z)", "log(1 + z)", "z^-2", "exp(z^2)/(1 + z)"]


def smooth_points(n=100, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.2, 0.8, n)
    th = rng.uniform(0, 2 * np.pi, n)
    v = rng.uniform(-0.1, 0.1, n)
    return list(zip(r * np.exp(1j * th), v))


def finite_difference(e, which, z, v, h=1e-5):
    if which == "v":
        return (evaluate(e, z, v + h) - evaluate(e, z, v - h)) / (2 * h)
    fx = (evaluate(e, z + h, v) - evaluate(e, z - h, v)) / (2 * h)
    fy = (evaluate(e, z + 1j * h, v) - evaluate(e, z - 1j * h, v)) / (2 * h)
    return 0.5 * (fx - 1j * fy) if which == "z" else 0.5 * (fx + 1j * fy)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), 1e-3)


# -- parsing ----------------------------------------------------------------


def test_parse_tan_example():
    assert parse("tan(im(z)^2)") == Func("tan", Pow(Func("im", Var("z")), 2))


def test_parse_atoms_and_rationals():
    assert parse("z") == Var("z")
    assert parse("3/4") == Const(QQi(3) / 4)
    assert parse("2 + 3*i") == Const(QQi(2, 3))


def test_precedence():
    assert parse("-z^2") == Neg(Pow(Var("z"), 2))
    assert parse("z + zbar*v") == BinOp("+", Var("z"), BinOp("*", Var("zbar"), Var("v")))
    assert parse("z - zbar - v") == BinOp("-", BinOp("-", Var("z"), Var("zbar")), Var("v"))


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        parse("foo(z)")
    assert info.value.offset == 1


@pytest.mark.parametrize("src, offset", [("z +", 4), ("(z", 3), ("z ^ 1.5", 5), ("exp(z, z)", 6)])
def test_syntax_errors_report_byte_offset(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse(src)
    assert info.value.offset == offset


_leaf = st.one_of(
    st.sampled_from([Var("z"), Var("zbar"), Var("v")]),
    st.builds(lambda a, b: Const(QQi(a, b)), st.integers(-3, 3), st.integers(-2, 2)),
)
_expr = st.recursive(
    _leaf,
    lambda sub: st.one_of(
        st.builds(Neg, sub),
        st.builds(BinOp, st.sampled_from("+-*"), sub, sub),
        st.builds(Pow, sub, st.integers(0, 3)),
        st.builds(Func, st.sampled_from(["exp", "sin", "cos", "re", "im", "conj", "abs2"]), sub),
    ),
    max_leaves=8,
)


@settings(max_examples=300)
@given(_expr)
def test_print_parse_round_trip(e):
    s1 = to_source(parse(to_source(e)))
    assert to_source(parse(s1)) == s1
    z, v = 0.3 + 0.2j, 0.1
    a, b = evaluate(e, z, v), evaluate(parse(to_source(e)), z, v)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


# -- evaluation --------------------------------------------------------------


def test_tan_example_vanishes_at_origin():
    assert evaluate(parse("tan(im(z)^2)"), 0) == 0


def test_worked_example_value():
    e = parse("exp(-1/abs2(z) + im(z^2)/2 - log(cos(im(z)^2)))")
    expected = math.exp(-4) / math.cos(0.25)
    assert abs(evaluate(e, 0.5j) - expected) <= 1e-15
    assert abs(expected - 0.0189033) < 1e-7


def test_singularity_carries_node_and_point():
    with pytest.raises(EvalSingularity) as info:
        evaluate(parse("1/abs2(z)"), 0)
    assert info.value.point == (0j, 0.0)
    assert to_source(info.value.node) in ("1/abs2(z)", "abs2(z)")


def test_piecewise_origin_value():
    p = PiecewiseAtZero(parse("exp(-1/abs2(z))"), 0)
    assert evaluate(p, 0) == 0
    arr = evaluate_array(p, np.array([0, 0.5]))
    assert arr[0] == 0 and abs(arr[1] - math.exp(-4)) < 1e-16


def test_array_backend_marks_singular_points_nan():
    out = evaluate_array(parse("1/abs2(z)"), np.array([0, 2]))
    assert np.isnan(out[0]) and out[1] == 0.25


def test_mp_backend_does_not_underflow():
    val = evaluate_mp(parse("exp(-1/abs2(z))"), 2.0**-20)
    assert val.imag == 0 and 0 < val.real < 1e-300


# -- Wirtinger calculus --------------------------------------------------------


def test_simple_derivatives():
    assert wirtinger(parse("abs2(z)"), "d/dz") == parse("conj(z)")
    assert wirtinger(parse("z"), "d/dzbar") == Const(QQi(0))


def test_flat_derivative_closed_form():
    d = wirtinger(parse("exp(-1/abs2(z))"), "z")
    z = 0.3 + 0.1j
    closed = cmath.exp(-1 / (z * z.conjugate())) / (z**2 * z.conjugate())
    assert abs(evaluate(d, z) - closed) <= 1e-14 * abs(closed)
    assert rel_err(closed, finite_difference(parse("exp(-1/abs2(z))"), "z", z, 0.0)) <= 1e-6


@pytest.mark.parametrize("src", FIXTURES)
@pytest.mark.parametrize("which", ["z", "zbar", "v"])
def test_wirtinger_matches_finite_differences(src, which):
    e = parse(src)
    d = wirtinger(e, which)
    for z, v in smooth_points():
        assert rel_err(evaluate(d, z, v), finite_difference(e, which, z, v)) <= 1e-6


@pytest.mark.parametrize("src", HOLOMORPHIC)
def test_holomorphic_fixtures_have_zero_dzbar(src):
    d = wirtinger(parse(src), "zbar")
    for z, v in smooth_points():
        assert abs(evaluate(d, z, v)) <= 1e-12


@pytest.mark.parametrize("a, b", [("abs2(z)", "tan(im(z)^2)"), ("exp(zbar)", "re(z^3)*v"), ("z^2", "logabs(1+z)")])
def test_product_rule(a, b):
    ea, eb = parse(a), parse(b)
    for which in ("z", "zbar"):
        lhs = wirtinger(ea * eb, which)
        rhs = wirtinger(ea, which) * eb + ea * wirtinger(eb, which)
        for z, v in smooth_points(20):
            x, y = evaluate(lhs, z, v), evaluate(rhs, z, v)
            assert abs(x - y) <= 1e-10 * max(1.0, abs(x))


@pytest.mark.parametrize("src", FIXTURES[:6])
def test_conjugation_duality(src):
    e = parse(src)
    lhs = wirtinger(Func("conj", e), "z")
    rhs = Func("conj", wirtinger(e, "zbar"))
    for z, v in smooth_points(20):
        assert abs(evaluate(lhs, z, v) - evaluate(rhs, z, v)) <= 1e-12 * max(1.0, abs(evaluate(rhs, z, v)))
