"""The nine acceptance criteria, one test each; conftest prints a PASS/FAIL line per criterion."""

import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from crgerm.expr import evaluate, parse, wirtinger
from crgerm.germ import make_germ, sample_surface
from crgerm.jet import Jet, harmonic_monomials, jet_of_expr
from crgerm.numbers import QQi
from crgerm.tangency import (ROTATION, OnlyZeroField, RotationFamily, VectorField, classify_rotations,
                             residual_jet, residual_numeric, solution_contained, solve_tangent_fields)
from crgerm.typeanalysis import (CounterexampleSpec, build_counterexample, compose_curve, contact_ratio,
                                 dangelo_probe, estimate_order, g_series, shear_normalize)
from crgerm.verify import TANGENT_EXAMPLE, TANGENT_EXAMPLE_FIELD, germ
from strategies import gaussian, real_jets
from test_expr import FIXTURES, HOLOMORPHIC, finite_difference, rel_err, smooth_points


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


_t = sp.Symbol("t")


@pytest.mark.acceptance(1, "Taylor table of the shifted reciprocal series")
def test_criterion_1_taylor_table():
    with Stopwatch() as sw:
        for n in range(2, 7):
            a = Fraction(2, n**n)
            g = g_series(n, 24)
            oracle = sp.series(1 / (_t**n - sp.Rational(2, n**n)) + sp.Rational(n**n, 2), _t, 0, 25).removeO()
            for d in range(0, 25):
                want = Fraction(str(oracle.coeff(_t, d)))
                assert g.coeff((0, 0, 0, d)) == QQi(want)
            for k in range(1, 5):
                assert g.coeff((0, 0, 0, n * k)) == QQi(-1 / a ** (k + 1))
            assert g.vanishing_order() == n
    assert sw.elapsed < 1


def _numeric_contact_order(cx, N, radii=(mpmath.mpf(2) ** -12, mpmath.mpf(2) ** -13)):
    """Slope of log max|rho(curve(t))| against log |t|, evaluated at 80 digits."""
    curve = cx.curves[N]
    p, q = cx.germ.p_jet, cx.germ.q()

    def mp(c):
        return mpmath.mpc(mpmath.mpf(c.re.numerator) / c.re.denominator, mpmath.mpf(c.im.numerator) / c.im.denominator)

    def series(s, t):
        return sum(mp(c) * t ** e[3] for e, c in s.terms.items())

    def field(j, z, v):
        return sum(mp(c) * z ** e[0] * mpmath.conj(z) ** e[1] * v ** e[2] for e, c in j.terms.items())

    with mpmath.workdps(80):
        peaks = []
        for r in radii:
            best = 0
            for k in range(8):
                t = r * mpmath.expjpi(mpmath.mpf(k) / 4)
                z1, z2 = series(curve.z1_series, t), series(curve.z2_series, t)
                v = mpmath.im(z1)
                best = max(best, abs(mpmath.re(z1) + mpmath.re(field(p, z2, v)) + v * mpmath.re(field(q, z2, v))))
            peaks.append(best)
        return float(mpmath.log(peaks[0] / peaks[1]) / mpmath.log(radii[0] / radii[1]))


@pytest.mark.acceptance(2, "contact orders N+1 of the counterexample curves")
def test_criterion_2_contact_orders():
    with Stopwatch() as sw:
        cx = build_counterexample(CounterexampleSpec(10, cutoff=12))
        for N in range(2, 9):
            assert compose_curve(cx.germ, cx.curves[N]).vanishing_order() == N + 1
    assert sw.elapsed < 5
    # independent high-precision check of the same orders
    for N in range(2, 9):
        assert abs(_numeric_contact_order(cx, N) - (N + 1)) < 0.05


@pytest.mark.acceptance(3, "n-th z-derivative at 0 of the n-th bump term")
def test_criterion_3_prime_derivatives():
    with Stopwatch() as sw:
        cx = build_counterexample(CounterexampleSpec(7, cutoff=12))
        for n in (2, 3, 5, 7):
            got = cx.derivative_table[n][n]
            assert got == Fraction(-math.factorial(n) * n**n, 8)
            # Re g(z) = (g(z) + conj g(z)) / 2, and the conjugate part has no pure z-derivative
            g = 1 / (_t**n - sp.Rational(2, n**n)) + sp.Rational(n**n, 2)
            oracle = sp.diff(g, _t, n).subs(_t, 0) / 2 / n**n
            assert got == Fraction(str(oracle))
    assert sw.elapsed < 1


@pytest.mark.acceptance(4, "worked tangent field on the tangent-Q germ")
def test_criterion_4_worked_example():
    with Stopwatch() as sw:
        g = germ(TANGENT_EXAMPLE)
        sample = sample_surface(g, np.linspace(0.01, 0.5, 50), 40, np.linspace(-0.1, 0.1, 5))
        rep = residual_numeric(g, TANGENT_EXAMPLE_FIELD, sample)
        assert rep.count >= 10_000 and rep.skipped == 0
        assert rep.max_abs_residual <= 1e-11

        P, Q = parse(TANGENT_EXAMPLE["P"]), parse(TANGENT_EXAMPLE["Q"])
        P_z, Q_z = wirtinger(P, "z"), wirtinger(Q, "z")
        worst = 0.0
        for p in sample.points[::5]:
            z = p.z2
            q, q_z = evaluate(Q, z), evaluate(Q_z, z)
            e1 = (1j * z * q_z + (0.5j - q * q / 2j) * z * z).real
            e2 = (1j * z * evaluate(P_z, z) - (0.5 + q / 2j) * z * z * evaluate(P, z)).real
            worst = max(worst, abs(e1), abs(e2))
        assert worst <= 1e-12
    assert sw.elapsed < 10


@pytest.mark.acceptance(5, "rotation classifier: flat germ and tilted germ")
def test_criterion_5_classifier(flat_germ, tilted_germ):
    with Stopwatch() as sw:
        pos = classify_rotations(flat_germ)
        assert isinstance(pos, RotationFamily)
        assert pos.residual_confirmation <= 1e-14
        neg = classify_rotations(tilted_germ)
        assert isinstance(neg, OnlyZeroField)
        assert neg.asymmetry.witness is not None and neg.asymmetry.deviation > 0
    assert sw.elapsed < 5


@st.composite
def injected_jets(draw):
    base = draw(real_jets(cutoff=10, max_terms=4, min_degree=2, with_v=False))
    for j in draw(st.lists(st.integers(2, 10), min_size=1, max_size=3)):
        base = base + Jet.monomial((j, 0, 0, 0), draw(gaussian), 10).real_part()
    return base


@settings(max_examples=200, deadline=None, database=None)
@given(injected_jets())
def _normal_form_round_trip(p):
    nf = shear_normalize(p, 10)
    assert not harmonic_monomials(nf.transformed_P_jet, 2)
    for j in range(2, 11):
        assert nf.transformed_P_jet.coeff((j, 0, 0, 0)).is_zero()
        assert nf.transformed_P_jet.coeff((0, j, 0, 0)).is_zero()
    assert nf.inverse()[0] == p


@pytest.mark.acceptance(6, "shear normal form on random jets and the worked example")
def test_criterion_6_normal_form():
    _normal_form_round_trip()
    nf = shear_normalize(jet_of_expr(parse("re(z^2) + abs2(z)"), 10), 10)
    assert dict(nf.shear_coeffs)[2] == QQi(1)
    assert all(a.is_zero() for j, a in nf.shear_coeffs if j != 2)
    assert nf.transformed_P_jet == jet_of_expr(parse("abs2(z)"), 10)


@pytest.mark.acceptance(7, "exact tangent-field solver on |z|^2 and |z|^4")
def test_criterion_7_solver():
    with Stopwatch() as sw:
        for m in (1, 2):
            g = make_germ(f"abs2(z)^{m}")
            sol = solve_tangent_fields(g, 8, 2)
            assert sol.exact
            assert sol.contains(ROTATION)
            assert sol.contains(VectorField({(1, 0): 1}, {(0, 1): Fraction(1, 2 * m)}))
            for H in sol.basis:
                assert residual_jet(g, H, 8).is_zero()
            finer = solve_tangent_fields(g, 10, 2)
            assert solution_contained(finer, sol) and finer.dimension <= sol.dimension
    assert sw.elapsed < 10


@pytest.mark.acceptance(8, "type probe ratios, witnesses and order slopes")
def test_criterion_8_type_probe(flat_germ):
    cases = [(make_germ(f"abs2(z)^{m}"), 2 * m) for m in (1, 2, 3)]
    cases.append((make_germ("re(z^2) + abs2(z)^5"), 10))
    for g, ratio in cases:
        rep = dangelo_probe(g)
        assert not rep.infinite and rep.best_ratio == ratio
        assert contact_ratio(g, rep.witness).value == ratio
    for src, order in [("abs2(z)", 2), ("abs2(z)^2", 4), ("abs2(z)^3", 6), ("re(z^2) + abs2(z)^5", 2)]:
        assert abs(estimate_order(parse(src)).slope - order) <= 0.2
    assert estimate_order(flat_germ.P).infinite


@pytest.mark.acceptance(9, "Wirtinger derivatives against finite differences")
def test_criterion_9_calculus():
    for src in FIXTURES:
        e = parse(src)
        for which in ("z", "zbar", "v"):
            d = wirtinger(e, which)
            for z, v in smooth_points(100):
                assert rel_err(evaluate(d, z, v), finite_difference(e, which, z, v)) <= 1e-6
    for src in HOLOMORPHIC:
        d = wirtinger(parse(src), "zbar")
        for z, v in smooth_points(100):
            assert abs(evaluate(d, z, v)) <= 1e-12
