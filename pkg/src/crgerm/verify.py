"""Built-in reference germs and the self-verification suite behind ``verify-examples``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .germ import Germ, make_germ, sample_surface
from .numbers import I
from .tangency import (ROTATION, OnlyZeroField, RotationFamily, VectorField, classify_rotations,
                       residual_numeric)
from .typeanalysis import CounterexampleSpec, build_counterexample, compose_curve

# Tangent to the field z1 z2^2 d/dz1 + i z2 d/dz2 although Q(., 0) has harmonic terms.
TANGENT_EXAMPLE = {
    "name": "tan-example",
    "P": "exp(-1/abs2(z) + im(z^2)/2 - logabs(cos(im(z)^2)))",
    "P_origin_value": "0",
    "Q": "tan(im(z)^2)",
    "domain_radius": 1.0,
}
TANGENT_EXAMPLE_FIELD = VectorField({(1, 2): 1}, {(0, 1): I})

FLAT = {"name": "flat", "P": "exp(-1/abs2(z))", "P_origin_value": "0", "Q": "0"}
FLAT_TILTED = {"name": "flat-tilted", "P": "exp(-1/abs2(z) + im(z^2)/2)", "P_origin_value": "0", "Q": "0"}


def germ(spec: dict, **kw) -> Germ:
    return make_germ(spec["P"], spec.get("Q", "0"), name=spec["name"],
                     domain_radius=spec.get("domain_radius", 1.0),
                     p_origin_value=spec.get("P_origin_value"), **kw)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def check_g_table() -> Check:
    cx = build_counterexample(CounterexampleSpec(6, cutoff=24))
    bad = []
    for n in range(2, 7):
        g = cx.g_jets[n]
        a = cx.a[n]
        for d in range(1, 25):
            c = g.coeff((0, 0, 0, d))
            want = -1 / a ** (d // n + 1) if d % n == 0 else 0
            if c != want:
                bad.append((n, d))
        if g.vanishing_order() != n:
            bad.append((n, "order"))
    return Check("g_n Taylor table", not bad, f"mismatches: {bad}" if bad else "n=2..6 through degree 24")


def check_curve_orders() -> Check:
    cx = build_counterexample(CounterexampleSpec(10, cutoff=12))
    orders = {N: compose_curve(cx.germ, cx.curves[N]).vanishing_order() for N in range(2, 9)}
    ok = all(orders[N] == N + 1 for N in orders)
    return Check("contact orders of phi_N", ok, ", ".join(f"N={N}:{o}" for N, o in orders.items()))


def check_prime_derivatives() -> Check:
    cx = build_counterexample(CounterexampleSpec(7, cutoff=12))
    got = {n: cx.derivative_table[n][n] for n in (2, 3, 5, 7)}
    ok = all(got[n] == Fraction(-math.factorial(n) * n**n, 8) for n in got)
    return Check("n-th derivative of f_n", ok, ", ".join(f"n={n}:{v}" for n, v in got.items()))


def check_tangent_example() -> Check:
    g = germ(TANGENT_EXAMPLE)
    sample = sample_surface(g, np.linspace(0.01, 0.5, 50), 40, np.linspace(-0.1, 0.1, 5))
    rep = residual_numeric(g, TANGENT_EXAMPLE_FIELD, sample)
    ok = rep.count >= 10_000 and rep.max_abs_residual <= 1e-11
    return Check("worked example tangency", ok, f"{rep.count} points, max residual {rep.max_abs_residual:.3e}")


def check_classifier() -> Check:
    pos = classify_rotations(germ(FLAT))
    neg = classify_rotations(germ(FLAT_TILTED))
    ok = (isinstance(pos, RotationFamily) and pos.residual_confirmation <= 1e-14
          and isinstance(neg, OnlyZeroField))
    return Check("rotation classifier", ok, f"flat: {pos.name}, tilted: {neg.name}")


def check_rotation_residual() -> Check:
    g = germ(FLAT)
    rep = residual_numeric(g, ROTATION, sample_surface(g, [0.5, 0.25, 0.1], 32, [-0.05, 0.0, 0.05]))
    return Check("rotation field on the flat germ", rep.max_abs_residual <= 1e-15,
                 f"max residual {rep.max_abs_residual:.3e}")


ALL_CHECKS = (check_g_table, check_curve_orders, check_prime_derivatives, check_tangent_example,
              check_classifier, check_rotation_residual)


def verify_all() -> list[Check]:
    return [c() for c in ALL_CHECKS]
