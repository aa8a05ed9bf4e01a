"""Holomorphic vector fields tangent to a germ.

A field ``H = h1 d/dz1 + h2 d/dz2`` is tangent when ``Re(H rho) = 0`` on M.
On M one has ``z1 = i v - P(z2) - v Q(z2, v)`` with ``v = Im z1``, so the
condition becomes a real-analytic identity in ``(v, z2)``.  This module
evaluates the identity numerically, expands it exactly as a jet, solves
the linear system for the coefficients of h1, h2, and decides the
rotationally symmetric cases where no jet information exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import mpmath
import numpy as np

from . import expr as X
from .expr import EvalSingularity, Expr, evaluate_mp, wirtinger
from .germ import Germ, JetGerm, SurfacePoint, germ_jets, rho_gradients, sample_surface
from .jet import INFINITE_CUTOFF, Jet, NotJetExpandable, times_vanishing
from .linalg import nullspace, nullspace_float, rank
from .numbers import I, QQi, frac_str
from .typeanalysis import InfiniteAtJetScale, infinite_type_check

Index = tuple[int, int]


class ZeroJetRefusal(ValueError):
    """The P jet vanishes through the cutoff; use the classifier instead."""


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    """``h1 = sum a_jk z1^j z2^k``, ``h2 = sum b_jk z1^j z2^k`` with a_00 = b_00 = 0."""

    h1: Mapping[Index, QQi] = field(default_factory=dict)
    h2: Mapping[Index, QQi] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("h1", "h2"):
            clean = {}
            for (j, k), c in getattr(self, name).items():
                c = QQi.coerce(c) if not isinstance(c, complex) else QQi(Fraction(c.real), Fraction(c.imag))
                if c.is_zero():
                    continue
                if j < 0 or k < 0:
                    raise ValueError("exponents must be non-negative")
                if (j, k) == (0, 0):
                    raise ValueError("the field must vanish at the origin (constant term given)")
                clean[(int(j), int(k))] = c
            object.__setattr__(self, name, dict(sorted(clean.items())))

    def is_zero(self) -> bool:
        return not self.h1 and not self.h2

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(_add_maps(self.h1, other.h1), _add_maps(self.h2, other.h2))

    def scale(self, c) -> "VectorField":
        c = QQi.coerce(c)
        return VectorField({k: v * c for k, v in self.h1.items()}, {k: v * c for k, v in self.h2.items()})

    def evaluate(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        return _poly(self.h1, z1, z2), _poly(self.h2, z1, z2)

    def to_json_obj(self) -> dict:
        def terms(m):
            return [{"j": j, "k": k, "re": frac_str(c.re), "im": frac_str(c.im)} for (j, k), c in m.items()]

        return {"a": terms(self.h1), "b": terms(self.h2)}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "VectorField":
        def terms(items):
            return {(t["j"], t["k"]): QQi(Fraction(str(t.get("re", 0))), Fraction(str(t.get("im", 0)))) for t in items}

        return cls(terms(obj.get("a", [])), terms(obj.get("b", [])))

    def __str__(self) -> str:
        def part(m, d):
            return [f"({c})*z1^{j}*z2^{k} {d}" for (j, k), c in m.items()]

        parts = part(self.h1, "d/dz1") + part(self.h2, "d/dz2")
        return " + ".join(parts) if parts else "0"


def _add_maps(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out[k] + v if k in out else v
    return out


def _poly(m: Mapping[Index, QQi], z1, z2):
    out = np.zeros(np.broadcast(z1, z2).shape, dtype=complex)
    for (j, k), c in m.items():
        out = out + complex(c) * z1**j * z2**k
    return out


ROTATION = VectorField({}, {(0, 1): I})


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TangencyReport:
    max_abs_residual: float
    count: int
    skipped: int
    worst: list[tuple[complex, complex, float]]
    points: tuple[np.ndarray, np.ndarray] = field(repr=False, compare=False, default=None)

    def to_json_obj(self) -> dict:
        return {
            "max_abs_residual": self.max_abs_residual,
            "count": self.count,
            "skipped": self.skipped,
            "worst": [{"z1": [a.real, a.imag], "z2": [b.real, b.imag], "residual": r} for a, b, r in self.worst],
        }


def residual_values(g: Germ, H: VectorField, z1, z2) -> np.ndarray:
    """Re(rho_z1 h1 + rho_z2 h2) at the given points (nan where singular)."""
    r1, r2 = rho_gradients(g, np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
    h1, h2 = H.evaluate(z1, z2)
    return np.real(r1 * h1 + r2 * h2)


def residual_numeric(g: Germ, H: VectorField, pts, n_worst: int = 5) -> TangencyReport:
    if hasattr(pts, "arrays"):
        z1, z2, _ = pts.arrays()
        pre_skipped = len(pts.skipped)
    else:
        pts = list(pts)
        z1 = np.array([p.z1 for p in pts], dtype=complex)
        z2 = np.array([p.z2 for p in pts], dtype=complex)
        pre_skipped = 0
    res = residual_values(g, H, z1, z2)
    ok = np.isfinite(res)
    absr = np.abs(np.where(ok, res, 0.0))
    order = np.argsort(-absr, kind="stable")[:n_worst]
    worst = [(complex(z1[i]), complex(z2[i]), float(res[i])) for i in order if ok[i]]
    return TangencyReport(
        float(absr.max()) if ok.any() else 0.0,
        int(ok.sum()),
        int((~ok).sum()) + pre_skipped,
        worst,
        (z1[ok], z2[ok]),
    )


def _gradient_jets(p: Jet, q: Jet):
    """Jets of z1 on M, rho_z1 and rho_z2 as functions of (z2, zbar2, v)."""
    v = Jet.var("v", INFINITE_CUTOFF)
    minus_half_i = QQi(0, Fraction(-1, 2))
    z1 = v.scale(I) - p - times_vanishing(v, q)
    rho1 = Jet.constant(Fraction(1, 2), INFINITE_CUTOFF) + q.scale(minus_half_i)
    rho1 = rho1 + times_vanishing(v, q.derivative("v")).scale(minus_half_i)
    rho2 = p.derivative("z") + times_vanishing(v, q.derivative("z"))
    return z1, rho1, rho2


class _MonomialCache:
    def __init__(self, z1: Jet, cutoff: int):
        self.z1 = z1.truncate(cutoff)
        self.z2 = Jet.var("z", cutoff)
        self.cut = cutoff
        self.p1 = {0: Jet.constant(1, cutoff)}
        self.p2 = {0: Jet.constant(1, cutoff)}

    def _pow(self, cache, base, n):
        if n not in cache:
            cache[n] = self._pow(cache, base, n - 1) * base
        return cache[n]

    def __call__(self, j: int, k: int) -> Jet:
        return self._pow(self.p1, self.z1, j) * self._pow(self.p2, self.z2, k)


def _jets_for(g, K: int) -> tuple[Jet, Jet]:
    p, q = germ_jets(g, K + 1) if isinstance(g, Germ) else germ_jets(g)
    return p, q


def residual_jet(g, H: VectorField, K: int) -> Jet:
    """Exact jet through total degree K of Re(H rho) restricted to M, in (z2, zbar2, v)."""
    p, q = _jets_for(g, K)
    z1, rho1, rho2 = _gradient_jets(p, q)
    mono = _MonomialCache(z1, K + 1)
    h1 = Jet.zero(K + 1)
    for (j, k), c in H.h1.items():
        h1 = h1 + mono(j, k).scale(c)
    h2 = Jet.zero(K + 1)
    for (j, k), c in H.h2.items():
        h2 = h2 + mono(j, k).scale(c)
    return (rho1 * h1 + rho2 * h2).real_part().truncate(K)


# ---------------------------------------------------------------------------
# solving for tangent fields
# ---------------------------------------------------------------------------


def field_unknowns(D: int) -> list[tuple[str, Index, str]]:
    """Real unknowns in solver order: a before b, (j, k) lexicographic, Re before Im."""
    idx = [(j, k) for j in range(D + 1) for k in range(D + 1) if 1 <= j + k <= D]
    return [(h, jk, part) for h in ("a", "b") for jk in idx for part in ("re", "im")]


@dataclass(frozen=True)
class FieldSolution:
    basis: list[VectorField]
    K: int
    D: int
    exact: bool

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def coordinates(self) -> list[list[Fraction]]:
        return [field_vector(H, self.D) for H in self.basis]

    def contains(self, H: VectorField) -> bool:
        rows = self.coordinates()
        return rank(rows + [field_vector(H, self.D)]) == rank(rows)

    def to_json_obj(self) -> dict:
        return {
            "K": self.K,
            "D": self.D,
            "dimension": self.dimension,
            "exact": self.exact,
            "basis": [H.to_json_obj() for H in self.basis],
        }


def field_vector(H: VectorField, D: int) -> list[Fraction]:
    out = []
    for h, jk, part in field_unknowns(D):
        c = (H.h1 if h == "a" else H.h2).get(jk, QQi(0))
        out.append(c.re if part == "re" else c.im)
    return out


def _field_from_vector(x, D: int) -> VectorField:
    h1: dict = {}
    h2: dict = {}
    for (h, jk, part), val in zip(field_unknowns(D), x):
        target = h1 if h == "a" else h2
        c = target.get(jk, QQi(0))
        target[jk] = c + (QQi(val) if part == "re" else QQi(0, val))
    return VectorField(h1, h2)


def solve_tangent_fields(g, K: int = 8, D: int = 2, method: str = "exact") -> FieldSolution:
    """All fields of degree <= D whose tangency residual vanishes through order K.

    This is the space of K-jet-tangent fields, which contains every genuinely
    tangent field and shrinks as K grows.
    """
    if not (K >= D >= 1):
        raise ValueError("need K >= D >= 1")
    p, q = _jets_for(g, K)
    if p.is_zero():
        raise ZeroJetRefusal(
            f"P jet is zero through order {p.cutoff}; jet tangency is meaningless here, use the classifier"
        )
    z1, rho1, rho2 = _gradient_jets(p, q)
    mono = _MonomialCache(z1, K + 1)
    columns: list[Jet] = []
    for h, (j, k), part in field_unknowns(D):
        grad = rho1 if h == "a" else rho2
        m = grad * mono(j, k)
        if part == "im":
            m = m.scale(I)
        columns.append(m.real_part().truncate(K))
    monomials = sorted({e for col in columns for e in col.terms})
    rows = []
    for e in monomials:
        re_row = [col.coeff(e).re for col in columns]
        im_row = [col.coeff(e).im for col in columns]
        rows.append(re_row)
        rows.append(im_row)
    n = len(columns)
    if method == "exact":
        vectors = nullspace(rows, n)
        exact = True
    elif method == "float":
        ns = nullspace_float(np.array(rows, dtype=float).reshape(len(rows), n))
        vectors = [[Fraction(float(x)).limit_denominator(10**6) for x in row] for row in ns]
        exact = False
    else:
        raise ValueError(f"unknown method {method!r}")
    basis = [_field_from_vector(x, D) for x in vectors]
    if exact:
        for H in basis:
            if not residual_jet(g, H, K).is_zero():
                raise ArithmeticError(f"basis field {H} fails re-verification")
    return FieldSolution(basis, K, D, exact)


def solution_contained(inner: FieldSolution, outer: FieldSolution) -> bool:
    """Is span(inner) a subspace of span(outer)?  Exact rank comparison."""
    if inner.D != outer.D:
        raise ValueError("solutions must share the degree bound")
    a = outer.coordinates()
    return rank(a + inner.coordinates()) == rank(a)


# ---------------------------------------------------------------------------
# rotational symmetry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Symmetric:
    deviation: float
    rotation_derivative: float

    symmetric = True


@dataclass(frozen=True)
class Asymmetric:
    """Failing grid: ``witness`` maximises |Re(i z R_z)|, ``deviation_witness`` maximises |R - R(|z|)|."""

    deviation: float
    rotation_derivative: float
    witness: complex
    deviation_witness: complex

    symmetric = False

    def to_json_obj(self) -> dict:
        return {
            "deviation": self.deviation,
            "rotation_derivative": self.rotation_derivative,
            "witness": [self.witness.real, self.witness.imag],
            "deviation_witness": [self.deviation_witness.real, self.deviation_witness.imag],
        }


def _circle(r, angles: int):
    r = mpmath.mpf(r)
    return [(2 * mpmath.pi * k / angles, r * mpmath.expj(2 * mpmath.pi * k / angles)) for k in range(angles)]


def rotational_symmetry_check(R: Expr, radii: Iterable[float], angles: int = 16, tol: float = 1e-10,
                              dps: int = 40):
    """Test R(z) = R(|z|) and Re(i z R_z) = 0 on circles, each scaled by max |R| on that circle.

    The scaling keeps the test meaningful for flat R, whose values near 0 are
    far below any absolute tolerance.
    """
    R_z = wirtinger(R, "z")
    worst_dev = (0.0, None)
    worst_rot = (0.0, None)
    with mpmath.workdps(dps):
        for r in radii:
            pts = _circle(r, angles)
            on_axis = evaluate_mp(R, mpmath.mpc(r), dps=dps)
            vals = []
            rots = []
            for _, z in pts:
                val = evaluate_mp(R, z, dps=dps)
                vals.append(val)
                rots.append(mpmath.re(1j * z * evaluate_mp(R_z, z, dps=dps)))
            scale = max(abs(x) for x in vals)
            if scale == 0:
                continue
            for (th, z), val, rot in zip(pts, vals, rots):
                d = float(abs(val - on_axis) / scale)
                t = float(abs(rot) / scale)
                if d > worst_dev[0]:
                    worst_dev = (d, complex(z))
                if t > worst_rot[0]:
                    worst_rot = (t, complex(z))
    if worst_dev[0] <= tol and worst_rot[0] <= tol:
        return Symmetric(worst_dev[0], worst_rot[0])
    return Asymmetric(worst_dev[0], worst_rot[0], worst_rot[1] if worst_rot[1] is not None else worst_dev[1],
                      worst_dev[1] if worst_dev[1] is not None else worst_rot[1])


@dataclass(frozen=True)
class SignScan:
    kind: str  # "identically_zero", "sign_change" or "constant_sign"
    theta_plus: float | None = None
    theta_minus: float | None = None
    max_abs: float = 0.0


def sign_change_scan(R: Expr, r: float, angles: int = 64, tol: float = 1e-12) -> SignScan:
    """Classify Re(i z R_z) on |z| = r: it should vanish identically or change sign."""
    R_z = wirtinger(R, "z")
    vals = []
    scale = mpmath.mpf(0)
    with mpmath.workdps(40):
        for th, z in _circle(r, angles):
            vals.append((float(th), mpmath.re(1j * z * evaluate_mp(R_z, z, dps=40))))
            scale = max(scale, abs(evaluate_mp(R, z, dps=40)))
        top = max(vals, key=lambda p: p[1])
        bottom = min(vals, key=lambda p: p[1])
        biggest = max(abs(top[1]), abs(bottom[1]))
        ref = scale if scale > 0 else mpmath.mpf(1)
        if biggest <= tol * ref:
            return SignScan("identically_zero", max_abs=float(biggest))
        if top[1] > tol * ref and bottom[1] < -tol * ref:
            return SignScan("sign_change", top[0], bottom[0], float(biggest))
        return SignScan("constant_sign", top[0] if top[1] > 0 else None,
                        bottom[0] if bottom[1] < 0 else None, float(biggest))


# ---------------------------------------------------------------------------
# the classifier
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OnlyZeroField:
    asymmetry: Asymmetric
    part: str
    name = "OnlyZeroField"


@dataclass(frozen=True)
class RotationFamily:
    residual_confirmation: float
    sample_count: int
    name = "RotationFamily"


@dataclass(frozen=True)
class HypothesisViolation:
    failed: list[str]
    evidence: dict
    name = "HypothesisViolation"


Classification = OnlyZeroField | RotationFamily | HypothesisViolation


def default_radii(g: Germ) -> tuple[float, ...]:
    return tuple(g.domain_radius * s for s in (0.5, 0.25, 0.125, 0.0625))


def check_hypotheses(g: Germ, strict: bool = True) -> tuple[list[str], dict]:
    from .germ import q_harmonic_free

    failed = []
    hyp = g.hypotheses
    if not hyp.positivity_checked:
        failed.append("positivity")
    decision = infinite_type_check(g)
    if not isinstance(decision, InfiniteAtJetScale):
        failed.append("infinite_order")
    q_free, q_evidence = q_harmonic_free(g.Q, g.cutoff, strict=strict)
    if q_free is not True:
        failed.append("q_harmonic_free")
    from .typeanalysis import decision_to_json

    evidence = {
        "positivity": hyp.positivity_evidence,
        "infinite_order": decision_to_json(decision),
        "q_harmonic_free": q_evidence,
    }
    return failed, evidence


def classify_rotations(g: Germ, strict: bool = True, radii: Iterable[float] | None = None, angles: int = 16,
                      v_samples: Iterable[float] = (-0.05, 0.05), tol: float = 1e-10) -> Classification:
    """Only the zero field, or the real multiples of i*z2 d/dz2, are tangent (given the hypotheses)."""
    failed, evidence = check_hypotheses(g, strict)
    if failed:
        return HypothesisViolation(failed, evidence)
    radii = tuple(radii) if radii is not None else default_radii(g)
    check = rotational_symmetry_check(g.P, radii, angles, tol)
    if not check.symmetric:
        return OnlyZeroField(check, "P")
    if X.variables(g.Q):
        for v in v_samples:
            check = rotational_symmetry_check(X.substitute_v(g.Q, Fraction(repr(v))), radii, angles, tol)
            if not check.symmetric:
                return OnlyZeroField(check, f"Q(.,{v})")
    sample = sample_surface(g, radii, angles, tuple(v_samples) + (0.0,))
    report = residual_numeric(g, ROTATION, sample)
    return RotationFamily(report.max_abs_residual, report.count)


def classification_to_json(c: Classification) -> dict:
    out: dict = {"verdict": c.name}
    if isinstance(c, HypothesisViolation):
        out["violated"] = c.failed
        out["hypotheses"] = c.evidence
        out["rotation_family"] = False
    elif isinstance(c, RotationFamily):
        out["rotation_family"] = True
        out["residual_confirmation"] = c.residual_confirmation
        out["sample_count"] = c.sample_count
    else:
        out["rotation_family"] = False
        out["asymmetric_part"] = c.part
        out["asymmetry"] = c.asymmetry.to_json_obj()
    return out
