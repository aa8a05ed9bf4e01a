"""Hypersurface germs ``Re z1 + P(z2) + (Im z1) Q(z2, Im z1) = 0``.

A :class:`Germ` keeps P and Q as expressions (the source of truth), derives
their symbolic gradients once, and produces exact jets on demand.  The
hypotheses used by the classifiers are recorded together with the numerical
evidence behind them, since several of them (positivity, infinite-order
vanishing) can only be sampled, never proved, from finite data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import mpmath
import numpy as np

from . import expr as X
from .expr import EvalSingularity, Expr, PiecewiseAtZero, evaluate, evaluate_array, evaluate_mp, wirtinger
from .jet import Jet, NotJetExpandable, harmonic_monomials, jet_of_expr

DEFAULT_CUTOFF = 12


class GermInvalid(ValueError):
    def __init__(self, failures: list[str]):
        super().__init__("; ".join(failures))
        self.failures = failures


@dataclass(frozen=True)
class HypothesisRecord:
    positivity_checked: bool
    positivity_evidence: dict
    infinite_order_flag: bool
    order_evidence: dict
    q_harmonic_free_flag: bool | None
    q_harmonic_evidence: dict

    def to_json_obj(self) -> dict:
        return {
            "positivity_checked": self.positivity_checked,
            "positivity_evidence": self.positivity_evidence,
            "infinite_order_flag": self.infinite_order_flag,
            "order_evidence": self.order_evidence,
            "q_harmonic_free_flag": self.q_harmonic_free_flag,
            "q_harmonic_evidence": self.q_harmonic_evidence,
        }


@dataclass(frozen=True)
class JetGerm:
    """A germ known only through its jets (e.g. the flat counterexample)."""

    p_jet: Jet
    q_jet: Jet | None = None
    name: str = "jet-germ"

    @property
    def cutoff(self) -> int:
        if self.q_jet is None:
            return self.p_jet.cutoff
        return min(self.p_jet.cutoff, self.q_jet.cutoff)

    def q(self) -> Jet:
        return self.q_jet if self.q_jet is not None else Jet.zero(self.p_jet.cutoff)

    def jets(self, cutoff: int | None = None) -> "JetGerm":
        if cutoff is None or cutoff >= self.cutoff:
            return self
        return JetGerm(self.p_jet.truncate(cutoff), self.q().truncate(cutoff), self.name)


@dataclass(frozen=True)
class Germ:
    name: str
    P: Expr
    Q: Expr
    domain_radius: float
    cutoff: int
    hypotheses: HypothesisRecord
    P_z: Expr = field(repr=False)
    Q_z: Expr = field(repr=False)
    Q_v: Expr = field(repr=False)
    _jets: dict = field(default_factory=dict, repr=False, compare=False)

    # -- jets -------------------------------------------------------------
    def p_jet(self, cutoff: int | None = None) -> Jet:
        return self._jet("P", cutoff)

    def q_jet(self, cutoff: int | None = None) -> Jet:
        return self._jet("Q", cutoff)

    def _jet(self, which: str, cutoff: int | None) -> Jet:
        n = self.cutoff if cutoff is None else cutoff
        key = (which, n)
        hit = self._jets.get(key)
        if hit is None:
            try:
                hit = jet_of_expr(self.P if which == "P" else self.Q, n)
            except NotJetExpandable as exc:
                hit = exc
            self._jets[key] = hit
        if isinstance(hit, Exception):
            raise hit
        return hit

    def has_jets(self) -> bool:
        try:
            self.p_jet()
            self.q_jet()
        except NotJetExpandable:
            return False
        return True

    def jets(self, cutoff: int | None = None) -> JetGerm:
        return JetGerm(self.p_jet(cutoff), self.q_jet(cutoff), self.name)

    def to_json_obj(self) -> dict:
        out = {"name": self.name, "P": X.to_source(self.P), "Q": X.to_source(self.Q),
               "domain_radius": self.domain_radius, "cutoff": self.cutoff}
        if isinstance(self.P, PiecewiseAtZero):
            out["P_origin_value"] = str(self.P.origin_value)
        return out


@dataclass(frozen=True)
class SurfacePoint:
    z1: complex
    z2: complex
    v: float


@dataclass
class SurfaceSample:
    """Points of M plus the grid nodes that had to be skipped."""

    points: list[SurfacePoint]
    skipped: list[tuple[complex, float, str]]

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k):
        return self.points[k]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        z1 = np.array([p.z1 for p in self.points], dtype=complex)
        z2 = np.array([p.z2 for p in self.points], dtype=complex)
        v = np.array([p.v for p in self.points], dtype=float)
        return z1, z2, v


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def _as_expr(e) -> Expr:
    return X.parse(e) if isinstance(e, str) else e


def _real_sample_points(radius: float):
    pts = []
    for r in (radius * 0.9, radius * 0.5, radius * 0.1):
        for k in range(8):
            z = r * complex(math.cos(2 * math.pi * (k + 0.3) / 8), math.sin(2 * math.pi * (k + 0.3) / 8))
            for v in (-0.05, 0.0, 0.05):
                pts.append((z, v))
    return pts


def positivity_grid(radius: float, angles: int = 16) -> list[complex]:
    """Log-radial grid r = 2^-k (k >= 1, r < radius) with ``angles`` directions."""
    pts = []
    for k in range(1, 21):
        r = 2.0**-k
        if r >= radius:
            continue
        for a in range(angles):
            th = 2 * math.pi * a / angles
            pts.append(r * complex(math.cos(th), math.sin(th)))
    return pts


def check_positivity(P: Expr, radius: float, angles: int = 16) -> tuple[bool, dict]:
    worst = None
    failures = []
    pts = positivity_grid(radius, angles)
    for z in pts:
        try:
            val = evaluate_mp(P, z)
        except EvalSingularity:
            failures.append({"z": [z.real, z.imag], "reason": "singular"})
            continue
        re_val = float(mpmath.re(val)) if abs(val) > 0 else 0.0
        if not mpmath.re(val) > 0:
            failures.append({"z": [z.real, z.imag], "value": re_val})
            continue
        lg = float(mpmath.log10(mpmath.re(val)))
        if worst is None or lg < worst:
            worst = lg
    evidence = {
        "grid": f"r=2^-k (k=1..20, r<{radius}), {angles} angles",
        "points": len(pts),
        "min_log10_value": worst,
        "failures": failures[:5],
        "failure_count": len(failures),
    }
    return not failures and bool(pts), evidence


def piecewise_consistent(p: PiecewiseAtZero, tol: float = 1e-8, angles: int = 8) -> bool:
    """|body - origin_value| decays to within ``tol`` along r = 2^-k, k = 4..20."""
    devs = []
    for k in range(4, 21):
        r = 2.0**-k
        zs = r * np.exp(2j * np.pi * np.arange(angles) / angles)
        vals = evaluate_array(p.body, zs)
        if np.any(np.isnan(vals)):
            return False
        devs.append(float(np.max(np.abs(vals - float(p.origin_value)))))
    tail = devs[-8:]
    monotone = all(b <= a * (1 + 1e-9) + 1e-300 for a, b in zip(tail, tail[1:]))
    return devs[-1] <= tol and monotone


def _piecewise_nodes(e: Expr):
    if isinstance(e, PiecewiseAtZero):
        yield e
    for c in X.children(e):
        yield from _piecewise_nodes(c)


def make_germ(P, Q="0", *, name: str = "germ", domain_radius: float = 1.0, cutoff: int = DEFAULT_CUTOFF,
              p_origin_value=None, P_jet: Jet | None = None, Q_jet: Jet | None = None,
              strict: bool = True) -> Germ:
    """Validate the normalization of P and Q and collect hypothesis evidence.

    ``strict`` selects how hypothesis (3) on Q(., 0) is checked: no pure
    z^N / zbar^N monomial at all (strict), or only none at the lowest
    order of Q(., 0) (lenient).
    """
    from .typeanalysis import estimate_order

    P = _as_expr(P)
    Q = _as_expr(Q)
    if p_origin_value is not None and not isinstance(P, PiecewiseAtZero):
        P = PiecewiseAtZero(P, Fraction(str(p_origin_value)))

    failures: list[str] = []
    if "v" in X.variables(P):
        failures.append("P must not depend on v")
    samples = _real_sample_points(domain_radius)
    if not X.is_real_valued(P, samples):
        failures.append("P is not real-valued")
    if not X.is_real_valued(Q, samples):
        failures.append("Q is not real-valued")

    try:
        p0 = evaluate(P, 0)
        if abs(p0) > 1e-12:
            failures.append(f"P(0) = {p0} != 0")
    except EvalSingularity:
        failures.append("P(0) is undefined (wrap the body with an origin value)")
    try:
        q0 = evaluate(Q, 0, 0)
        if abs(q0) > 1e-12:
            failures.append(f"Q(0,0) = {q0} != 0")
    except EvalSingularity:
        failures.append("Q(0,0) is undefined")

    P_z = wirtinger(P, "z")
    Q_z = wirtinger(Q, "z")
    Q_v = wirtinger(Q, "v")

    p_jet = None
    try:
        p_jet = jet_of_expr(P, cutoff)
    except NotJetExpandable:
        pass
    if p_jet is not None:
        low = [e for e in p_jet.terms if sum(e) <= 1]
        if low:
            failures.append("dP(0) != 0" if any(sum(e) == 1 for e in low) else "P(0) != 0")
    else:
        for which in ("z", "zbar"):
            try:
                d0 = evaluate(wirtinger(P, which), 0)
            except EvalSingularity:
                failures.append(f"dP/d{which}(0) is undefined")
                continue
            if abs(d0) > 1e-12:
                failures.append(f"dP(0) != 0 (d/d{which} = {d0})")
        for node in _piecewise_nodes(P):
            if not piecewise_consistent(node):
                failures.append(f"piecewise body {X.to_source(node.body)} does not tend to its origin value")
        for node in _piecewise_nodes(P_z):
            if not piecewise_consistent(node):
                failures.append("dP/dz does not tend to 0 at the origin")
    if P_jet is not None and p_jet is not None:
        n = min(P_jet.cutoff, p_jet.cutoff)
        if not P_jet.equal_up_to(p_jet, n):
            failures.append("supplied P_jet disagrees with the Taylor jet of P")
    q_jet = None
    try:
        q_jet = jet_of_expr(Q, cutoff)
    except NotJetExpandable:
        pass
    if Q_jet is not None and q_jet is not None:
        if not Q_jet.equal_up_to(q_jet, min(Q_jet.cutoff, q_jet.cutoff)):
            failures.append("supplied Q_jet disagrees with the Taylor jet of Q")
    if failures:
        raise GermInvalid(failures)

    positive, pos_evidence = check_positivity(P, domain_radius)
    estimate = estimate_order(P)
    order_evidence = estimate.to_json_obj()
    infinite = estimate.infinite
    if p_jet is not None:
        order_evidence["jet_order"] = str(p_jet.vanishing_order())
        infinite = infinite and p_jet.is_zero()
    q_free, q_evidence = q_harmonic_free(Q, cutoff, strict=strict)

    hyp = HypothesisRecord(positive, pos_evidence, infinite, order_evidence, q_free, q_evidence)
    g = Germ(name, P, Q, float(domain_radius), cutoff, hyp, P_z, Q_z, Q_v)
    if p_jet is not None:
        g._jets[("P", cutoff)] = p_jet
    if q_jet is not None:
        g._jets[("Q", cutoff)] = q_jet
    return g


def q_harmonic_free(Q: Expr, cutoff: int, strict: bool = True) -> tuple[bool | None, dict]:
    """Does the jet of Q(., 0) avoid pure harmonic monomials z^N, zbar^N?"""
    q0 = X.substitute_v(Q, 0)
    try:
        jet = jet_of_expr(q0, cutoff)
    except NotJetExpandable as exc:
        return None, {"mode": "strict" if strict else "lenient", "reason": str(exc)}
    harmonic = harmonic_monomials(jet)
    evidence: dict[str, Any] = {
        "mode": "strict" if strict else "lenient",
        "cutoff": cutoff,
        "harmonic_monomials": [[e[0], e[1]] for e in harmonic],
        "order": str(jet.vanishing_order()),
    }
    if strict:
        return not harmonic, evidence
    nu = jet.vanishing_order()
    if not isinstance(nu, int):
        return True, evidence
    return (nu, 0, 0, 0) not in jet.terms, evidence


def germ_jets(g, cutoff: int | None = None) -> tuple[Jet, Jet]:
    """(P jet, Q jet) of a :class:`Germ` or :class:`JetGerm`."""
    if isinstance(g, JetGerm):
        j = g.jets(cutoff)
        return j.p_jet, j.q()
    return g.p_jet(cutoff), g.q_jet(cutoff)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def rho_eval(g: Germ, z1, z2):
    """Re z1 + P(z2) + (Im z1) Q(z2, Im z1); scalar or numpy arrays."""
    if np.ndim(z1) or np.ndim(z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        v = z1.imag
        return z1.real + evaluate_array(g.P, z2).real + v * evaluate_array(g.Q, z2, v).real
    z1 = complex(z1)
    v = z1.imag
    return z1.real + evaluate(g.P, z2).real + v * evaluate(g.Q, z2, v).real


def rho_gradients(g: Germ, z1, z2):
    """Wirtinger derivatives (d rho/dz1, d rho/dz2).

    d(Im z1)/dz1 = 1/(2i), so the z1-derivative of Q(z2, Im z1) is Q_v/(2i).
    """
    half_over_i = -0.5j
    if np.ndim(z1) or np.ndim(z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        v = z1.imag
        q = evaluate_array(g.Q, z2, v).real
        qv = evaluate_array(g.Q_v, z2, v).real
        r1 = 0.5 + half_over_i * q + v * half_over_i * qv
        r2 = evaluate_array(g.P_z, z2) + v * evaluate_array(g.Q_z, z2, v)
        return r1, r2
    z1 = complex(z1)
    v = z1.imag
    q = evaluate(g.Q, z2, v).real
    qv = evaluate(g.Q_v, z2, v).real
    r1 = 0.5 + half_over_i * q + v * half_over_i * qv
    r2 = evaluate(g.P_z, z2) + v * evaluate(g.Q_z, z2, v)
    return r1, r2


def sample_surface(g: Germ, z2_radii, angles: int, v_values) -> SurfaceSample:
    """Points (-(P + vQ) + iv, z2) with z2 = r e^{i theta} on the (r, theta, v) grid."""
    z2s = []
    vs = []
    for r in z2_radii:
        if r == 0:
            thetas = [0.0]
        else:
            thetas = [2 * math.pi * k / angles for k in range(angles)]
        for th in thetas:
            z2 = r * complex(math.cos(th), math.sin(th)) if r else 0j
            for v in v_values:
                z2s.append(z2)
                vs.append(float(v))
    z2a = np.array(z2s, dtype=complex)
    va = np.array(vs, dtype=float)
    p = evaluate_array(g.P, z2a)
    q = evaluate_array(g.Q, z2a, va)
    z1a = -(p.real + va * q.real) + 1j * va
    rho = rho_eval(g, z1a, z2a) if len(z2a) else np.zeros(0)
    points: list[SurfacePoint] = []
    skipped: list[tuple[complex, float, str]] = []
    for k in range(len(z2a)):
        if np.isnan(p[k]) or np.isnan(q[k]):
            skipped.append((complex(z2a[k]), float(va[k]), "singular"))
            continue
        z1 = complex(z1a[k])
        if not abs(rho[k]) <= 1e-12 * (1 + abs(z1)):
            skipped.append((complex(z2a[k]), float(va[k]), "off-surface"))
            continue
        points.append(SurfacePoint(z1, complex(z2a[k]), float(va[k])))
    return SurfaceSample(points, skipped)


# ---------------------------------------------------------------------------
# germ files
# ---------------------------------------------------------------------------


def load_germ_file(path, *, cutoff: int | None = None, strict: bool = True) -> Germ:
    """Read ``{name, P, P_origin_value?, Q, domain_radius, cutoff?}`` from JSON or TOML."""
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        data = tomllib.loads(raw.decode("utf-8"))
    else:
        data = json.loads(raw)
    return germ_from_dict(data, cutoff=cutoff, strict=strict)


def germ_from_dict(data: dict, *, cutoff: int | None = None, strict: bool = True) -> Germ:
    if "P" not in data:
        raise GermInvalid(["germ file has no P"])
    n = cutoff if cutoff is not None else int(data.get("cutoff", DEFAULT_CUTOFF))
    return make_germ(
        data["P"],
        data.get("Q", "0"),
        name=str(data.get("name", "germ")),
        domain_radius=float(data.get("domain_radius", 1.0)),
        cutoff=n,
        p_origin_value=data.get("P_origin_value"),
        strict=strict,
    )
