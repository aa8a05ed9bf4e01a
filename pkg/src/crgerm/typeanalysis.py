"""Contact orders of holomorphic curves, type decisions and shear normal forms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import mpmath

from .expr import EvalSingularity, Expr, evaluate_mp
from .germ import JetGerm, germ_jets
from .jet import INFINITE_CUTOFF, times_vanishing, AtLeast, Jet, JetError, NotJetExpandable, VanishingOrder, harmonic_monomials, invert
from .numbers import ONE, QQi, frac_str

# A polynomial curve is known exactly; its jets carry this cutoff.
EXACT = INFINITE_CUTOFF


class NotNormalizable(JetError):
    pass


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HoloCurve:
    z1_series: Jet
    z2_series: Jet

    def __post_init__(self):
        for name, s in (("z1", self.z1_series), ("z2", self.z2_series)):
            if any(e[0] or e[1] or e[2] for e in s.terms):
                raise ValueError(f"{name} series must be a series in t alone")
            if not s.constant_term().is_zero():
                raise ValueError(f"{name}(0) must be 0")
        if self.z1_series.is_zero() and self.z2_series.is_zero():
            raise ValueError("the constant curve has no vanishing order")

    @classmethod
    def polynomial(cls, z1: Mapping[int, object], z2: Mapping[int, object]) -> "HoloCurve":
        """Exact polynomial curve from ``{power: coefficient}`` maps."""
        return cls(Jet.univariate(dict(z1), EXACT), Jet.univariate(dict(z2), EXACT))

    @classmethod
    def monomial(cls, m: int | None, n: int | None) -> "HoloCurve":
        """(t^m, t^n); ``None`` (or 0) stands for an identically zero component."""
        return cls.polynomial({m: 1} if m else {}, {n: 1} if n else {})

    def order(self) -> int:
        orders = [s.vanishing_order() for s in (self.z1_series, self.z2_series) if not s.is_zero()]
        return min(orders)

    def key(self) -> tuple:
        """Sort key used to break ties: sorted exponents of each component."""
        return (tuple(sorted(e[3] for e in self.z1_series.terms)),
                tuple(sorted(e[3] for e in self.z2_series.terms)))

    def to_json_obj(self) -> dict:
        def series(s: Jet):
            return [{"k": e[3], "re": frac_str(c.re), "im": frac_str(c.im)} for e, c in s.sorted_terms()]

        out = {"z1": series(self.z1_series), "z2": series(self.z2_series)}
        cut = min(self.z1_series.cutoff, self.z2_series.cutoff)
        if cut < EXACT:
            out["cutoff"] = cut
        return out


def compose_curve(g, c: HoloCurve) -> Jet:
    """Jet of t -> rho(c(t)); slots z, zbar stand for t, tbar."""
    p_jet, q_jet = germ_jets(g)
    z1 = c.z1_series.rename("t", "z")
    z2 = c.z2_series.rename("t", "z")
    z2c = z2.conj()
    re_z1 = z1.real_part()
    v = z1.imag_part()
    p_comp = p_jet.substitute({"z": z2, "zbar": z2c})
    out = re_z1 + p_comp
    if not q_jet.is_zero():
        q_comp = q_jet.substitute({"z": z2, "zbar": z2c, "v": v})
        out = out + times_vanishing(v, q_comp)
    out = out.real_part() if not out.real else out
    return out


@dataclass(frozen=True)
class ContactRatio:
    rho_order: VanishingOrder
    curve_order: int

    @property
    def infinite(self) -> bool:
        return isinstance(self.rho_order, AtLeast)

    @property
    def value(self) -> Fraction | None:
        return None if self.infinite else Fraction(self.rho_order, self.curve_order)

    @property
    def lower_bound(self) -> Fraction:
        n = self.rho_order.bound if self.infinite else self.rho_order
        return Fraction(n, self.curve_order)


def contact_ratio(g, c: HoloCurve) -> ContactRatio:
    return ContactRatio(compose_curve(g, c).vanishing_order(), c.order())


# ---------------------------------------------------------------------------
# probing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeProbeReport:
    best_ratio: Fraction | None
    infinite: bool
    witness: HoloCurve
    lower_bound: Fraction
    probes_evaluated: int

    def to_json_obj(self) -> dict:
        return {
            "best_ratio": "Infinite" if self.infinite else frac_str(self.best_ratio),
            "lower_bound": frac_str(self.lower_bound),
            "witness_curve": self.witness.to_json_obj(),
            "probes_evaluated": self.probes_evaluated,
        }


def probe_family(g, degree_budget: int = 8) -> list[HoloCurve]:
    """Monomial curves up to ``degree_budget`` plus the shear-normal-form curves."""
    curves = []
    for k in range(1, degree_budget + 1):
        curves.append(HoloCurve.monomial(None, k))
        curves.append(HoloCurve.monomial(k, None))
        for n in range(1, degree_budget + 1):
            curves.append(HoloCurve.monomial(k, n))
    p_jet, q_jet = germ_jets(g)
    try:
        nf = shear_normalize(p_jet, p_jet.cutoff, q_jet if not q_jet.is_zero() else None)
    except NotNormalizable:
        nf = None
    if nf is not None:
        partial: dict[int, QQi] = {}
        for j, a in nf.shear_coeffs:
            if a.is_zero():
                continue
            partial[j] = -a
            curves.append(HoloCurve.polynomial(dict(partial), {1: 1}))
    seen = set()
    unique = []
    for cv in curves:
        k = (tuple(cv.z1_series.sorted_terms()), tuple(cv.z2_series.sorted_terms()))
        if k not in seen:
            seen.add(k)
            unique.append(cv)
    return unique


def dangelo_probe(g, degree_budget: int = 8) -> TypeProbeReport:
    """Best contact ratio over the probe family: a lower bound for the type.

    Infinite ratios (rho o curve vanishes through the jet ceiling) win over
    finite ones; ties go to the lexicographically smallest witness.
    """
    curves = probe_family(g, degree_budget)
    scored = []
    for cv in curves:
        r = contact_ratio(g, cv)
        rank = (1, Fraction(0)) if r.infinite else (0, r.value)
        scored.append((rank, cv.key(), r, cv))
    top = max(s[0] for s in scored)
    _, _, r, cv = min((s for s in scored if s[0] == top), key=lambda s: s[1])
    return TypeProbeReport(r.value, r.infinite, cv, r.lower_bound, len(curves))


# ---------------------------------------------------------------------------
# numeric order estimate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderEstimate:
    slope: float
    infinite: bool
    radii_exponents: tuple[int, ...]
    local_slopes: tuple[float, ...]
    loglog_slope: float | None = None

    def to_json_obj(self) -> dict:
        def f(x):
            return None if x is None else ("inf" if x == math.inf else round(x, 6))

        return {
            "slope": f(self.slope),
            "infinite": self.infinite,
            "radii": f"2^-{self.radii_exponents[0]}..2^-{self.radii_exponents[-1]}",
            "local_slopes": [f(s) for s in self.local_slopes],
            "loglog_slope": f(self.loglog_slope),
        }


def _lstsq_slope(xs, ys) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return float(sxy / sxx)


def estimate_order(e: Expr, angles: int = 16, k_min: int = 4, k_max: int = 20) -> OrderEstimate:
    """Slope of log max|e| against log r on r = 2^-k_min .. 2^-k_max.

    mpmath keeps exp(-1/r^2) representable far below double underflow, and
    for such flat functions the slope of log(-log max|e|) is kept as evidence.
    """
    ks = tuple(range(k_min, k_max + 1))
    logs_r = []
    logs_m = []
    with mpmath.workdps(30):
        for k in ks:
            r = mpmath.mpf(2) ** -k
            m = mpmath.mpf(0)
            for a in range(angles):
                th = 2 * mpmath.pi * a / angles
                z = complex(r * mpmath.cos(th), r * mpmath.sin(th))
                try:
                    val = abs(evaluate_mp(e, z))
                except EvalSingularity:
                    continue
                if val > m:
                    m = val
            if m == 0:
                return OrderEstimate(math.inf, True, ks, ())
            logs_r.append(mpmath.log(r))
            logs_m.append(mpmath.log(m))
        local = tuple(float((logs_m[i + 1] - logs_m[i]) / (logs_r[i + 1] - logs_r[i])) for i in range(len(ks) - 1))
        slope = _lstsq_slope(logs_r, logs_m)
        loglog = None
        if all(lm < 0 for lm in logs_m):
            loglog = _lstsq_slope(logs_r, [mpmath.log(-lm) for lm in logs_m])
            loglog = -loglog
    tail = local[-8:]
    growing = all(b > a for a, b in zip(tail, tail[1:]))
    return OrderEstimate(slope, slope > 50 and growing, ks, local, loglog)


# ---------------------------------------------------------------------------
# the type decision
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteOfOrder:
    order: int
    source: str = "jet"
    evidence: dict = field(default_factory=dict)

    name = "FiniteOfOrder"


@dataclass(frozen=True)
class InfiniteAtJetScale:
    evidence: dict

    name = "InfiniteAtJetScale"


@dataclass(frozen=True)
class HarmonicObstruction:
    monomials: tuple

    name = "HarmonicObstruction"


TypeDecision = FiniteOfOrder | InfiniteAtJetScale | HarmonicObstruction


def infinite_type_check(g) -> TypeDecision:
    """Decide finite/infinite vanishing of P from its jet, or numerically without one.

    A zero jet only says "no term up to the cutoff"; it is reported as
    infinite at jet scale, never as a proof.
    """
    try:
        p_jet, _ = germ_jets(g)
    except NotJetExpandable:
        p_jet = None
    if p_jet is not None:
        harm = harmonic_monomials(p_jet)
        if harm:
            return HarmonicObstruction(tuple((e[0], e[1]) for e in harm))
        if not p_jet.is_zero():
            return FiniteOfOrder(p_jet.vanishing_order(), "jet", {"cutoff": p_jet.cutoff})
        evidence = {"jet": f"zero through cutoff {p_jet.cutoff}"}
        if hasattr(g, "P"):
            evidence["slope"] = estimate_order(g.P).to_json_obj()
        return InfiniteAtJetScale(evidence)
    est = estimate_order(g.P)
    if est.infinite:
        return InfiniteAtJetScale({"jet": "not expandable", "slope": est.to_json_obj()})
    return FiniteOfOrder(round(est.slope), "numeric", {"slope": est.to_json_obj()})


def decision_to_json(d: TypeDecision) -> dict:
    out: dict = {"decision": d.name}
    if isinstance(d, FiniteOfOrder):
        out["order"] = d.order
        out["source"] = d.source
        out["slope_evidence"] = d.evidence.get("slope")
    elif isinstance(d, InfiniteAtJetScale):
        out["slope_evidence"] = d.evidence.get("slope")
        out["jet_evidence"] = d.evidence.get("jet")
    else:
        out["monomials"] = [list(m) for m in d.monomials]
        out["slope_evidence"] = None
    return out


# ---------------------------------------------------------------------------
# shear normal form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShearStep:
    degree: int
    coeff: QQi
    p_jet: Jet


@dataclass(frozen=True)
class NormalFormResult:
    shear_coeffs: list[tuple[int, QQi]]
    transformed_P_jet: Jet
    steps: list[ShearStep]
    transformed_Q_jet: Jet | None = None

    def residual_monomials(self, max_degree: int | None = None) -> list:
        n = max(j for j, _ in self.shear_coeffs) if max_degree is None and self.shear_coeffs else (max_degree or 0)
        return [e for e in harmonic_monomials(self.transformed_P_jet, 2) if e[0] + e[1] <= n]

    def inverse(self) -> tuple[Jet, Jet | None]:
        """Undo the shears (last one first) to recover the input jets."""
        p, q = self.transformed_P_jet, self.transformed_Q_jet
        for j, a in reversed(self.shear_coeffs):
            if not a.is_zero():
                p, q = apply_shear(p, q, j, -a)
        return p, q

    def to_json_obj(self) -> dict:
        return {
            "shear_coeffs": [{"j": j, "re": frac_str(a.re), "im": frac_str(a.im)} for j, a in self.shear_coeffs],
            "residual_monomials": [[e[0], e[1]] for e in self.residual_monomials()],
            "transformed_P_jet": self.transformed_P_jet.to_json_obj(),
        }


def apply_shear(p: Jet, q: Jet | None, j: int, a: QQi) -> tuple[Jet, Jet | None]:
    """Rewrite rho in the coordinates xi1 = z1 + a z2^j.

    Re z1 = Re xi1 - Re(a z^j) and Im z1 = Im xi1 - w with w = Im(a z^j); the
    part of (Im z1) Q that survives at Im xi1 = 0 moves into P.
    """
    mono = Jet.monomial((j, 0, 0, 0), a, EXACT)
    p_new = p - mono.real_part()
    if q is None or q.is_zero():
        return p_new, q
    w = mono.imag_part()
    shifted_v = Jet.var("v", EXACT) - w
    q_sub = q.substitute({"v": shifted_v})
    big = times_vanishing(shifted_v, q_sub)
    at_zero = Jet._raw({e: c for e, c in big.terms.items() if not e[2]}, big.cutoff,
                       big.variables - {"v"}, False)
    p_new = (p_new + at_zero).real_part()
    q_new = (big - at_zero).divide_by("v").real_part()
    return p_new, q_new


def shear_normalize(P_jet: Jet, N: int, Q_jet: Jet | None = None) -> NormalFormResult:
    """Remove pure z^j / zbar^j terms, 2 <= j <= N, by successive shears in z1."""
    if N > P_jet.cutoff:
        raise NotNormalizable(f"N={N} exceeds the jet cutoff {P_jet.cutoff}")
    if not P_jet.is_real():
        raise NotNormalizable("P jet is not real")
    if any(sum(e) < 2 for e in P_jet.terms):
        raise NotNormalizable("P jet must vanish to order 2")
    p, q = P_jet, Q_jet
    coeffs = []
    steps = []
    for j in range(2, N + 1):
        cz = p.coeff((j, 0, 0, 0))
        czb = p.coeff((0, j, 0, 0))
        if czb != cz.conjugate():
            raise NotNormalizable(f"degree {j} harmonic part is not Re(a z^{j})")
        a = cz * 2
        if not a.is_zero():
            p, q = apply_shear(p, q, j, a)
        coeffs.append((j, a))
        steps.append(ShearStep(j, a, p))
    return NormalFormResult(coeffs, p, steps, q)


# ---------------------------------------------------------------------------
# the flat-sum counterexample
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleSpec:
    N_max: int
    lambdas: Mapping[int, Fraction] | Sequence | None = None
    cutoff: int | None = None

    def lam(self, n: int) -> Fraction:
        if self.lambdas is None:
            return Fraction(1)
        if isinstance(self.lambdas, Mapping):
            return Fraction(self.lambdas.get(n, 1))
        return Fraction(self.lambdas[n - 2])

    def jet_cutoff(self) -> int:
        return self.cutoff if self.cutoff is not None else max(12, self.N_max + 2)


@dataclass(frozen=True)
class Counterexample:
    spec: CounterexampleSpec
    a: dict[int, Fraction]
    g_jets: dict[int, Jet]
    f_jets: dict[int, Jet]
    germ: object
    curves: dict[int, HoloCurve]
    derivative_table: dict[int, dict[int, QQi]]


def shift_coefficient(n: int) -> Fraction:
    """a_n = 2 / n^n."""
    return Fraction(2, n**n)


def g_series(n: int, cutoff: int) -> Jet:
    """Jet in t of 1/(t^n - a_n) + 1/a_n, which vanishes to order n."""
    a = shift_coefficient(n)
    return invert(Jet.univariate({0: -a, n: 1}, cutoff)) + Jet.constant(1 / a, cutoff)


def _scale_t(s: Jet, lam: Fraction) -> Jet:
    return Jet({e: c * lam ** e[3] for e, c in s.terms.items()}, s.cutoff, s.variables)


def build_counterexample(spec: CounterexampleSpec) -> Counterexample:
    if not 2 <= spec.N_max <= 10:
        raise ValueError("N_max must lie in 2..10")
    cut = spec.jet_cutoff()
    a, g_jets, f_jets, table = {}, {}, {}, {}
    scaled = {}
    for n in range(2, spec.N_max + 1):
        lam = spec.lam(n)
        if lam < 1:
            raise ValueError("lambda_n must be >= 1")
        a[n] = shift_coefficient(n)
        g_jets[n] = g_series(n, cut)
        weight = Fraction(1, n**n) / lam**n
        scaled[n] = _scale_t(g_jets[n], lam).scale(weight)
        f = scaled[n].rename("t", "z").real_part()
        f_jets[n] = f
        table[n] = {k: f.coeff((k, 0, 0, 0)) * math.factorial(k) for k in range(1, cut + 1)}
    p_jet = Jet.zero(cut)
    for f in f_jets.values():
        p_jet = p_jet + f
    p_jet.real = True
    germ = JetGerm(p_jet, Jet.zero(cut), f"flat-sum-{spec.N_max}")
    curves = {}
    z1 = Jet.zero(cut)
    for N in range(2, spec.N_max + 1):
        z1 = z1 - scaled[N]
        curves[N] = HoloCurve(z1, Jet.univariate({1: ONE}, cut))
    return Counterexample(spec, a, g_jets, f_jets, germ, curves, table)
