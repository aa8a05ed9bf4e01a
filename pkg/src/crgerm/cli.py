"""Command line front end.

Exit codes: 0 success, 1 hypothesis violation or refusal, 2 parse/config
error, 3 too many singular sample points (more than 10% skipped).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .expr import ExprSyntaxError
from .germ import GermInvalid, load_germ_file, sample_surface
from .jet import NotJetExpandable
from .tangency import (ROTATION, HypothesisViolation, VectorField, ZeroJetRefusal, classification_to_json,
                       classify_rotations, default_radii, residual_numeric, solve_tangent_fields)
from .typeanalysis import (CounterexampleSpec, FiniteOfOrder, HarmonicObstruction, NotNormalizable,
                           build_counterexample, compose_curve, dangelo_probe, decision_to_json,
                           infinite_type_check, shear_normalize)
from .numbers import frac_str
from .verify import verify_all

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_SINGULAR = 0, 1, 2, 3
SINGULAR_BUDGET = 0.10


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    germ: Path | None
    cutoff: int
    order: int
    degree: int
    radii: tuple[float, ...] | None
    angles: int
    v_values: tuple[float, ...]
    tol: float
    strict: bool
    out: Path | None
    json: bool
    field: Path | None
    nmax: int
    budget: int

    def validate(self):
        if not self.order >= self.degree >= 1:
            raise ConfigError("need --order >= --degree >= 1")
        if self.cutoff < self.order:
            raise ConfigError("need --cutoff >= --order")
        if self.tol <= 0:
            raise ConfigError("--tol must be positive")
        if self.angles < 1:
            raise ConfigError("--angles must be positive")


def _grid(text: str | None, name: str):
    if text is None:
        return None
    try:
        a, b, steps = text.split(",")
        return tuple(float(x) for x in np.linspace(float(a), float(b), int(steps)))
    except ValueError as exc:
        raise ConfigError(f"{name} expects a,b,steps") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crgerm", description="Analyse germs Re z1 + P(z2) + (Im z1) Q(z2, Im z1) = 0.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("check-type", "normal-form", "tangency-residual", "solve-fields", "classify",
                 "verify-examples", "counterexample"):
        p = sub.add_parser(name)
        p.add_argument("--germ", type=Path, help="germ file (.json or .toml)")
        p.add_argument("--cutoff", type=int, default=12, help="jet cutoff N")
        p.add_argument("--order", type=int, default=8, help="tangency jet order K")
        p.add_argument("--degree", type=int, default=2, help="field degree bound D")
        p.add_argument("--radii", help="a,b,steps for |z2|")
        p.add_argument("--angles", type=int, default=16)
        p.add_argument("--v-range", dest="v_range", help="a,b,steps for Im z1")
        p.add_argument("--tol", type=float, default=1e-10)
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                          help="no pure z^N in Q(.,0) at all (default)")
        mode.add_argument("--lenient", dest="strict", action="store_false",
                          help="only the lowest-order harmonic term of Q(.,0) is excluded")
        p.add_argument("--out", type=Path, help="write the JSON report here")
        p.add_argument("--json", action="store_true", help="print the JSON report instead of a summary")
        p.add_argument("--field", type=Path, help="vector field JSON {a: [...], b: [...]} (default i z2 d/dz2)")
        p.add_argument("--nmax", type=int, default=8, help="largest n in the counterexample")
        p.add_argument("--budget", type=int, default=8, help="monomial degree budget of the type probe")
    return ap


def config_from_args(ns) -> RunConfig:
    cfg = RunConfig(ns.command, ns.germ, ns.cutoff, ns.order, ns.degree, _grid(ns.radii, "--radii"), ns.angles,
                    _grid(ns.v_range, "--v-range") or (-0.05, 0.0, 0.05), ns.tol, ns.strict, ns.out, ns.json,
                    ns.field, ns.nmax, ns.budget)
    cfg.validate()
    return cfg


def _need_germ(cfg: RunConfig):
    if cfg.germ is None:
        raise ConfigError(f"{cfg.command} needs --germ")
    return load_germ_file(cfg.germ, cutoff=cfg.cutoff, strict=cfg.strict)


# -- commands: each returns (exit code, report, summary lines) ---------------


def cmd_check_type(cfg):
    g = _need_germ(cfg)
    decision = infinite_type_check(g)
    report = decision_to_json(decision)
    lines = [f"{g.name}: {decision.name}"]
    if isinstance(decision, FiniteOfOrder):
        lines[0] += f" (order {decision.order})"
    if g.has_jets():
        probe = dangelo_probe(g, cfg.budget)
        report["witness_curve"] = probe.witness.to_json_obj()
        report["probe"] = probe.to_json_obj()
        lines.append("probe ratio: " + report["probe"]["best_ratio"])
    else:
        report["witness_curve"] = None
    code = EXIT_VIOLATION if isinstance(decision, HarmonicObstruction) else EXIT_OK
    if code:
        lines.append("harmonic monomials in P: " + ", ".join(f"z^{a} zbar^{b}" for a, b in decision.monomials))
    return code, report, lines


def cmd_normal_form(cfg):
    g = _need_germ(cfg)
    try:
        p, q = g.p_jet(), g.q_jet()
    except NotJetExpandable as exc:
        return EXIT_VIOLATION, {"error": "no jet", "detail": str(exc)}, [f"refused: {exc}"]
    try:
        nf = shear_normalize(p, cfg.cutoff, None if q.is_zero() else q)
    except NotNormalizable as exc:
        return EXIT_VIOLATION, {"error": "not normalizable", "detail": str(exc)}, [f"refused: {exc}"]
    report = nf.to_json_obj()
    nonzero = [(j, a) for j, a in nf.shear_coeffs if not a.is_zero()]
    lines = [f"{g.name}: {len(nonzero)} nonzero shear(s)"] + [f"  a_{j} = {a}" for j, a in nonzero]
    return EXIT_OK, report, lines


def _field(cfg) -> VectorField:
    if cfg.field is None:
        return ROTATION
    try:
        return VectorField.from_json_obj(json.loads(cfg.field.read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad field file: {exc}") from exc


def cmd_tangency_residual(cfg):
    g = _need_germ(cfg)
    H = _field(cfg)
    radii = cfg.radii or default_radii(g)
    sample = sample_surface(g, radii, cfg.angles, cfg.v_values)
    rep = residual_numeric(g, H, sample)
    report = rep.to_json_obj()
    report["field"] = H.to_json_obj()
    total = rep.count + rep.skipped
    lines = [f"{g.name}: max |Re H rho| = {rep.max_abs_residual:.3e} over {rep.count} points ({rep.skipped} skipped)"]
    if total and rep.skipped / total > SINGULAR_BUDGET:
        return EXIT_SINGULAR, report, lines + ["too many singular points"]
    return EXIT_OK, report, lines


def cmd_solve_fields(cfg):
    g = _need_germ(cfg)
    try:
        sol = solve_tangent_fields(g, cfg.order, cfg.degree)
    except ZeroJetRefusal as exc:
        return EXIT_VIOLATION, {"error": "zero jet", "detail": str(exc), "use": "classify"}, [
            f"refused: {exc}", "run `crgerm classify` for infinite-type germs"]
    except NotJetExpandable as exc:
        return EXIT_VIOLATION, {"error": "no jet", "detail": str(exc), "use": "classify"}, [
            f"refused: P has no Taylor jet ({exc})", "run `crgerm classify` instead"]
    lines = [f"{g.name}: {sol.dimension} field(s) tangent through order {sol.K} (degree <= {sol.D})"]
    lines += [f"  {H}" for H in sol.basis]
    return EXIT_OK, sol.to_json_obj(), lines


def cmd_classify(cfg):
    g = _need_germ(cfg)
    radii = cfg.radii or default_radii(g)
    c = classify_rotations(g, strict=cfg.strict, radii=radii, angles=cfg.angles, tol=cfg.tol)
    report = classification_to_json(c)
    lines = [f"{g.name}: {c.name}"]
    if isinstance(c, HypothesisViolation):
        lines.append("violated: " + ", ".join(c.failed))
        return EXIT_VIOLATION, report, lines
    return EXIT_OK, report, lines


def cmd_verify_examples(cfg):
    checks = verify_all()
    report = {"checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]}
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in checks]
    return (EXIT_OK if all(c.passed for c in checks) else EXIT_VIOLATION), report, lines


def cmd_counterexample(cfg):
    cx = build_counterexample(CounterexampleSpec(cfg.nmax, cutoff=cfg.cutoff))
    orders = {}
    for N, curve in cx.curves.items():
        orders[str(N)] = str(compose_curve(cx.germ, curve).vanishing_order())
    report = {
        "N_max": cfg.nmax,
        "cutoff": cx.spec.jet_cutoff(),
        "a": {str(n): frac_str(a) for n, a in cx.a.items()},
        "g_jets": {str(n): g.to_json_obj() for n, g in cx.g_jets.items()},
        "derivative_table": {str(n): {str(k): frac_str(c.re) for k, c in row.items() if c} for n, row in
                             cx.derivative_table.items()},
        "curve_orders": orders,
    }
    lines = [f"a_n = 2/n^n for n = 2..{cfg.nmax}; cutoff {report['cutoff']}"]
    lines += [f"  nu(rho o phi_{N}) = {o}" for N, o in orders.items()]
    return EXIT_OK, report, lines


COMMANDS = {
    "check-type": cmd_check_type,
    "normal-form": cmd_normal_form,
    "tangency-residual": cmd_tangency_residual,
    "solve-fields": cmd_solve_fields,
    "classify": cmd_classify,
    "verify-examples": cmd_verify_examples,
    "counterexample": cmd_counterexample,
}


def dumps(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    code, report, lines = COMMANDS[cfg.command](cfg)
    text = dumps(report)
    if cfg.out is not None:
        cfg.out.write_text(text)
    stdout.write(text if cfg.json else "\n".join(lines) + "\n")
    return code


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return run(cfg)
    except (ConfigError, ExprSyntaxError, GermInvalid, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
