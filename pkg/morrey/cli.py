"""
Command-line front end.

    morrey synth   --family ball --center 0 --radius 1 --grid 1,8,4096 -o f.mry
    morrey apply   -i f.mry --op '{"kind": "maximal"}' -o mf.mry
    morrey profile -i f.mry --p 2 --lambda 0.5 --csv profile.csv
    morrey vstar   -i f.mry --p 2 --n-max 8
    morrey norm    -i f.mry --p 2 --lambda 0.5
    morrey check dominance --name sharp-vs-max -i f.mry
    morrey report-merge a.json b.json -o all.json

Exit codes: 0 success, 1 failed check, 2 usage or configuration error.
Machine output (JSON, CSV, grid files) goes to files or standard output;
status lines go to standard error.
"""

import argparse
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

from . import checks
from .ball_modular import (modular_profile, morrey_norm, norm_from_profile,
                           set_fast_path_threshold, vstar_sequence)
from .config_manager import ConfigManager, resolve_threads, setup_logging
from .errors import ConfigError, MorreyError
from .grid_core import (BallIndicator, BumpTrain, FamilyDescriptor, Gaussian, GridFunction,
                        PowerLaw, RandomTrain, SmoothBump, read_grid, synthesize, write_grid,
                        write_grid_csv)
from .ods_export import write_table_ods
from .operators import OperatorSpec, apply_operator, set_riesz_self_cell
from .oracle import OracleRequest, fast_eval, oracle_eval, relative_error
from .parallel import set_workers
from .reporting import merge_reports, write_json_report, write_rows_csv
from .run_config import RunConfig, check_floats, read_run_config

logger = logging.getLogger(__name__)

FAMILIES = ("ball", "power", "gaussian", "bump", "train", "random")
SUITES = ("dominance", "scaling", "spanne", "adams", "modular-lemma-a", "modular-lemma-b",
          "vanishing", "preservation")
ORACLE_AGREEMENT = 1e-10


def status(symbol: str, message: str) -> None:
    print(f"{symbol} {message}", file=sys.stderr)


# --- flag parsing -------------------------------------------------------------

def _floats(text: str, name: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}")


def parse_grid_flag(text: str) -> Dict[str, Any]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects dim,L,cells, got {text!r}")
    try:
        return {"dim": int(parts[0]), "half_width": float(parts[1]), "cells": int(parts[2])}
    except ValueError:
        raise ConfigError(f"--grid expects dim,L,cells, got {text!r}")


def parse_ladder_flag(text: str) -> Dict[str, Any]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"--ladder expects rmin,ratio,count, got {text!r}")
    try:
        return {"r_min": float(parts[0]), "ratio": float(parts[1]), "count": int(parts[2])}
    except ValueError:
        raise ConfigError(f"--ladder expects rmin,ratio,count, got {text!r}")


def parse_threshold_flags(items: Optional[Sequence[str]]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--threshold expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file (if any) overridden by command-line flags."""
    base = read_run_config(args.config) if args.config else RunConfig()
    overrides: Dict[str, Dict[str, Any]] = {
        "grid": parse_grid_flag(args.grid) if args.grid else {},
        "ladder": parse_ladder_flag(args.ladder) if args.ladder else {},
        "params": {"p": args.p, "lambda": args.lam, "q": args.q, "mu": args.mu,
                   "alpha": args.alpha, "beta": args.beta, "epsilon": args.epsilon,
                   "kernel": args.kernel},
        "run": {"seed": args.seed, "threads": args.threads, "n_max": args.n_max,
                "ball_radius": args.ball_radius, "output": args.output, "csv": args.csv,
                "ods": args.ods, "oracle": True if args.oracle else None},
        "thresholds": parse_threshold_flags(args.threshold),
    }
    cfg = base.merged(overrides)
    check_floats(cfg)
    return cfg


def _center(text: Optional[str], dim: int):
    if text is None:
        return (0.0,) * dim
    return tuple(_floats(text, "--center"))


def _bump(text: str) -> tuple:
    values = _floats(text, "--bump")
    if len(values) < 3:
        raise ConfigError(f"--bump expects center...,radius,height, got {text!r}")
    return tuple(values[:-2]), values[-2], values[-1]


def _given(value: Any, default: Any) -> Any:
    """Flag value when set; an explicit 0 stays 0 and is rejected by the family."""
    return default if value is None else value


def build_family(args: argparse.Namespace, cfg: RunConfig, dim: int) -> FamilyDescriptor:
    name = args.family
    height = _given(args.height, 1.0)
    if name == "ball":
        variant = BallIndicator(_center(args.center, dim), _given(args.radius, 1.0), height)
    elif name == "power":
        variant = PowerLaw(0.5 if args.gamma is None else args.gamma, height, not args.no_cap)
    elif name == "gaussian":
        variant = Gaussian(_center(args.center, dim), _given(args.width, 1.0), height)
    elif name == "bump":
        variant = SmoothBump(_center(args.center, dim), _given(args.radius, 1.0), height)
    elif name == "train":
        if not args.bump:
            raise ConfigError("--family train needs at least one --bump")
        variant = BumpTrain(tuple(_bump(b) for b in args.bump))
    elif name == "random":
        variant = RandomTrain(count=_given(args.count, 8), seed=cfg.get("run", "seed", 0),
                              extent=_given(args.extent, 4.0))
    else:
        raise ConfigError(f"unknown family {name!r}; known: {list(FAMILIES)}")
    return FamilyDescriptor(variant, 1.0 if args.dilation is None else args.dilation)


def _operator(args: argparse.Namespace, cfg: RunConfig, default: Optional[str] = None) -> OperatorSpec:
    if args.op:
        return OperatorSpec.from_json(args.op)
    kind = args.kind or default
    if kind is None:
        raise ConfigError("an operator is needed: --op JSON or --kind")
    fields = {"kind": kind}
    if kind in ("frac_maximal", "riesz", "hardy_lower", "hardy_upper"):
        fields["alpha"] = cfg.get("params", "alpha")
    if kind in ("hybrid_k", "hybrid_calk"):
        fields["beta"] = cfg.get("params", "beta")
    if kind == "truncated_singular":
        fields["kernel_id"] = cfg.get("params", "kernel")
        fields["epsilon"] = cfg.get("params", "epsilon")
    return OperatorSpec(**fields)


# --- run context ----------------------------------------------------------------

class Context:
    """Resolved settings, run config and the helpers every subcommand shares."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.manager = ConfigManager(args.settings)
        if not self.manager.validate_config():
            raise ConfigError(f"invalid settings file {self.manager.settings_path}")
        setup_logging(self.manager.config)
        self.cfg = build_run_config(args)

        set_fast_path_threshold(self.setting("fast_path_threshold"))
        set_riesz_self_cell(self.setting("riesz_self_cell"))
        set_workers(resolve_threads(self.manager_threads(), args.threads))

    def setting(self, key: str) -> Any:
        return self.manager.get_setting("default_settings", key)

    def manager_threads(self) -> Optional[int]:
        file_threads = self.cfg.get("run", "threads")
        return file_threads if file_threads is not None else self.setting("threads")

    @property
    def thresholds(self) -> Dict[str, float]:
        merged = self.manager.get_thresholds()
        merged.update(self.cfg.thresholds())
        return merged

    def dominance_value(self, key: str) -> float:
        value = self.cfg.get("thresholds", key)
        return self.setting(key) if value is None else value

    def load_input(self) -> GridFunction:
        """Input grid file, or the --family synthesized on --grid."""
        if self.args.input:
            return read_grid(self.args.input)
        if getattr(self.args, "family", None):
            spec = self.cfg.grid_spec()
            return synthesize(spec, build_family(self.args, self.cfg, spec.dim))
        raise ConfigError("an input is needed: -i FILE or --family with --grid")

    def ladder(self, spec):
        return self.cfg.ladder(spec, self.setting("default_ladder_ratio"))

    def n_max(self, spec) -> int:
        return self.cfg.get("run", "n_max", max(1, int(math.floor(spec.half_width))))

    def resolved_settings(self) -> Dict[str, Any]:
        """Settings-file values in force for this run, after run-config overrides."""
        defaults = dict(self.manager.config.get("default_settings", {}))
        for key in ("dominance_delta", "dominance_tolerance"):
            defaults[key] = self.dominance_value(key)
        return {"settings_path": str(self.manager.settings_path),
                "default_settings": defaults, "thresholds": self.thresholds}

    def report(self, body: Dict[str, Any]) -> Dict[str, Any]:
        out = dict(body)
        out["run_config"] = self.cfg.to_dict()
        out["settings"] = self.resolved_settings()
        return out

    def emit(self, body: Dict[str, Any]) -> Dict[str, Any]:
        report = self.report(body)
        write_json_report(report, self.cfg.get("run", "output"))
        return report


# --- subcommands ------------------------------------------------------------------

def cmd_synth(ctx: Context) -> int:
    output = ctx.cfg.get("run", "output")
    if not output:
        raise ConfigError("synth needs -o FILE")
    spec = ctx.cfg.grid_spec()
    f = synthesize(spec, build_family(ctx.args, ctx.cfg, spec.dim))
    write_grid(f, output)
    if ctx.cfg.get("run", "csv"):
        write_grid_csv(f, ctx.cfg.get("run", "csv"))
    status("✅", f"wrote {output} ({spec.size} cells)")
    return 0


def cmd_apply(ctx: Context) -> int:
    f = ctx.load_input()
    op = _operator(ctx.args, ctx.cfg)
    ladder = ctx.ladder(f.spec)
    if ctx.cfg.get("run", "oracle", False):
        req = OracleRequest(op, ladder=ladder, self_cell=ctx.setting("riesz_self_cell"),
                            override_guard=ctx.args.override_guard)
        reference = oracle_eval(f, req, size_guard=ctx.setting("oracle_size_guard"))
        error = relative_error(fast_eval(f, req), reference)
        passed = error <= ORACLE_AGREEMENT
        report = ctx.report({"kind": "oracle-agreement",
                             "statement": "fast path = direct summation",
                             "operator": op.to_json(), "relative_error": error, "pass": passed,
                             "tolerances": {"relative_error": ORACLE_AGREEMENT}})
        write_json_report(report, ctx.args.report)
        status("✅" if passed else "❌", f"{op.label}: relative error {error:.3e}")
        return 0 if passed else 1

    tf = apply_operator(f, op, ladder)
    target = ctx.cfg.get("run", "output")
    if not target:
        raise ConfigError("apply needs -o FILE for the output grid (or --oracle)")
    write_grid(tf, target)
    if ctx.cfg.get("run", "csv"):
        write_grid_csv(tf, ctx.cfg.get("run", "csv"))
    status("✅", f"{op.label} written to {target}")
    return 0


def cmd_profile(ctx: Context) -> int:
    f = ctx.load_input()
    mp = ctx.cfg.morrey_params()
    profile = modular_profile(f, mp, ctx.ladder(f.spec))
    rows = profile.rows()
    if ctx.cfg.get("run", "csv"):
        write_rows_csv(["r", "sup_modular"], rows, ctx.cfg.get("run", "csv"))
    if ctx.cfg.get("run", "ods"):
        write_table_ods(["r", "sup_modular"], rows, ctx.cfg.get("run", "ods"), "profile")
    body = {"kind": "profile", "statement": "sup_x M_(p,lambda)(f; x, r) per ladder radius",
            "profile": profile.to_dict(), "pass": True, "tolerances": {}}
    if ctx.ladder(f.spec).reaches(f.spec):
        body["norm"] = norm_from_profile(profile)
    ctx.emit(body)
    status("✅", f"profile over {len(rows)} radii")
    return 0


def cmd_vstar(ctx: Context) -> int:
    f = ctx.load_input()
    mp_p = ctx.cfg.get("params", "p")
    if mp_p is None:
        raise ConfigError("vstar needs --p")
    sequence = vstar_sequence(f, mp_p, ctx.n_max(f.spec), ctx.cfg.get("run", "ball_radius", 1.0))
    rows = sequence.rows()
    if ctx.cfg.get("run", "csv"):
        write_rows_csv(["N", "A_N"], rows, ctx.cfg.get("run", "csv"))
    if ctx.cfg.get("run", "ods"):
        write_table_ods(["N", "A_N"], rows, ctx.cfg.get("run", "ods"), "vstar")
    ctx.emit({"kind": "vstar", "statement": "A_(N,p)(f) for N = 1..N_max",
              "vstar_sequence": sequence.to_dict(), "pass": True, "tolerances": {}})
    status("✅", f"(V*) sequence up to N = {rows[-1][0]}")
    return 0


def cmd_norm(ctx: Context) -> int:
    f = ctx.load_input()
    mp = ctx.cfg.morrey_params()
    value = morrey_norm(f, mp, ctx.ladder(f.spec))
    ctx.emit({"kind": "norm", "statement": "||f||_(p,lambda)", "params": mp.to_dict(),
              "norm": value, "pass": True, "tolerances": {}})
    status("✅", f"||f||_({mp.p:g},{mp.lam:g}) = {value:.10g}")
    return 0


def cmd_report_merge(ctx: Context) -> int:
    merged = merge_reports(ctx.args.reports)
    write_json_report(merged, ctx.cfg.get("run", "output"))
    status("✅" if merged["pass"] else "❌", f"merged {len(ctx.args.reports)} reports")
    return 0 if merged["pass"] else 1


# --- check suites ---------------------------------------------------------------------

def _conclude(ctx: Context, body: Dict[str, Any], label: str) -> int:
    ctx.emit(body)
    passed = bool(body.get("pass"))
    status("✅" if passed else "❌", f"{label}: {'pass' if passed else 'FAIL'}")
    return 0 if passed else 1


def _require_alpha(ctx: Context) -> float:
    alpha = ctx.cfg.get("params", "alpha")
    if alpha is None:
        raise ConfigError("this check needs --alpha")
    return alpha


def _t_values(ctx: Context, default: str) -> List[float]:
    return _floats(ctx.args.t or default, "--t")


def check_dominance_suite(ctx: Context) -> int:
    name = ctx.args.name
    if not name:
        raise ConfigError(f"check dominance needs --name, one of {list(checks.DOMINANCE_NAMES)}")
    f = ctx.load_input()
    ladder = ctx.ladder(f.spec)
    if name == "hedberg":
        report = checks.hedberg_report(f, _require_alpha(ctx), ctx.cfg.morrey_params(), ladder)
        return _conclude(ctx, report.to_dict(), "hedberg")
    reports = checks.dominance_suite(name, f, ladder, ctx.cfg.get("params", "alpha"),
                                     ctx.dominance_value("dominance_delta"),
                                     ctx.args.constant,
                                     ctx.dominance_value("dominance_tolerance"))
    body = {"kind": "dominance-suite", "name": name, "statement": name,
            "checks": [r.to_dict() for r in reports],
            "pass": all(r.passed for r in reports),
            "tolerances": {"delta": ctx.dominance_value("dominance_delta")}}
    for r in reports:
        status("✅" if r.passed else "❌",
               f"{r.lhs_label} <= {r.constant:.6g} {r.rhs_label}: max ratio {r.max_ratio:.6g}")
    return _conclude(ctx, body, name)


def check_scaling_suite(ctx: Context) -> int:
    if not ctx.args.family:
        raise ConfigError("check scaling needs --family")
    spec = ctx.cfg.grid_spec()
    family = build_family(ctx.args, ctx.cfg, spec.dim)
    mp = ctx.cfg.morrey_params()
    ladder = ctx.ladder(spec)
    reports = [checks.check_scaling(family, t, mp, ladder, spec)
               for t in _t_values(ctx, "0.5,2")]
    body = {"kind": "scaling-suite", "statement": "||f(t.)|| = t^((lambda-n)/p) ||f||",
            "checks": [r.to_dict() for r in reports], "pass": all(r.passed for r in reports),
            "tolerances": {"deviation": reports[0].tolerance if reports else None}}
    return _conclude(ctx, body, "scaling")


def check_regime_suite(ctx: Context, regime: str) -> int:
    if not ctx.args.family:
        raise ConfigError(f"check {regime} needs --family")
    spec = ctx.cfg.grid_spec()
    family = build_family(ctx.args, ctx.cfg, spec.dim)
    report = checks.exponent_ratio_report(family, _t_values(ctx, "0.5,1,2"), _require_alpha(ctx),
                                          regime, ctx.cfg.morrey_params(), spec,
                                          ctx.ladder(spec))
    return _conclude(ctx, report.to_dict(), regime)


def check_modular_suite(ctx: Context, lemma: str) -> int:
    mp = ctx.cfg.morrey_params()
    radii = _floats(ctx.args.radii, "--radii") if ctx.args.radii else None

    if lemma == "B":
        alpha = _require_alpha(ctx)
        op = OperatorSpec("riesz", alpha=alpha)
    else:
        op = _operator(ctx.args, ctx.cfg, default="maximal")

    def build(f: GridFunction) -> checks.BoundReport:
        params = checks.spanne_exponents(mp, op.alpha, f.spec.dim) if lemma == "B" else mp
        ladder = ctx.ladder(f.spec)
        return checks.modular_bound_report(f, apply_operator(f, op, ladder), params, ladder,
                                           lemma, radii)

    f = ctx.load_input()
    report = build(f)
    body = {"kind": "modular-suite", "lemma": lemma, "operator": op.to_json(),
            "statement": "modular estimate, fitted constant",
            "coarse": report.to_dict(), "pass": report.to_dict()["pass"], "tolerances": {}}
    if ctx.cfg.get("run", "csv"):
        header = ["r"] + [f"x{i + 1}" for i in range(f.spec.dim)] + ["lhs", "rhs"]
        write_rows_csv(header, report.rows(f.spec), ctx.cfg.get("run", "csv"))
    if ctx.args.family and not ctx.args.input:
        spec = f.spec.refined(2)
        fine = build(synthesize(spec, build_family(ctx.args, ctx.cfg, spec.dim)))
        stability = checks.bound_stability(report, fine)
        body.update({"fine": fine.to_dict(), "stability": stability,
                     "pass": body["pass"] and stability["pass"],
                     "tolerances": stability["tolerances"]})
    return _conclude(ctx, body, f"modular lemma {lemma}")


def check_vanishing_suite(ctx: Context) -> int:
    f = ctx.load_input()
    diagnosis = checks.classify_vanishing(f, ctx.cfg.morrey_params(), ctx.ladder(f.spec),
                                          ctx.n_max(f.spec), ctx.thresholds,
                                          ctx.cfg.get("run", "ball_radius", 1.0))
    for name, verdict in diagnosis.verdicts().items():
        status("✅" if verdict == "vanishing" else "⚠️ ", f"{name}: {verdict}")
    return _conclude(ctx, diagnosis.to_dict(), "vanishing")


def check_preservation_suite(ctx: Context) -> int:
    f = ctx.load_input()
    op = _operator(ctx.args, ctx.cfg)
    mp = ctx.cfg.morrey_params()
    out = mp.output if mp.q is not None else None
    report = checks.preservation_report(f, op, mp, out, ctx.ladder(f.spec), ctx.n_max(f.spec),
                                        ctx.args.regime, ctx.thresholds)
    for name, outcome in report.outcomes.items():
        symbol = {"preserved": "✅", "violated": "❌"}.get(outcome, "⚠️ ")
        status(symbol, f"{op.label} {name}: {outcome}")
    if "Vinf" in report.inconclusive and report.after.vinf.verdict == "non-vanishing":
        status("⚠️ ", f"Vinf plateau not graded: grid half-width is "
                      f"{report.extras['domain_ratio']:.3g} support radii")
    return _conclude(ctx, report.to_dict(), f"preservation of {op.label}")


def cmd_check(ctx: Context) -> int:
    suite = ctx.args.suite
    if suite == "dominance":
        return check_dominance_suite(ctx)
    if suite == "scaling":
        return check_scaling_suite(ctx)
    if suite in ("spanne", "adams"):
        return check_regime_suite(ctx, suite)
    if suite == "modular-lemma-a":
        return check_modular_suite(ctx, "A")
    if suite == "modular-lemma-b":
        return check_modular_suite(ctx, "B")
    if suite == "vanishing":
        return check_vanishing_suite(ctx)
    return check_preservation_suite(ctx)


COMMANDS = {
    "synth": cmd_synth,
    "apply": cmd_apply,
    "profile": cmd_profile,
    "vstar": cmd_vstar,
    "norm": cmd_norm,
    "check": cmd_check,
    "report-merge": cmd_report_merge,
}


# --- argument parser ------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="run config INI file (flags override it)")
    g.add_argument("--settings", help="settings JSON (default configs/main_config.json)")
    g.add_argument("--threads", type=int, help="worker threads (overrides MORREY_THREADS)")
    g.add_argument("--grid", help="dim,L,cells")
    g.add_argument("--ladder", help="rmin,ratio,count")
    g.add_argument("--p", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--q", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--kernel", help="registered kernel id (hilbert1d, riesz2d_x1)")
    g.add_argument("--seed", type=int)
    g.add_argument("--n-max", dest="n_max", type=int)
    g.add_argument("--ball-radius", dest="ball_radius", type=float)
    g.add_argument("-o", "--output", help="output file (JSON reports default to stdout)")
    g.add_argument("--csv", help="CSV export path")
    g.add_argument("--ods", help="ODS spreadsheet export path")
    g.add_argument("--oracle", action="store_true", help="compare against direct summation")
    g.add_argument("--threshold", action="append", metavar="KEY=VALUE",
                   help="override a diagnostic threshold")
    g.add_argument("-i", "--input", help="input grid file")

    fam = common.add_argument_group("families")
    fam.add_argument("--family", choices=FAMILIES)
    fam.add_argument("--center")
    fam.add_argument("--radius", type=float)
    fam.add_argument("--height", type=float)
    fam.add_argument("--gamma", type=float)
    fam.add_argument("--no-cap", dest="no_cap", action="store_true")
    fam.add_argument("--width", type=float)
    fam.add_argument("--bump", action="append", metavar="C1[,C2..],R,H")
    fam.add_argument("--count", type=int)
    fam.add_argument("--extent", type=float)
    fam.add_argument("--dilation", type=float)

    ops = common.add_argument_group("operators")
    ops.add_argument("--op", help='operator as JSON, e.g. {"kind": "riesz", "alpha": 0.5}')
    ops.add_argument("--kind", help="operator kind (parameters from --alpha/--beta/...)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="morrey",
                                     description="Morrey modulars, operators and checks")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    sub.add_parser("synth", parents=[common], help="synthesize a family on a grid")
    apply = sub.add_parser("apply", parents=[common], help="apply an operator")
    apply.add_argument("--report", help="oracle agreement report (default stdout)")
    apply.add_argument("--override-guard", dest="override_guard", action="store_true",
                       help="let the oracle run above its size guard")
    sub.add_parser("profile", parents=[common], help="modular profile over the ladder")
    sub.add_parser("vstar", parents=[common], help="(V*) sequence")
    sub.add_parser("norm", parents=[common], help="Morrey norm")

    check = sub.add_parser("check", parents=[common], help="run a check suite")
    check.add_argument("suite", choices=SUITES)
    check.add_argument("--name", help="dominance check name")
    check.add_argument("--constant", type=float, help="replace the claimed constant")
    check.add_argument("--t", help="comma-separated dilations")
    check.add_argument("--regime", choices=("spanne", "adams"))
    check.add_argument("--radii", help="evaluation radii for modular checks")

    merge = sub.add_parser("report-merge", parents=[common], help="merge JSON reports")
    merge.add_argument("reports", nargs="+")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run the subcommand and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        ctx = Context(args)
        return COMMANDS[args.command](ctx)
    except (MorreyError, OSError) as e:
        status("❌", f"Error: {e}")
        return 2


def main() -> None:
    sys.exit(run())
