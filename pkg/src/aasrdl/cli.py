"""Command-line entry point wiring the pipeline end to end.

    aasrdl validate   model.arl
    aasrdl diagram    model.arl
    aasrdl checkmodes model.arl
    aasrdl simulate   --profile env.yaml --horizon N model.arl
    aasrdl estimate   --property props.ltl --horizons a,b,c model.arl
    aasrdl gentests   --module NAME | --all model.arl

Exit codes: 0 success, 1 findings (diagnostics, violations, unreachable
modes, aborted simulation), 2 usage or I/O errors. All randomness flows
from --seed (default 0), so reruns with identical inputs write
byte-identical outputs. Outputs land under --out (default ./out); the
input model file is never modified.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import List, Optional, Tuple

from . import __version__
from .analysis import check_model, serialize_diagnostics
from .diagrams import (
    mode_transition_diagram,
    module_relation_diagram,
    variable_dependency_diagram,
)
from .estimate import EstimationConfig, estimate_many, render_csv, render_table
from .mcdc import (
    export_tests,
    generate_mode_tests,
    generate_tests,
    render_coverage,
)
from .model import Model
from .modecheck import (
    check_exclusiveness,
    check_reachability,
    exclusiveness_csv,
    render_exclusiveness,
    render_reachability,
)
from .parser import parse_model, parse_property_file
from .simulator import EnvProfile, ProfileError, constant_profile, export_trace, load_profile, run
from .smtlib import solve_external
from .solver import SolverOptions, solve
from .typecheck import type_check

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2


class _Usage(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror}") from exc


def _write(out_dir: str, name: str, content: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(content)
    return path


def _load_model(path: str) -> Tuple[Optional[Model], str]:
    """Parse plus static checks; returns (model or None, report text)."""
    text = _read(path)
    result = parse_model(text, filename=path)
    lines = [str(d) for d in result.diagnostics]
    if result.model is None:
        return None, "\n".join(lines + ["validate: FAIL (parse errors)"]) + "\n"
    model = result.model
    type_diags = type_check(model)
    lines.extend(str(d) for d in type_diags)
    model_diags = check_model(model)
    if model_diags:
        lines.append(serialize_diagnostics(model_diags))
    errors = (len(result.errors()) + len(type_diags)
              + sum(1 for d in model_diags if d.severity == "error"))
    warnings = sum(1 for d in model_diags if d.severity == "warning")
    verdict = "PASS" if errors == 0 else "FAIL"
    lines.append(f"validate: {verdict} ({errors} error(s), "
                 f"{warnings} warning(s))")
    report = "\n".join(line for line in lines if line) + "\n"
    return (model if errors == 0 else None), report


def _solve_fn(args):
    command = args.external_solver or os.environ.get("AASRDL_EXTERNAL_SOLVER")
    options = SolverOptions(seed=args.seed)
    if command:
        return lambda constraint: solve_external(constraint, command, options)
    return lambda constraint: solve(constraint, options)


# --------------------------------------------------------------------------
# Subcommands

def cmd_validate(args) -> int:
    model, report = _load_model(args.model)
    sys.stdout.write(report)
    _write(args.out, "validate.txt", report)
    return EXIT_OK if model is not None else EXIT_FINDINGS


def _require_valid(args) -> Model:
    model, report = _load_model(args.model)
    if model is None:
        sys.stdout.write(report)
        raise _Findings()
    return model


class _Findings(Exception):
    pass


def cmd_diagram(args) -> int:
    model = _require_valid(args)
    files = []
    files.append(_write(args.out, f"{model.name}.modes.dot",
                        mode_transition_diagram(model).to_dot()))
    for mode in model.modes:
        graph = module_relation_diagram(model, mode.name)
        files.append(_write(args.out, f"{model.name}.{mode.name}.modules.dot",
                            graph.to_dot()))
    for module in model.modules:
        graph = variable_dependency_diagram(module, model)
        files.append(_write(args.out, f"{model.name}.{module.name}.vars.dot",
                            graph.to_dot()))
    for path in files:
        print(path)
    return EXIT_OK


def cmd_checkmodes(args) -> int:
    model = _require_valid(args)
    solve_fn = _solve_fn(args)
    exclusiveness = check_exclusiveness(model, solve_fn=solve_fn)
    reachability = check_reachability(model, solve_fn=solve_fn)
    report = render_exclusiveness(exclusiveness) + render_reachability(reachability)
    sys.stdout.write(report)
    _write(args.out, "checkmodes.txt", report)
    _write(args.out, "exclusiveness.csv", exclusiveness_csv(exclusiveness))
    clean = exclusiveness.clean and reachability.clean
    return EXIT_OK if clean else EXIT_FINDINGS


def cmd_simulate(args) -> int:
    model = _require_valid(args)
    if args.profile:
        try:
            profile = load_profile(_read(args.profile), model)
        except ProfileError as exc:
            raise _Usage(f"profile: {exc}") from exc
    else:
        profile = constant_profile(model)
    profile = replace(profile, seed=args.seed)
    if args.horizon is not None:
        profile = replace(profile, horizon=args.horizon)
    if profile.horizon is None:
        raise _Usage("no horizon: pass --horizon or set it in the profile")

    trace = run(model, profile, strict=args.strict, verbose=args.verbose)
    csv_text = export_trace(trace)
    path = _write(args.out, f"{model.name}.trace.csv", csv_text)
    print(f"{len(trace.snapshots)} cycle(s), status: {trace.status}")
    print(path)
    if args.verbose:
        lines = [f"cycle {a.cycle}: priority {a.priority} -> {a.target}: "
                 f"condition={'true' if a.condition_true else 'false'}"
                 + ("" if a.guard_accepted is None else
                    f", guard={'accepted' if a.guard_accepted else 'rejected'}"
                    + (", committed" if a.committed else ", rolled back"))
                 for a in trace.attempts]
        _write(args.out, f"{model.name}.attempts.log",
               "\n".join(lines) + ("\n" if lines else ""))
    return EXIT_OK if not trace.aborted else EXIT_FINDINGS


def cmd_estimate(args) -> int:
    model = _require_valid(args)
    formulas, diags = parse_property_file(_read(args.property), model.datadict)
    for diag in diags:
        print(str(diag))
    if not formulas:
        raise _Usage("no parsable properties in the property file")
    if any(d.severity == "error" for d in diags):
        return EXIT_FINDINGS

    if args.profile:
        try:
            profile = load_profile(_read(args.profile), model)
        except ProfileError as exc:
            raise _Usage(f"profile: {exc}") from exc
    else:
        profile = constant_profile(model)

    try:
        horizons = tuple(int(h) for h in args.horizons.split(","))
        config = EstimationConfig(
            horizons=horizons, delta=args.delta, sigma=args.sigma,
            seed=args.seed, samples=args.samples, timeout=args.timeout,
            jobs=args.jobs)
    except ValueError as exc:
        raise _Usage(str(exc)) from exc

    named = [(text, phi) for _, phi, text in formulas]
    results = estimate_many(model, profile, named, config, strict=args.strict)
    table = render_table(results)
    sys.stdout.write(table)
    _write(args.out, "estimate.txt", table)
    _write(args.out, "estimate.csv", render_csv(results))
    return EXIT_OK


def cmd_gentests(args) -> int:
    model = _require_valid(args)
    if not args.all and not args.module:
        raise _Usage("pass --module NAME or --all")
    solve_fn = _solve_fn(args)

    suites = []
    if args.all:
        targets = [m.name for m in model.modules]
    else:
        if model.module(args.module) is None:
            raise _Usage(f"unknown module '{args.module}'")
        targets = [args.module]
    for name in targets:
        suites.append(generate_tests(model, name, solve_fn=solve_fn))
    if args.scope == "modes":
        suites.append(generate_mode_tests(model, solve_fn=solve_fn))

    for suite in suites:
        if args.dedup:
            _dedup_suite(suite)
        safe = suite.target.replace("<", "").replace(">", "")
        _write(args.out, f"{safe}.tests.csv", export_tests(suite, model))
    coverage = render_coverage(suites, exclude_infeasible=args.exclude_infeasible)
    sys.stdout.write(coverage)
    _write(args.out, "coverage.txt", coverage)
    return EXIT_OK


def _dedup_suite(suite) -> None:
    """Merge test cases with identical input valuations across decisions."""
    seen = {}
    for report in suite.reports:
        kept = []
        for case in report.cases:
            key = tuple(sorted((k, str(v)) for k, v in case.inputs.items()))
            if key in seen:
                seen[key].obligations.extend(case.obligations)
            else:
                seen[key] = case
                kept.append(case)
        report.cases[:] = kept


# --------------------------------------------------------------------------
# Argument wiring

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aasrdl",
        description="Validate, review, simulate, statistically check, and "
                    "generate MC/DC tests from mode-based requirement models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("model", help="model file (.arl)")
        p.add_argument("--out", default="./out", help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for all randomness (default 0)")
        p.add_argument("--external-solver", default=None, metavar="CMD",
                       help="pipe SMT-LIB to this command instead of the "
                            "internal solver (or set AASRDL_EXTERNAL_SOLVER)")

    p = sub.add_parser("validate", help="parse, type-check, and lint a model")
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("diagram", help="emit mode/module/variable DOT diagrams")
    common(p)
    p.set_defaults(fn=cmd_diagram)

    p = sub.add_parser("checkmodes",
                       help="check transition exclusiveness and reachability")
    common(p)
    p.set_defaults(fn=cmd_checkmodes)

    p = sub.add_parser("simulate", help="run the model under a profile")
    common(p)
    p.add_argument("--profile", default=None, help="environment profile (YAML)")
    p.add_argument("--horizon", type=int, default=None,
                   help="cycle count (overrides the profile)")
    p.add_argument("--strict", action="store_true",
                   help="abort when a write leaves its declared bounds")
    p.add_argument("--verbose", action="store_true",
                   help="log per-cycle transition attempts")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("estimate",
                       help="estimate property satisfaction probability")
    common(p)
    p.add_argument("--property", required=True,
                   help="property file, one formula per line")
    p.add_argument("--profile", default=None, help="environment profile (YAML)")
    p.add_argument("--delta", type=float, default=0.01,
                   help="semi-confidence interval half-width (default 0.01)")
    p.add_argument("--sigma", type=float, default=0.05,
                   help="confidence error (default 0.05)")
    p.add_argument("--horizons", required=True,
                   help="comma-separated cycle horizons, ascending")
    p.add_argument("--samples", type=int, default=None,
                   help="override the Hoeffding sample count")
    p.add_argument("--timeout", type=float, default=None,
                   help="wall-clock budget in seconds; result marked "
                        "incomplete when exceeded")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel simulation workers")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("gentests", help="generate MC/DC test cases")
    common(p)
    p.add_argument("--module", default=None, help="target module")
    p.add_argument("--all", action="store_true", help="every module")
    p.add_argument("--scope", choices=("tasks", "modes"), default="tasks",
                   help="also harvest mode guards/transitions with 'modes'")
    p.add_argument("--dedup", action="store_true",
                   help="merge test cases with identical input valuations")
    p.add_argument("--exclude-infeasible", action="store_true",
                   help="drop infeasible obligations from the MC/DC "
                        "percentage denominator")
    p.set_defaults(fn=cmd_gentests)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except _Usage as exc:
        print(f"aasrdl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _Findings:
        return EXIT_FINDINGS


if __name__ == "__main__":
    sys.exit(main())
