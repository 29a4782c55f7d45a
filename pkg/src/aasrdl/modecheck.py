"""Transition exclusiveness and mode reachability checking.

Exclusiveness: no two transition conditions of one mode may be
simultaneously satisfiable. Each unordered pair is checked statically as a
pure condition overlap — a Sat verdict yields a violation with a verified
witness; Unknown verdicts are reported as warnings, never dropped.

Reachability: a mode is reachable when a chain of transitions from the
initial mode exists whose conditions are each individually satisfiable and
whose own guard is satisfiable. Unknown satisfiability is treated as
satisfiable, so unreachability reports are never false alarms caused by
solver incompleteness.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from .evaluator import Value
from .model import Model, Transition
from .printer import format_expr
from .solver import Constraint, SolveResult, SolverOptions, solve


@dataclass(frozen=True)
class ExclusivenessViolation:
    mode: str
    first: Transition
    second: Transition
    witness: Dict[str, Value]

    def witness_text(self) -> str:
        return " ".join(f"{name}={value}"
                        for name, value in sorted(self.witness.items()))


@dataclass(frozen=True)
class ExclusivenessUnknown:
    mode: str
    first: Transition
    second: Transition
    reason: str


@dataclass
class ExclusivenessReport:
    violations: List[ExclusivenessViolation] = field(default_factory=list)
    unknowns: List[ExclusivenessUnknown] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations


@dataclass
class ReachabilityReport:
    reachable: Tuple[str, ...]
    unreachable: Tuple[str, ...]
    # mode -> chain of (source mode, priority, target mode) from the initial
    paths: Dict[str, Tuple[Tuple[str, int, str], ...]]

    @property
    def clean(self) -> bool:
        return not self.unreachable


SolveFn = Callable[[Constraint], SolveResult]


def _default_solve_fn(options: Optional[SolverOptions]) -> SolveFn:
    return lambda constraint: solve(constraint, options)


def check_exclusiveness(model: Model,
                        solve_fn: Optional[SolveFn] = None,
                        options: Optional[SolverOptions] = None) -> ExclusivenessReport:
    """Pairwise overlap check of every mode's transition conditions."""
    run = solve_fn or _default_solve_fn(options)
    report = ExclusivenessReport()
    for mode in model.modes:
        transitions = sorted(mode.transitions, key=lambda t: t.priority)
        for i, first in enumerate(transitions):
            for second in transitions[i + 1:]:
                constraint = Constraint.from_exprs(
                    [first.condition, second.condition], model.datadict)
                result = run(constraint)
                if result.is_sat:
                    report.violations.append(ExclusivenessViolation(
                        mode.name, first, second, result.witness))
                elif result.is_unknown:
                    report.unknowns.append(ExclusivenessUnknown(
                        mode.name, first, second, result.reason or "unknown"))
    return report


def check_reachability(model: Model,
                       solve_fn: Optional[SolveFn] = None,
                       options: Optional[SolverOptions] = None) -> ReachabilityReport:
    """Graph search over the satisfiability-pruned transition graph."""
    run = solve_fn or _default_solve_fn(options)
    satisfiable_cache: Dict[int, bool] = {}

    def satisfiable(expr) -> bool:
        key = id(expr)
        if key not in satisfiable_cache:
            constraint = Constraint.from_exprs([expr], model.datadict)
            satisfiable_cache[key] = not run(constraint).is_unsat
        return satisfiable_cache[key]

    paths: Dict[str, Tuple[Tuple[str, int, str], ...]] = {}
    if model.initial_mode:
        paths[model.initial_mode] = ()
    frontier = [model.initial_mode] if model.initial_mode else []
    while frontier:
        current = frontier.pop(0)
        mode = model.mode(current)
        if mode is None:
            continue
        for trans in sorted(mode.transitions, key=lambda t: t.priority):
            target = model.mode(trans.target)
            if target is None or trans.target in paths:
                continue
            if not satisfiable(trans.condition):
                continue
            if not satisfiable(target.guard):
                continue
            paths[trans.target] = paths[current] + (
                (current, trans.priority, trans.target),)
            frontier.append(trans.target)

    reachable = tuple(m.name for m in model.modes if m.name in paths)
    unreachable = tuple(m.name for m in model.modes if m.name not in paths)
    return ReachabilityReport(reachable, unreachable, paths)


# --------------------------------------------------------------------------
# Report rendering

def _transition_label(trans: Transition) -> str:
    return f"[{trans.priority}] {format_expr(trans.condition)}"


def render_exclusiveness(report: ExclusivenessReport) -> str:
    lines = [f"exclusiveness: {len(report.violations)} violation(s), "
             f"{len(report.unknowns)} unknown pair(s)"]
    for v in report.violations:
        lines.append(f"mode {v.mode}: {_transition_label(v.first)} and "
                     f"{_transition_label(v.second)} overlap at "
                     f"{v.witness_text()}")
    for u in report.unknowns:
        lines.append(f"mode {u.mode}: {_transition_label(u.first)} and "
                     f"{_transition_label(u.second)} undecided ({u.reason})")
    return "\n".join(lines) + "\n"


def render_reachability(report: ReachabilityReport) -> str:
    lines = [f"reachability: {len(report.unreachable)} unreachable mode(s)"]
    lines.append("reachable: " + (" ".join(report.reachable) or "(none)"))
    if report.unreachable:
        lines.append("unreachable: " + " ".join(report.unreachable))
    for mode in report.reachable:
        chain = report.paths.get(mode, ())
        if chain:
            steps = " ".join(f"{src} -[{prio}]-> {dst}"
                             for src, prio, dst in chain)
            lines.append(f"path to {mode}: {steps}")
    return "\n".join(lines) + "\n"


def exclusiveness_csv(report: ExclusivenessReport) -> str:
    """One row per violation: mode, both transitions, witness pairs."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["mode", "priority_a", "condition_a",
                     "priority_b", "condition_b", "witness"])
    for v in report.violations:
        writer.writerow([v.mode, v.first.priority, format_expr(v.first.condition),
                         v.second.priority, format_expr(v.second.condition),
                         v.witness_text()])
    return out.getvalue()
