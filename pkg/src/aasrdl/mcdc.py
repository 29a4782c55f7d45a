"""Requirement-level test generation for unique-cause MC/DC coverage.

Every decision (an `if` condition in a module task; with modes scope also
guards, transition conditions, and action decisions) decomposes into
atomic conditions: its maximal subexpressions containing no && or ||. Each
condition owes one obligation — a pair of assignments differing only in
that condition's truth value and flipping the decision outcome.

Paths are collected by symbolic execution of the loop-free statement list:
assignments substitute into a symbolic store, each `if` forks, and a
decision reached on a path is solved under that path's constraint with the
store applied. Witnesses are concrete input valuations; unconstrained
inputs pad with data-dictionary init values, so a test runs against an
implementation without extra fixtures.

Conditions sharing variables can make unique-cause pairs unsatisfiable;
such obligations report infeasible with a `coupled` annotation rather than
silently switching to masking MC/DC.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

from .evaluator import Value, coerce, default_raw
from .model import (
    Assign,
    Binary,
    BoolLit,
    Call,
    ControlFlow,
    Expr,
    If,
    Model,
    ModuleDef,
    SourceSpan,
    Unary,
    VarRef,
    expr_vars,
    walk_expr,
)
from .printer import format_expr
from .solver import Constraint, SolveResult, SolverOptions, solve

MAX_CONDITIONS = 12   # decisions beyond 2^12 vectors report unknown
MAX_PATHS = 4096


# --------------------------------------------------------------------------
# Decisions

@dataclass(frozen=True)
class Decision:
    ident: str  # stable label: owner plus source position
    expr: Expr
    conditions: Tuple[Expr, ...]
    span: Optional[SourceSpan] = None

    def arity(self) -> int:
        return len(self.conditions)


def decompose_conditions(expr: Expr) -> Tuple[Expr, ...]:
    """Maximal subexpressions free of && and ||, in left-to-right order."""
    def has_connective(node: Expr) -> bool:
        return any(isinstance(sub, Binary) and sub.op in ("&&", "||")
                   for sub in walk_expr(node))

    out: List[Expr] = []

    def visit(node: Expr) -> None:
        if isinstance(node, Binary) and node.op in ("&&", "||"):
            visit(node.left)
            visit(node.right)
        elif isinstance(node, Unary) and node.op == "!" and has_connective(node.operand):
            visit(node.operand)
        else:
            out.append(node)

    visit(expr)
    return tuple(out)


def _decision_value(decision: Decision, vector: Sequence[bool]) -> bool:
    """Decision outcome for a truth assignment to its condition positions."""
    values = {id(cond): v for cond, v in zip(decision.conditions, vector)}

    def walk(node: Expr) -> bool:
        if id(node) in values:
            return values[id(node)]
        if isinstance(node, Binary) and node.op == "&&":
            return walk(node.left) and walk(node.right)
        if isinstance(node, Binary) and node.op == "||":
            return walk(node.left) or walk(node.right)
        if isinstance(node, Unary) and node.op == "!":
            return not walk(node.operand)
        raise AssertionError("node outside the decision's boolean spine")

    return walk(decision.expr)


# --------------------------------------------------------------------------
# Symbolic execution

def substitute(expr: Expr, store: Dict[str, Expr]) -> Expr:
    if isinstance(expr, VarRef) and expr.name in store:
        return store[expr.name]
    if isinstance(expr, Unary):
        return Unary(expr.op, substitute(expr.operand, store), expr.span)
    if isinstance(expr, Binary):
        return Binary(expr.op, substitute(expr.left, store),
                      substitute(expr.right, store), expr.span)
    return expr


@dataclass(frozen=True)
class ReachedDecision:
    decision: Decision
    prefix: Tuple[Expr, ...]          # branch constraints before the decision
    conditions: Tuple[Expr, ...]      # condition exprs with the store applied


@dataclass(frozen=True)
class Path:
    constraint: Tuple[Expr, ...]      # full branch conjunction, input terms
    store: Dict[str, Expr] = field(hash=False, compare=False, default_factory=dict)
    reached: Tuple[ReachedDecision, ...] = ()


class PathExplosion(Exception):
    pass


class _SymbolicWalker:
    def __init__(self, model: Optional[Model], owner: str,
                 harvest: bool = True):
        self.model = model
        self.owner = owner
        self.decisions: Dict[int, Decision] = {}  # id(if-cond) -> Decision
        self.paths: List[Path] = []
        self._budget = MAX_PATHS

    def decision_for(self, cond: Expr, label: str) -> Decision:
        key = id(cond)
        if key not in self.decisions:
            self.decisions[key] = Decision(
                label, cond, decompose_conditions(cond), cond.span)
        return self.decisions[key]

    def walk(self, stmts: ControlFlow, store: Dict[str, Expr],
             constraint: Tuple[Expr, ...], reached: Tuple[ReachedDecision, ...],
             harvest: bool, stack: Tuple[str, ...] = ()) -> None:
        stmts = list(stmts)
        for index, stmt in enumerate(stmts):
            if isinstance(stmt, Assign):
                store = dict(store)
                store[stmt.var] = substitute(stmt.expr, store)
            elif isinstance(stmt, Call):
                if self.model is None:
                    continue
                callee = self.model.module(stmt.module)
                if callee is None or stmt.module in stack:
                    continue
                rest = tuple(stmts[index + 1:])

                def resume(sub_store, sub_constraint, sub_reached,
                           _rest=rest, _stack=stack, _harvest=harvest):
                    self.walk(_rest, sub_store, sub_constraint, sub_reached,
                              _harvest, _stack)
                self._walk_nested(callee.task, store, constraint, reached,
                                  False, stack + (stmt.module,), resume)
                return
            elif isinstance(stmt, If):
                rest = tuple(stmts[index + 1:])
                cond_sub = substitute(stmt.cond, store)
                new_reached = reached
                if harvest:
                    where = stmt.cond.span
                    label = (f"{self.owner}@{where.line}:{where.col}"
                             if where else f"{self.owner}@{len(self.decisions)}")
                    decision = self.decision_for(stmt.cond, label)
                    conds_sub = tuple(substitute(c, store)
                                      for c in decision.conditions)
                    new_reached = reached + (ReachedDecision(
                        decision, constraint, conds_sub),)
                neg = Unary("!", cond_sub, stmt.cond.span)
                self._check_budget()
                for branch, extra in ((stmt.then, cond_sub), (stmt.orelse, neg)):
                    def resume(sub_store, sub_constraint, sub_reached,
                               _rest=rest, _stack=stack, _harvest=harvest):
                        self.walk(_rest, sub_store, sub_constraint,
                                  sub_reached, _harvest, _stack)
                    self._walk_nested(branch, store, constraint + (extra,),
                                      new_reached, harvest, stack, resume)
                return
        self.paths.append(Path(constraint, dict(store), reached))

    def _walk_nested(self, stmts, store, constraint, reached, harvest, stack,
                     resume: Callable) -> None:
        inner = _SymbolicWalker(self.model, self.owner)
        inner.decisions = self.decisions
        inner._budget = self._budget
        inner.walk(stmts, store, constraint, reached, harvest, stack)
        self._budget = inner._budget
        for path in inner.paths:
            resume(path.store, path.constraint, path.reached)

    def _check_budget(self) -> None:
        self._budget -= 1
        if self._budget <= 0:
            raise PathExplosion(
                f"more than {MAX_PATHS} paths in '{self.owner}'")


def enumerate_paths(task: ControlFlow, model: Optional[Model] = None,
                    owner: str = "task") -> List[Path]:
    """All execution paths of a loop-free statement list.

    Each path carries its branch-constraint conjunction in symbolic-input
    terms, the final symbolic store, and the decisions it reached.
    """
    walker = _SymbolicWalker(model, owner)
    walker.walk(task, {}, (), (), harvest=True)
    return walker.paths


# --------------------------------------------------------------------------
# Obligations and test cases

@dataclass
class TestCase:
    decision: Decision
    vector: Tuple[bool, ...]
    expected: bool
    inputs: Dict[str, Value]
    path_constraint: Tuple[Expr, ...]
    obligations: List[int] = field(default_factory=list)


@dataclass
class Obligation:
    decision: Decision
    index: int  # condition position
    status: str = "unknown"  # solved | infeasible | unknown
    coupled: bool = False
    pair: Optional[Tuple[TestCase, TestCase]] = None


@dataclass
class DecisionReport:
    decision: Decision
    obligations: List[Obligation]
    cases: List[TestCase]

    @property
    def solved(self) -> int:
        return sum(1 for o in self.obligations if o.status == "solved")

    @property
    def infeasible(self) -> int:
        return sum(1 for o in self.obligations if o.status == "infeasible")

    @property
    def unknown(self) -> int:
        return sum(1 for o in self.obligations if o.status == "unknown")

    def percentage(self, exclude_infeasible: bool = False) -> float:
        denom = len(self.obligations)
        if exclude_infeasible:
            denom -= self.infeasible
        if denom <= 0:
            return 100.0
        return 100.0 * self.solved / denom


@dataclass
class TestSuite:
    target: str  # module name, or "<modes>" for mode-level decisions
    reports: List[DecisionReport]

    @property
    def cases(self) -> List[TestCase]:
        return [case for report in self.reports for case in report.cases]

    @property
    def obligations(self) -> List[Obligation]:
        return [o for report in self.reports for o in report.obligations]


def mcdc_obligations(decision: Decision) -> List[Obligation]:
    """One unsolved obligation per condition position."""
    return [Obligation(decision, i) for i in range(decision.arity())]


def _candidate_pairs(decision: Decision, index: int) -> List[Tuple[Tuple[bool, ...], Tuple[bool, ...]]]:
    """Vector pairs differing only at `index` with differing outcomes.

    Ordered to prefer mostly-true vectors, which reproduces the classic
    one-false-per-row table for conjunctions.
    """
    k = decision.arity()
    pairs = []
    for bits in itertools.product((True, False), repeat=k):
        if not bits[index]:
            continue
        flipped = tuple(b if i != index else False for i, b in enumerate(bits))
        v_true = _decision_value(decision, bits)
        v_flip = _decision_value(decision, flipped)
        if v_true == v_flip:
            continue
        positive = bits if v_true else flipped
        negative = flipped if v_true else bits
        pairs.append((positive, negative))
    pairs.sort(key=lambda p: (-sum(p[0]), [not b for b in p[0]]))
    return pairs


class _DecisionSolver:
    """Realizes condition vectors of one decision over its reach records."""

    def __init__(self, model: Model, module: Optional[ModuleDef],
                 decision: Decision, records: List[ReachedDecision],
                 solve_fn: Callable[[Constraint], SolveResult]):
        self.model = model
        self.module = module
        self.decision = decision
        self.records = records
        self.solve_fn = solve_fn
        self._memo: Dict[Tuple[bool, ...], Optional[TestCase]] = {}
        self.saw_unknown = False

    def realize(self, vector: Tuple[bool, ...]) -> Optional[TestCase]:
        if vector in self._memo:
            return self._memo[vector]
        case: Optional[TestCase] = None
        for record in self.records:
            exprs = list(record.prefix)
            for cond, value in zip(record.conditions, vector):
                exprs.append(cond if value
                             else Unary("!", cond, cond.span))
            try:
                constraint = Constraint.from_exprs(exprs, self.model.datadict)
            except ValueError:
                continue  # undeclared variable; model checker reports it
            result = self.solve_fn(constraint)
            if result.is_sat:
                case = TestCase(
                    decision=self.decision,
                    vector=vector,
                    expected=_decision_value(self.decision, vector),
                    inputs=self._pad_inputs(result.witness),
                    path_constraint=record.prefix,
                )
                break
            if result.is_unknown:
                self.saw_unknown = True
        self._memo[vector] = case
        return case

    def _pad_inputs(self, witness: Dict[str, Value]) -> Dict[str, Value]:
        inputs: Dict[str, Value] = {}
        names = list(self.module.v_in) if self.module else []
        for name in witness:
            if name not in names:
                names.append(name)
        for name in names:
            if name in witness:
                inputs[name] = witness[name]
                continue
            decl = self.model.datadict.var(name)
            if decl is None:
                continue
            raw = decl.init if decl.init is not None else default_raw(decl.vtype)
            inputs[name] = Value(decl.vtype, coerce(raw, decl.vtype))
        return inputs


def _solve_decision(model: Model, module: Optional[ModuleDef],
                    decision: Decision, records: List[ReachedDecision],
                    solve_fn) -> DecisionReport:
    solver = _DecisionSolver(model, module, decision, records, solve_fn)
    obligations = mcdc_obligations(decision)
    cases: List[TestCase] = []
    emitted: Dict[Tuple[bool, ...], TestCase] = {}

    shared_vars = [expr_vars(c) for c in decision.conditions]

    for obligation in obligations:
        solved_pair = None
        for positive, negative in _candidate_pairs(decision, obligation.index):
            pos_case = solver.realize(positive)
            if pos_case is None:
                continue
            neg_case = solver.realize(negative)
            if neg_case is None:
                continue
            solved_pair = (pos_case, neg_case)
            break
        if solved_pair is not None:
            obligation.status = "solved"
            obligation.pair = solved_pair
            for case in solved_pair:
                if case.vector not in emitted:
                    emitted[case.vector] = case
                    cases.append(case)
                emitted[case.vector].obligations.append(obligation.index)
        elif solver.saw_unknown:
            obligation.status = "unknown"
        else:
            obligation.status = "infeasible"
            mine = shared_vars[obligation.index]
            obligation.coupled = bool(mine) and any(
                i != obligation.index and others and (mine & others)
                for i, others in enumerate(shared_vars))
    return DecisionReport(decision, obligations, cases)


def _default_solve(options: Optional[SolverOptions]):
    return lambda constraint: solve(constraint, options)


def generate_tests(model: Model, module_name: str,
                   solve_fn=None,
                   options: Optional[SolverOptions] = None) -> TestSuite:
    """Unique-cause MC/DC test suite for every decision in a module task."""
    module = model.module(module_name)
    if module is None:
        raise ValueError(f"unknown module '{module_name}'")
    run_solve = solve_fn or _default_solve(options)
    paths = enumerate_paths(module.task, model, owner=module_name)

    by_decision: Dict[str, Tuple[Decision, List[ReachedDecision]]] = {}
    for path in paths:
        for record in path.reached:
            entry = by_decision.setdefault(record.decision.ident,
                                           (record.decision, []))
            if record not in entry[1]:
                entry[1].append(record)

    reports = [
        _solve_decision(model, module, decision, records, run_solve)
        for decision, records in by_decision.values()
    ]
    return TestSuite(module_name, reports)


def generate_mode_tests(model: Model, solve_fn=None,
                        options: Optional[SolverOptions] = None) -> TestSuite:
    """MC/DC suite over mode guards, transition conditions, and actions."""
    run_solve = solve_fn or _default_solve(options)
    reports: List[DecisionReport] = []

    def top_level(expr: Expr, label: str) -> None:
        decision = Decision(label, expr, decompose_conditions(expr), expr.span)
        record = ReachedDecision(decision, (), decision.conditions)
        reports.append(_solve_decision(model, None, decision, [record],
                                       run_solve))

    for mode in model.modes:
        top_level(mode.guard, f"mode {mode.name} guard")
        for trans in mode.transitions:
            top_level(trans.condition,
                      f"mode {mode.name} transition {trans.priority}")
            if trans.action:
                walker = _SymbolicWalker(
                    model, f"mode {mode.name} action {trans.priority}")
                walker.walk(trans.action, {}, (), (), harvest=True)
                by_decision: Dict[str, Tuple[Decision, List[ReachedDecision]]] = {}
                for path in walker.paths:
                    for record in path.reached:
                        entry = by_decision.setdefault(
                            record.decision.ident, (record.decision, []))
                        if record not in entry[1]:
                            entry[1].append(record)
                for decision, records in by_decision.values():
                    reports.append(_solve_decision(model, None, decision,
                                                   records, run_solve))
    return TestSuite("<modes>", reports)


# --------------------------------------------------------------------------
# Export

def export_tests(suite: TestSuite, model: Model) -> str:
    """CSV: input-variable columns, expected outcome, decision location.

    Rows are ordered by decision then obligation index; a valuation shared
    by several obligations appears once.
    """
    input_names: List[str] = []
    for decl in model.datadict.entries:
        if any(decl.name in case.inputs for case in suite.cases):
            input_names.append(decl.name)

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(input_names + ["expected_decision", "decision"])
    for report in suite.reports:
        for case in report.cases:
            row = []
            for name in input_names:
                value = case.inputs.get(name)
                row.append(str(value) if value is not None else "")
            row.append("true" if case.expected else "false")
            row.append(case.decision.ident)
            writer.writerow(row)
    return out.getvalue()


def render_coverage(suites: Sequence[TestSuite],
                    exclude_infeasible: bool = False) -> str:
    lines = []
    for suite in suites:
        total_solved = sum(r.solved for r in suite.reports)
        total = sum(len(r.obligations) for r in suite.reports)
        lines.append(f"{suite.target}: {len(suite.cases)} test case(s), "
                     f"{total_solved}/{total} obligation(s) solved")
        for report in suite.reports:
            d = report.decision
            flags = ""
            if any(o.coupled for o in report.obligations):
                flags = " [coupled]"
            lines.append(
                f"  {d.ident}: {format_expr(d.expr)}\n"
                f"    obligations={len(report.obligations)} "
                f"solved={report.solved} infeasible={report.infeasible} "
                f"unknown={report.unknown} "
                f"mcdc={report.percentage(exclude_infeasible):.1f}%{flags}")
    return "\n".join(lines) + "\n"
