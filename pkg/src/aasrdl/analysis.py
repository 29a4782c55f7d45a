"""Model-level well-formedness checks and variable dependency graphs.

The checks reconstruct the error classes that slip through textual review:
misspelled or undeclared names, reads of never-initialized variables,
module input/output lists that disagree with the task body, modules nothing
calls, and circular variable dependencies.

Use-before-init is deliberately path-insensitive and over-approximate: a
read is flagged when any control-flow path reaches it before an assignment.
False positives are acceptable — the output is a human-reviewed diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import networkx as nx

from .model import (
    Assign,
    Call,
    ConstRef,
    ControlFlow,
    Expr,
    If,
    Mode,
    Model,
    ModuleDef,
    SourceSpan,
    VarRef,
    walk_expr,
)

CODES = (
    "UndefinedVariable",
    "UseBeforeInit",
    "UndeclaredInput",
    "UndeclaredOutput",
    "UnusedDeclaredIO",
    "DuplicateName",
    "UncalledModule",
    "CircularDependency",
)

_WARNING_CODES = {"UnusedDeclaredIO", "UncalledModule"}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    span: Optional[SourceSpan]
    detail: str

    @property
    def severity(self) -> str:
        if self.code == "CircularDependency" and "call cycle" not in self.detail:
            return "warning"
        return "warning" if self.code in _WARNING_CODES else "error"

    def __str__(self) -> str:
        where = str(self.span) if self.span else "<model>:0:0"
        return f"{self.code} {where} {self.detail}"


def serialize_diagnostics(diags: Sequence[Diagnostic]) -> str:
    """Line-oriented report, stable ordering (file, line, code)."""
    return "\n".join(str(d) for d in sort_diagnostics(diags))


def sort_diagnostics(diags: Sequence[Diagnostic]) -> List[Diagnostic]:
    def key(d: Diagnostic):
        span = d.span
        return (span.file if span else "<model>",
                span.line if span else 0,
                span.col if span else 0,
                d.code, d.detail)
    return sorted(diags, key=key)


# --------------------------------------------------------------------------
# Dependency graph

@dataclass
class DepGraph:
    """Directed reads-feed-writes graph: edge (x, y) means y's value reads x."""

    nodes: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    scope: str  # module name or "<model>"

    def successors(self, name: str) -> List[str]:
        return [b for a, b in self.edges if a == name]


def _expr_reads(expr: Expr) -> List[str]:
    return [node.name for node in walk_expr(expr) if isinstance(node, VarRef)]


def _collect_edges(stmts: ControlFlow, control: Tuple[str, ...],
                   edges: List[Tuple[str, str]], order: List[str],
                   model: Optional[Model]) -> None:
    def note(name: str) -> None:
        if name not in order:
            order.append(name)

    for stmt in stmts:
        if isinstance(stmt, Assign):
            reads = _expr_reads(stmt.expr)
            note(stmt.var)
            for src in list(control) + reads:
                note(src)
                edges.append((src, stmt.var))
        elif isinstance(stmt, If):
            cond_reads = tuple(_expr_reads(stmt.cond))
            for name in cond_reads:
                note(name)
            inner = control + cond_reads
            _collect_edges(stmt.then, inner, edges, order, model)
            _collect_edges(stmt.orelse, inner, edges, order, model)
        elif isinstance(stmt, Call) and model is not None:
            callee = model.module(stmt.module)
            if callee is None:
                continue
            # a call contributes its declared interface: every input (plus
            # the control context) feeds every output
            for out in callee.v_out:
                note(out)
                for src in list(control) + list(callee.v_in):
                    note(src)
                    edges.append((src, out))


def build_dep_graph(module: ModuleDef, model: Optional[Model] = None) -> DepGraph:
    """Dependency graph of one module's task.

    Node order is deterministic: first appearance while walking the task,
    with declared inputs and outputs always present.
    """
    edges: List[Tuple[str, str]] = []
    order: List[str] = list(module.v_in)
    for name in module.v_out:
        if name not in order:
            order.append(name)
    _collect_edges(module.task, (), edges, order, model)
    unique = list(dict.fromkeys(edges))
    return DepGraph(tuple(order), tuple(unique), module.name)


def model_dep_graph(model: Model) -> DepGraph:
    """Union graph over every task, procedure body, and transition action."""
    edges: List[Tuple[str, str]] = []
    order: List[str] = []
    for module in model.modules:
        _collect_edges(module.task, (), edges, order, model)
    for mode in model.modes:
        for proc in mode.procedures:
            _collect_edges(proc.body, (), edges, order, model)
        for trans in mode.transitions:
            _collect_edges(trans.action, (), edges, order, model)
    unique = list(dict.fromkeys(edges))
    return DepGraph(tuple(order), tuple(unique), "<model>")


def find_cycles(graph: DepGraph) -> List[List[str]]:
    """Every elementary cycle, each rotated to start at its smallest node.

    Returns [] iff the graph is acyclic. Self-loops come out as one-element
    cycles. Output order is deterministic (sorted by length, then content).
    """
    g = nx.DiGraph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from(graph.edges)
    cycles = []
    for cycle in nx.simple_cycles(g):
        k = cycle.index(min(cycle))
        cycles.append(cycle[k:] + cycle[:k])
    cycles.sort(key=lambda c: (len(c), c))
    return cycles


# --------------------------------------------------------------------------
# Read/write walking with a must-assign set

class _ReadWalker:
    """Walks control flow tracking variables assigned on every path.

    on_read(name, span, assigned_before) fires for each variable read;
    on_write(name, span) for each assignment target. Calls either follow the
    callee's declared interface or inline its body.
    """

    def __init__(self, model: Optional[Model], inline_bodies: bool,
                 on_read: Callable, on_write: Callable):
        self.model = model
        self.inline_bodies = inline_bodies
        self.on_read = on_read
        self.on_write = on_write

    def read_expr(self, expr: Expr, assigned: Set[str]) -> None:
        for node in walk_expr(expr):
            if isinstance(node, VarRef):
                self.on_read(node.name, node.span, node.name in assigned)

    def walk(self, stmts: ControlFlow, assigned: Set[str],
             stack: Tuple[str, ...] = ()) -> Set[str]:
        assigned = set(assigned)
        for stmt in stmts:
            if isinstance(stmt, Assign):
                self.read_expr(stmt.expr, assigned)
                self.on_write(stmt.var, stmt.span)
                assigned.add(stmt.var)
            elif isinstance(stmt, If):
                self.read_expr(stmt.cond, assigned)
                then_set = self.walk(stmt.then, assigned, stack)
                else_set = self.walk(stmt.orelse, assigned, stack)
                assigned |= then_set & else_set
            elif isinstance(stmt, Call):
                callee = self.model.module(stmt.module) if self.model else None
                if callee is None:
                    continue
                if self.inline_bodies:
                    if stmt.module in stack:
                        continue  # call cycle; reported separately
                    assigned = self.walk(callee.task, assigned,
                                         stack + (stmt.module,))
                else:
                    for name in callee.v_in:
                        self.on_read(name, stmt.span, name in assigned)
                    for name in callee.v_out:
                        self.on_write(name, stmt.span)
                        assigned.add(name)
        return assigned


# --------------------------------------------------------------------------
# Model checker

def _called_modules(stmts: ControlFlow) -> List[str]:
    from .model import walk_stmts
    return [s.module for s in walk_stmts(stmts) if isinstance(s, Call)]


def check_model(model: Model) -> List[Diagnostic]:
    """All well-formedness findings for a model, stable order."""
    diags: Set[Diagnostic] = set()
    dd = model.datadict

    def declared(name: str) -> bool:
        return dd.var(name) is not None or dd.const(name) is not None

    # duplicate names (parsed models are already clean; programmatic ones
    # may not be)
    for group, what in (([v.name for v in dd.entries]
                         + [c.name for c in dd.constants], "variable"),
                        ([m.name for m in model.modes], "mode"),
                        ([m.name for m in model.modules], "module")):
        seen: Set[str] = set()
        for name in group:
            if name in seen:
                diags.add(Diagnostic("DuplicateName", None,
                                     f"duplicate {what} name '{name}'"))
            seen.add(name)

    # undefined names anywhere an identifier may appear
    def scan_undefined(expr: Expr) -> None:
        for node in walk_expr(expr):
            if isinstance(node, (VarRef, ConstRef)) and not declared(node.name):
                diags.add(Diagnostic(
                    "UndefinedVariable", node.span,
                    f"'{node.name}' is not declared in the data dictionary"))

    def scan_stmts(stmts: ControlFlow) -> None:
        from .model import walk_stmts
        for stmt in walk_stmts(stmts):
            if isinstance(stmt, Assign):
                scan_undefined(stmt.expr)
                if not declared(stmt.var):
                    diags.add(Diagnostic(
                        "UndefinedVariable", stmt.span,
                        f"'{stmt.var}' is not declared in the data dictionary"))
            elif isinstance(stmt, If):
                scan_undefined(stmt.cond)

    for mode in model.modes:
        scan_undefined(mode.guard)
        for proc in mode.procedures:
            scan_stmts(proc.body)
        for trans in mode.transitions:
            scan_undefined(trans.condition)
            scan_stmts(trans.action)
    for module in model.modules:
        scan_stmts(module.task)
        for name in module.v_in + module.v_out:
            if not declared(name):
                diags.add(Diagnostic(
                    "UndefinedVariable", module.span,
                    f"'{name}' (module '{module.name}' interface) is not "
                    f"declared in the data dictionary"))

    # use-before-init over one cycle of each mode, module bodies inlined
    def read_check(name: str, span, assigned_before: bool) -> None:
        decl = dd.var(name)
        if decl is None or assigned_before:
            return
        if decl.init is None and decl.kind.value != "input":
            diags.add(Diagnostic(
                "UseBeforeInit", span,
                f"'{name}' has no initial value and may be read before "
                f"assignment"))

    for mode in model.modes:
        walker = _ReadWalker(model, inline_bodies=True,
                             on_read=read_check, on_write=lambda n, s: None)
        assigned: Set[str] = set()
        walker.read_expr(mode.guard, assigned)
        for proc in mode.procedures:
            assigned = walker.walk(proc.body, assigned)
        for trans in mode.transitions:
            walker.read_expr(trans.condition, assigned)
            walker.walk(trans.action, assigned)

    # module interface conformance
    for module in model.modules:
        reads_before: Dict[str, Optional[SourceSpan]] = {}
        reads_all: Set[str] = set()
        writes: Dict[str, Optional[SourceSpan]] = {}

        def on_read(name, span, assigned_before,
                    _rb=reads_before, _ra=reads_all):
            _ra.add(name)
            if not assigned_before and name not in _rb:
                _rb[name] = span

        def on_write(name, span, _w=writes):
            if name not in _w:
                _w[name] = span

        walker = _ReadWalker(model, inline_bodies=False,
                             on_read=on_read, on_write=on_write)
        walker.walk(module.task, set())

        for name, span in sorted(reads_before.items()):
            if dd.var(name) is None:
                continue  # constants and undefined names are not inputs
            if name not in module.v_in:
                diags.add(Diagnostic(
                    "UndeclaredInput", span,
                    f"module '{module.name}' reads '{name}' but does not "
                    f"declare it as an input"))
        for name, span in sorted(writes.items()):
            if name not in module.v_out and dd.var(name) is not None:
                diags.add(Diagnostic(
                    "UndeclaredOutput", span,
                    f"module '{module.name}' writes '{name}' but does not "
                    f"declare it as an output"))
        for name in module.v_in:
            if name not in reads_all:
                diags.add(Diagnostic(
                    "UnusedDeclaredIO", module.span,
                    f"module '{module.name}' declares input '{name}' but "
                    f"never reads it"))
        for name in module.v_out:
            if name not in writes:
                diags.add(Diagnostic(
                    "UnusedDeclaredIO", module.span,
                    f"module '{module.name}' declares output '{name}' but "
                    f"never writes it"))

    # modules no mode reaches
    call_graph: Dict[str, List[str]] = {
        m.name: _called_modules(m.task) for m in model.modules}
    reached: Set[str] = set()
    frontier: List[str] = []
    for mode in model.modes:
        for proc in mode.procedures:
            frontier.extend(_called_modules(proc.body))
        for trans in mode.transitions:
            frontier.extend(_called_modules(trans.action))
    while frontier:
        name = frontier.pop()
        if name in reached:
            continue
        reached.add(name)
        frontier.extend(call_graph.get(name, []))
    for module in model.modules:
        if module.name not in reached:
            diags.add(Diagnostic(
                "UncalledModule", module.span,
                f"module '{module.name}' is never called from any mode"))

    # circular dependencies: module call cycles break execution outright,
    # variable cycles are review findings
    call_g = nx.DiGraph()
    call_g.add_nodes_from(call_graph)
    for src, targets in call_graph.items():
        for dst in targets:
            if dst in call_graph:
                call_g.add_edge(src, dst)
    for cycle in sorted(nx.simple_cycles(call_g)):
        k = cycle.index(min(cycle))
        rotated = cycle[k:] + cycle[:k]
        diags.add(Diagnostic(
            "CircularDependency", None,
            "module call cycle: " + " -> ".join(rotated + [rotated[0]])))

    for cycle in find_cycles(model_dep_graph(model)):
        diags.add(Diagnostic(
            "CircularDependency", None,
            "variable dependency cycle: " + " -> ".join(cycle + [cycle[0]])))

    return sort_diagnostics(diags)
