"""Review diagrams rendered as deterministic DOT text.

Three views: the mode transition graph, the module call sequence of one
mode, and the variable dependency graph of one module. Emission order
follows model declaration order, so output is byte-stable across runs and
suitable for golden-file comparison. Layout and rasterization are left to
any DOT viewer.
"""

from __future__ import annotations

from typing import List, Optional

from .analysis import build_dep_graph, find_cycles
from .model import Call, Mode, Model, ModuleDef, walk_stmts
from .printer import format_expr

LABEL_LIMIT = 60  # longer edge labels are elided with a tooltip


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _attrs(attrs: dict) -> str:
    if not attrs:
        return ""
    parts = [f"{key}={_quote(str(value))}" for key, value in attrs.items()]
    return " [" + ", ".join(parts) + "]"


class DotGraph:
    """A directed graph that serializes to stable DOT text."""

    def __init__(self, name: str):
        self.name = name
        self._lines: List[str] = []
        self._indent = 1
        self.node_count = 0
        self.edge_count = 0

    def raw(self, line: str) -> None:
        self._lines.append("  " * self._indent + line)

    def node(self, node_id: str, **attrs) -> None:
        self.node_count += 1
        self.raw(f"{_quote(node_id)}{_attrs(attrs)};")

    def edge(self, src: str, dst: str, **attrs) -> None:
        self.edge_count += 1
        self.raw(f"{_quote(src)} -> {_quote(dst)}{_attrs(attrs)};")

    def begin_cluster(self, cluster_id: str, label: str) -> None:
        self.raw(f"subgraph {_quote('cluster_' + cluster_id)} {{")
        self._indent += 1
        self.raw(f"label={_quote(label)};")

    def end_cluster(self) -> None:
        self._indent -= 1
        self.raw("}")

    def to_dot(self) -> str:
        head = [f"digraph {_quote(self.name)} {{",
                "  rankdir=LR;",
                '  node [shape=box];']
        return "\n".join(head + self._lines + ["}"]) + "\n"


def _edge_label(text: str) -> dict:
    if len(text) > LABEL_LIMIT:
        return {"label": text[:LABEL_LIMIT - 1] + "…", "tooltip": text}
    return {"label": text}


def mode_transition_diagram(model: Model) -> DotGraph:
    """One node per mode (initial marked), one labeled edge per transition."""
    graph = DotGraph(f"{model.name} modes")
    for mode in model.modes:
        if mode.name == model.initial_mode:
            graph.node(mode.name, peripheries="2")
        else:
            graph.node(mode.name)
    for mode in model.modes:
        for trans in mode.transitions:
            label = f"[{trans.priority}] {format_expr(trans.condition)}"
            graph.edge(mode.name, trans.target, **_edge_label(label))
    return graph


def _calls_in_order(stmts) -> List[str]:
    return [s.module for s in walk_stmts(stmts) if isinstance(s, Call)]


def module_relation_diagram(model: Model, mode_name: str) -> DotGraph:
    """Call sequence of each procedure of one mode, one cluster per procedure."""
    mode: Optional[Mode] = model.mode(mode_name)
    if mode is None:
        raise ValueError(f"unknown mode '{mode_name}'")
    graph = DotGraph(f"{model.name} {mode_name} modules")
    for index, proc in enumerate(mode.procedures):
        graph.begin_cluster(f"p{index}", f"period={proc.period}")
        calls = _calls_in_order(proc.body)
        seen = []
        for name in calls:
            if name not in seen:
                graph.node(f"p{index}.{name}", label=name)
                seen.append(name)
        for left, right in zip(calls, calls[1:]):
            graph.edge(f"p{index}.{left}", f"p{index}.{right}")
        graph.end_cluster()
    return graph


def variable_dependency_diagram(module: ModuleDef,
                                model: Optional[Model] = None) -> DotGraph:
    """Reads-feed-writes graph; inputs filled, outputs double-bordered,
    cycle members red."""
    dep = build_dep_graph(module, model)
    in_cycle = {name for cycle in find_cycles(dep) for name in cycle}
    graph = DotGraph(f"{module.name} variables")
    for name in dep.nodes:
        attrs = {}
        if name in module.v_in:
            attrs["style"] = "filled"
            attrs["fillcolor"] = "lightgrey"
        if name in module.v_out:
            attrs["peripheries"] = "2"
        if name in in_cycle:
            attrs["color"] = "red"
            attrs["fontcolor"] = "red"
        graph.node(name, **attrs)
    for src, dst in dep.edges:
        attrs = {"color": "red"} if src in in_cycle and dst in in_cycle else {}
        graph.edge(src, dst, **attrs)
    return graph
