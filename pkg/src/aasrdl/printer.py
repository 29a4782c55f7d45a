"""Source rendering of expressions, statements, and whole models.

Printing is minimal-parenthesis and deterministic; `parse(print(model))`
yields a structurally identical AST (spans aside).
"""

from __future__ import annotations

from .evaluator import format_value
from .model import (
    Assign,
    Binary,
    BoolLit,
    Call,
    ConstRef,
    ControlFlow,
    Expr,
    FloatLit,
    If,
    IntLit,
    Model,
    Unary,
    VarRef,
    VarType,
)

_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
_UNARY_PRECEDENCE = 7


def format_expr(expr: Expr) -> str:
    return _fmt(expr, 0)


def _fmt(expr: Expr, parent_prec: int) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, FloatLit):
        return repr(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, (VarRef, ConstRef)):
        return expr.name
    if isinstance(expr, Unary):
        if expr.op in ("sqrt", "abs"):
            return f"{expr.op}({_fmt(expr.operand, 0)})"
        inner = _fmt(expr.operand, _UNARY_PRECEDENCE)
        if expr.op == "-" and inner.startswith("-"):
            inner = f"({_fmt(expr.operand, 0)})"
        text = f"{expr.op}{inner}"
        return f"({text})" if parent_prec > _UNARY_PRECEDENCE else text
    if isinstance(expr, Binary):
        prec = _PRECEDENCE[expr.op]
        left = _fmt(expr.left, prec)
        right = _fmt(expr.right, prec + 1)  # left-associative
        text = f"{left} {expr.op} {right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"not an expression: {expr!r}")


def format_stmts(stmts: ControlFlow, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for stmt in stmts:
        if isinstance(stmt, Assign):
            lines.append(f"{pad}{stmt.var} = {format_expr(stmt.expr)} ;")
        elif isinstance(stmt, Call):
            lines.append(f"{pad}call {stmt.module} ;")
        elif isinstance(stmt, If):
            lines.append(f"{pad}if ({format_expr(stmt.cond)}) {{")
            lines.append(format_stmts(stmt.then, indent + 1))
            if stmt.orelse:
                lines.append(f"{pad}}} else {{")
                lines.append(format_stmts(stmt.orelse, indent + 1))
            lines.append(f"{pad}}}")
        else:
            raise TypeError(f"not a statement: {stmt!r}")
    return "\n".join(line for line in lines if line != "")


def _block(stmts: ControlFlow, indent: int) -> str:
    if not stmts:
        return "{ }"
    body = format_stmts(stmts, indent + 1)
    return "{\n" + body + "\n" + "  " * indent + "}"


def format_model(model: Model) -> str:
    """Render a model back to its textual form."""
    out = [f"model {model.name}", ""]

    out.append("datadict {")
    for const in model.datadict.constants:
        value = format_value(const.value, const.vtype)
        out.append(f"  const {const.name} : {const.vtype} = {value} ;")
    for decl in model.datadict.entries:
        kw = "input" if decl.kind.value == "input" else "var"
        parts = [f"  {kw} {decl.name} : {decl.vtype}"]
        if decl.init is not None:
            parts.append(f"init {format_value(decl.init, decl.vtype)}")
        if decl.min is not None:
            parts.append(f"min {format_value(decl.min, decl.vtype)}")
        if decl.max is not None:
            parts.append(f"max {format_value(decl.max, decl.vtype)}")
        out.append(" ".join(parts) + " ;")
    out.append("}")
    out.append("")

    for module in model.modules:
        out.append(f"module {module.name} {{")
        out.append("  in { " + " ".join(module.v_in) + " }")
        out.append("  out { " + " ".join(module.v_out) + " }")
        out.append(f"  task {_block(module.task, 1)}")
        out.append("}")
        out.append("")

    for mode in model.modes:
        marker = " init" if mode.name == model.initial_mode else ""
        out.append(f"mode {mode.name}{marker} {{")
        out.append(f"  guard {format_expr(mode.guard)} ;")
        for proc in mode.procedures:
            out.append(f"  procedure period {proc.period} {_block(proc.body, 1)}")
        for trans in mode.transitions:
            line = (f"  transition priority {trans.priority} to {trans.target}"
                    f" when {format_expr(trans.condition)}")
            if trans.action:
                line += f" do {_block(trans.action, 1)}"
            out.append(line + " ;")
        out.append("}")
        out.append("")

    return "\n".join(out).rstrip() + "\n"
