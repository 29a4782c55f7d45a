"""Core AST for mode-based periodic control models.

A model is a set of modes (guard + periodic procedures + prioritized
transitions), a set of computation modules with declared input/output
variables, and a data dictionary of typed, bounded, initialized variables.
Expressions and statements are loop-free and C-styled.

All nodes are frozen dataclasses carrying an optional source span; models
built programmatically may leave spans as None. `strip_spans` produces a
span-free copy for structural comparison.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    """Half-open region of an input file, 1-based lines and columns."""

    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class VarType(Enum):
    BOOL = "bool"
    INT32 = "int32"
    FLOAT32 = "float32"
    FLOAT64 = "float64"

    @property
    def is_numeric(self) -> bool:
        return self is not VarType.BOOL

    @property
    def is_float(self) -> bool:
        return self in (VarType.FLOAT32, VarType.FLOAT64)

    def __str__(self) -> str:
        return self.value


INT32_MIN = -(2**31)
INT32_MAX = 2**31 - 1
FLOAT32_MAX = 3.4028234663852886e38
FLOAT64_MAX = 1.7976931348623157e308


def type_range(vtype: VarType) -> tuple:
    """Full representable range of a numeric type (bool has none)."""
    if vtype is VarType.INT32:
        return (INT32_MIN, INT32_MAX)
    if vtype is VarType.FLOAT32:
        return (-FLOAT32_MAX, FLOAT32_MAX)
    if vtype is VarType.FLOAT64:
        return (-FLOAT64_MAX, FLOAT64_MAX)
    raise ValueError(f"no numeric range for {vtype}")


# --------------------------------------------------------------------------
# Expressions

@dataclass(frozen=True)
class IntLit:
    value: int
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class FloatLit:
    value: float
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class VarRef:
    name: str
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class ConstRef:
    name: str
    span: Optional[SourceSpan] = None


UNARY_OPS = ("-", "!", "sqrt", "abs")
BINARY_OPS = ("+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=",
              "&&", "||")


@dataclass(frozen=True)
class Unary:
    op: str  # one of UNARY_OPS
    operand: "Expr"
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Binary:
    op: str  # one of BINARY_OPS
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = None


Expr = Union[IntLit, FloatLit, BoolLit, VarRef, ConstRef, Unary, Binary]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


# --------------------------------------------------------------------------
# Statements

@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple  # tuple[Stmt, ...]
    orelse: tuple  # tuple[Stmt, ...]
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Call:
    module: str
    span: Optional[SourceSpan] = None


Stmt = Union[Assign, If, Call]
ControlFlow = tuple  # tuple[Stmt, ...]


# --------------------------------------------------------------------------
# Declarations

class VarKind(Enum):
    INTERNAL = "internal"
    INPUT = "input"


@dataclass(frozen=True)
class VarDecl:
    name: str
    vtype: VarType
    init: Optional[object]  # raw python value in vtype, or None (no init)
    min: Optional[object] = None
    max: Optional[object] = None
    kind: VarKind = VarKind.INTERNAL
    span: Optional[SourceSpan] = None

    def bounds(self) -> tuple:
        """Declared (min, max), falling back to the full type range."""
        lo, hi = type_range(self.vtype) if self.vtype.is_numeric else (None, None)
        return (self.min if self.min is not None else lo,
                self.max if self.max is not None else hi)


@dataclass(frozen=True)
class ConstDecl:
    name: str
    vtype: VarType
    value: object
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class DataDict:
    entries: tuple = ()  # tuple[VarDecl, ...]
    constants: tuple = ()  # tuple[ConstDecl, ...]

    def var(self, name: str) -> Optional[VarDecl]:
        return self._vars().get(name)

    def const(self, name: str) -> Optional[ConstDecl]:
        return self._consts().get(name)

    def _vars(self) -> dict:
        cached = getattr(self, "_var_map", None)
        if cached is None:
            cached = {v.name: v for v in self.entries}
            object.__setattr__(self, "_var_map", cached)
        return cached

    def _consts(self) -> dict:
        cached = getattr(self, "_const_map", None)
        if cached is None:
            cached = {c.name: c for c in self.constants}
            object.__setattr__(self, "_const_map", cached)
        return cached


# --------------------------------------------------------------------------
# Model structure

@dataclass(frozen=True)
class Procedure:
    period: int  # milliseconds, >= 1
    body: ControlFlow
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Transition:
    priority: int  # lower value = evaluated first
    target: str
    condition: Expr
    action: ControlFlow = ()
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Mode:
    name: str
    guard: Expr
    procedures: tuple = ()  # tuple[Procedure, ...]
    transitions: tuple = ()  # tuple[Transition, ...]
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class ModuleDef:
    name: str
    v_in: tuple = ()  # tuple[str, ...], declaration order preserved
    v_out: tuple = ()
    task: ControlFlow = ()
    span: Optional[SourceSpan] = None


@dataclass(frozen=True)
class Model:
    name: str
    datadict: DataDict
    modules: tuple = ()  # tuple[ModuleDef, ...]
    modes: tuple = ()  # tuple[Mode, ...]
    initial_mode: str = ""

    def mode(self, name: str) -> Optional[Mode]:
        for m in self.modes:
            if m.name == name:
                return m
        return None

    def module(self, name: str) -> Optional[ModuleDef]:
        for m in self.modules:
            if m.name == name:
                return m
        return None


# --------------------------------------------------------------------------
# Generic traversal helpers

def expr_children(expr: Expr):
    if isinstance(expr, Unary):
        yield expr.operand
    elif isinstance(expr, Binary):
        yield expr.left
        yield expr.right


def walk_expr(expr: Expr):
    """Yield expr and every subexpression, preorder."""
    yield expr
    for child in expr_children(expr):
        yield from walk_expr(child)


def walk_stmts(stmts: ControlFlow):
    """Yield every statement in a control flow, preorder, branches included."""
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_stmts(stmt.then)
            yield from walk_stmts(stmt.orelse)


def stmt_exprs(stmts: ControlFlow):
    """Yield every expression appearing in a control flow."""
    for stmt in walk_stmts(stmts):
        if isinstance(stmt, Assign):
            yield stmt.expr
        elif isinstance(stmt, If):
            yield stmt.cond


def expr_vars(expr: Expr) -> set:
    """Names of variables referenced by an expression (constants excluded)."""
    return {e.name for e in walk_expr(expr) if isinstance(e, VarRef)}


def strip_spans(node):
    """Recursively copy a node (or tuple of nodes) with every span removed.

    Useful for structural comparison of parse results: two ASTs are
    alpha-equal iff their stripped forms compare equal.
    """
    if isinstance(node, tuple):
        return tuple(strip_spans(item) for item in node)
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        changes = {}
        for f in dataclasses.fields(node):
            value = getattr(node, f.name)
            if f.name == "span":
                changes[f.name] = None
            elif isinstance(value, tuple) or dataclasses.is_dataclass(value):
                changes[f.name] = strip_spans(value)
        return dataclasses.replace(node, **changes) if changes else node
    return node
