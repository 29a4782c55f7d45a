"""Static type rules for expressions and statements.

Numeric promotion follows the usual widening lattice: int32 combined with a
float type yields that float type, float32 combined with float64 yields
float64. Boolean connectives take booleans only, comparisons yield booleans.
`%` is defined for int32 operands only.

Name resolution is deliberately out of scope here: an unknown identifier is
given the unknown type, which unifies with anything and produces no further
diagnostics (the model-level checker reports UndefinedVariable separately).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .model import (
    Assign,
    Binary,
    BoolLit,
    Call,
    ConstRef,
    ControlFlow,
    DataDict,
    Expr,
    FloatLit,
    If,
    IntLit,
    Model,
    SourceSpan,
    Unary,
    VarRef,
    VarType,
)

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", "<=", ">", ">=")
EQ_OPS = ("==", "!=")
BOOL_OPS = ("&&", "||")


@dataclass(frozen=True)
class TypeDiagnostic:
    span: Optional[SourceSpan]
    expected: str
    actual: str
    message: str

    def __str__(self) -> str:
        where = str(self.span) if self.span else "<unknown>"
        return f"{where}: {self.message} (expected {self.expected}, got {self.actual})"


@dataclass(frozen=True)
class Promotion:
    """Record of an implicit widening applied inside an expression."""

    span: Optional[SourceSpan]
    from_type: VarType
    to_type: VarType


def promote(a: VarType, b: VarType) -> Optional[VarType]:
    """Common type of two numeric operands; None if either is bool."""
    if not (a.is_numeric and b.is_numeric):
        return None
    if VarType.FLOAT64 in (a, b):
        return VarType.FLOAT64
    if VarType.FLOAT32 in (a, b):
        return VarType.FLOAT32
    return VarType.INT32


def assignable(target: VarType, source: VarType) -> bool:
    """May a value of `source` type be stored into a `target` variable?

    Floats accept any numeric source (float64 narrows into float32 storage
    with rounding; that narrowing is intentionally legal so declared-width
    mistakes surface as simulation divergence rather than as type errors).
    int32 and bool accept only themselves.
    """
    if target == source:
        return True
    if target.is_float and source.is_numeric:
        return True
    return False


class TypeChecker:
    """Checks every expression and statement of a model against the rules.

    Collects diagnostics instead of raising; `promotions` records each
    implicit widening for inspection.
    """

    def __init__(self, datadict: DataDict):
        self.datadict = datadict
        self.diagnostics: List[TypeDiagnostic] = []
        self.promotions: List[Promotion] = []
        self._cache: dict = {}

    # -- expressions --------------------------------------------------

    def type_of(self, expr: Expr) -> Optional[VarType]:
        """Type of an expression, or None when unknown/ill-typed.

        None propagates silently so one mistake yields one diagnostic.
        """
        key = id(expr)
        if key in self._cache:
            return self._cache[key]
        t = self._infer(expr)
        self._cache[key] = t
        return t

    def _infer(self, expr: Expr) -> Optional[VarType]:
        if isinstance(expr, IntLit):
            return VarType.INT32
        if isinstance(expr, FloatLit):
            return VarType.FLOAT64
        if isinstance(expr, BoolLit):
            return VarType.BOOL
        if isinstance(expr, VarRef):
            decl = self.datadict.var(expr.name)
            if decl is not None:
                return decl.vtype
            const = self.datadict.const(expr.name)
            if const is not None:
                return const.vtype
            return None  # unresolved name; reported elsewhere
        if isinstance(expr, ConstRef):
            const = self.datadict.const(expr.name)
            if const is not None:
                return const.vtype
            decl = self.datadict.var(expr.name)
            if decl is not None:
                return decl.vtype
            return None
        if isinstance(expr, Unary):
            return self._infer_unary(expr)
        if isinstance(expr, Binary):
            return self._infer_binary(expr)
        raise TypeError(f"not an expression: {expr!r}")

    def _infer_unary(self, expr: Unary) -> Optional[VarType]:
        t = self.type_of(expr.operand)
        if expr.op == "!":
            if t is None or t is VarType.BOOL:
                return VarType.BOOL
            self._error(expr.span, "bool", t, "operand of '!' must be boolean")
            return None
        # -, sqrt, abs: numeric operand
        if t is None:
            return None if expr.op != "sqrt" else VarType.FLOAT64
        if not t.is_numeric:
            self._error(expr.span, "numeric", t,
                        f"operand of '{expr.op}' must be numeric")
            return None
        if expr.op == "sqrt":
            # sqrt stays in float32 when given float32, else widens to float64
            return VarType.FLOAT32 if t is VarType.FLOAT32 else VarType.FLOAT64
        return t

    def _infer_binary(self, expr: Binary) -> Optional[VarType]:
        lt = self.type_of(expr.left)
        rt = self.type_of(expr.right)
        op = expr.op
        if op in BOOL_OPS:
            for t, side in ((lt, expr.left), (rt, expr.right)):
                if t is not None and t is not VarType.BOOL:
                    self._error(side.span or expr.span, "bool", t,
                                f"operand of '{op}' must be boolean")
            return VarType.BOOL
        if op in EQ_OPS:
            if lt is None or rt is None:
                return VarType.BOOL
            if lt is VarType.BOOL and rt is VarType.BOOL:
                return VarType.BOOL
            if lt.is_numeric and rt.is_numeric:
                self._note_promotion(expr, lt, rt)
                return VarType.BOOL
            self._error(expr.span, str(lt), rt,
                        f"'{op}' operands must both be numeric or both boolean")
            return None
        if op in CMP_OPS:
            bad = False
            for t, side in ((lt, expr.left), (rt, expr.right)):
                if t is not None and not t.is_numeric:
                    self._error(side.span or expr.span, "numeric", t,
                                f"operand of '{op}' must be numeric")
                    bad = True
            if not bad and lt is not None and rt is not None:
                self._note_promotion(expr, lt, rt)
            return VarType.BOOL
        if op == "%":
            for t, side in ((lt, expr.left), (rt, expr.right)):
                if t is not None and t is not VarType.INT32:
                    self._error(side.span or expr.span, "int32", t,
                                "'%' is defined for int32 operands only")
                    return None
            return VarType.INT32
        if op in ARITH_OPS:
            bad = False
            for t, side in ((lt, expr.left), (rt, expr.right)):
                if t is not None and not t.is_numeric:
                    self._error(side.span or expr.span, "numeric", t,
                                f"operand of '{op}' must be numeric")
                    bad = True
            if bad:
                return None
            if lt is None or rt is None:
                return None
            self._note_promotion(expr, lt, rt)
            return promote(lt, rt)
        raise ValueError(f"unknown operator {op!r}")

    def _note_promotion(self, expr: Binary, lt: VarType, rt: VarType) -> None:
        common = promote(lt, rt)
        if common is None:
            return
        for t, side in ((lt, expr.left), (rt, expr.right)):
            if t is not common:
                self.promotions.append(
                    Promotion(side.span or expr.span, t, common))

    # -- statements ---------------------------------------------------

    def check_bool(self, expr: Expr, context: str) -> None:
        t = self.type_of(expr)
        if t is not None and t is not VarType.BOOL:
            self._error(expr.span, "bool", t, f"{context} must be boolean")

    def check_stmts(self, stmts: ControlFlow) -> None:
        for stmt in stmts:
            if isinstance(stmt, Assign):
                self._check_assign(stmt)
            elif isinstance(stmt, If):
                self.check_bool(stmt.cond, "if condition")
                self.check_stmts(stmt.then)
                self.check_stmts(stmt.orelse)
            elif isinstance(stmt, Call):
                pass  # call targets are resolved by the model checker

    def _check_assign(self, stmt: Assign) -> None:
        source = self.type_of(stmt.expr)
        decl = self.datadict.var(stmt.var)
        if decl is None:
            if self.datadict.const(stmt.var) is not None:
                self._error(stmt.span, "variable", VarType.BOOL,
                            f"cannot assign to constant '{stmt.var}'")
            return  # unknown target; reported by the model checker
        if source is None:
            return
        if not assignable(decl.vtype, source):
            self._error(stmt.span, str(decl.vtype), source,
                        f"cannot assign {source} to '{stmt.var}'")
        elif decl.vtype != source and decl.vtype.is_float:
            self.promotions.append(Promotion(stmt.span, source, decl.vtype))

    def _error(self, span, expected, actual: VarType, message: str) -> None:
        self.diagnostics.append(
            TypeDiagnostic(span, str(expected), str(actual), message))

    # -- whole model --------------------------------------------------

    def check_model(self, model: Model) -> List[TypeDiagnostic]:
        for mode in model.modes:
            self.check_bool(mode.guard, f"guard of mode '{mode.name}'")
            for proc in mode.procedures:
                self.check_stmts(proc.body)
            for trans in mode.transitions:
                self.check_bool(trans.condition,
                                f"transition condition in mode '{mode.name}'")
                self.check_stmts(trans.action)
        for module in model.modules:
            self.check_stmts(module.task)
        return self.diagnostics


def type_check(model: Model) -> List[TypeDiagnostic]:
    """All type rule violations in a model's guards, conditions, and tasks."""
    return TypeChecker(model.datadict).check_model(model)


def expr_type(expr: Expr, datadict: DataDict) -> Tuple[Optional[VarType], List[TypeDiagnostic]]:
    """Type a standalone expression against a data dictionary."""
    checker = TypeChecker(datadict)
    t = checker.type_of(expr)
    return t, checker.diagnostics
