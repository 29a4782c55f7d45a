"""Concrete expression evaluation and runtime state.

Evaluation happens in the expression's statically promoted type. float32
arithmetic is exact IEEE single precision: operands and results are rounded
through the 32-bit representation (one rounding per operation, which double
precision carries exactly). int32 arithmetic that leaves the representable
range is an error, not a wraparound — overflow in control software is a
defect and must surface. Division or modulus by zero (integer or float) and
square roots of negative values are likewise errors.

Expressions are compiled once into nested closures over a raw value map;
repeat evaluation inside simulation loops pays no re-dispatch cost.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

from .model import (
    Binary,
    BoolLit,
    ConstRef,
    DataDict,
    Expr,
    FloatLit,
    IntLit,
    INT32_MAX,
    INT32_MIN,
    Model,
    SourceSpan,
    Unary,
    VarRef,
    VarType,
)
from .typecheck import TypeChecker, promote


class EvalError(Exception):
    """Runtime requirements error raised during expression evaluation.

    kind is one of DivisionByZero, SqrtOfNegative, Int32Overflow.
    """

    def __init__(self, kind: str, span: Optional[SourceSpan], message: str):
        super().__init__(message)
        self.kind = kind
        self.span = span
        self.message = message


def f32(x: float) -> float:
    """Round a double to the nearest IEEE-754 binary32 value."""
    try:
        return struct.unpack("<f", struct.pack("<f", x))[0]
    except OverflowError:
        return math.inf if x > 0 else -math.inf


def f32_bits(x: float) -> bytes:
    try:
        return struct.pack("<f", x)
    except OverflowError:
        return struct.pack("<f", math.inf if x > 0 else -math.inf)


def float32_repr(x: float) -> str:
    """Shortest decimal string that round-trips through binary32."""
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    target = f32_bits(x)
    for digits in range(1, 10):
        s = "%.*g" % (digits, x)
        if f32_bits(float(s)) == target:
            return s
    return "%.9g" % x


def format_value(raw: object, vtype: VarType) -> str:
    """Canonical text for a typed value (round-trip precision for floats)."""
    if vtype is VarType.BOOL:
        return "true" if raw else "false"
    if vtype is VarType.INT32:
        return str(raw)
    if vtype is VarType.FLOAT32:
        return float32_repr(raw)
    return repr(float(raw))


@dataclass(frozen=True)
class Value:
    vtype: VarType
    raw: object

    def __str__(self) -> str:
        return format_value(self.raw, self.vtype)


def coerce(raw: object, vtype: VarType) -> object:
    """Store-convert a raw value into a variable's representation."""
    if vtype is VarType.BOOL:
        return bool(raw)
    if vtype is VarType.INT32:
        return int(raw)
    if vtype is VarType.FLOAT32:
        return f32(float(raw))
    return float(raw)


def default_raw(vtype: VarType) -> object:
    return False if vtype is VarType.BOOL else coerce(0, vtype)


@dataclass
class State:
    """Total valuation of the data dictionary plus execution position."""

    datadict: DataDict
    values: Dict[str, object] = field(default_factory=dict)
    mode: str = ""
    cycle: int = 0
    time_ms: int = 0

    @classmethod
    def initial(cls, model: Model) -> "State":
        values = {}
        for decl in model.datadict.entries:
            raw = decl.init if decl.init is not None else default_raw(decl.vtype)
            values[decl.name] = coerce(raw, decl.vtype)
        return cls(datadict=model.datadict, values=values,
                   mode=model.initial_mode)

    def set(self, name: str, raw: object) -> None:
        decl = self.datadict.var(name)
        if decl is None:
            raise KeyError(f"unknown variable '{name}'")
        self.values[name] = coerce(raw, decl.vtype)

    def get(self, name: str) -> Value:
        decl = self.datadict.var(name)
        if decl is None:
            raise KeyError(f"unknown variable '{name}'")
        return Value(decl.vtype, self.values[name])


# --------------------------------------------------------------------------
# Compilation

def _check_i32(v: int, span) -> int:
    if v < INT32_MIN or v > INT32_MAX:
        raise EvalError("Int32Overflow", span, f"int32 overflow: {v}")
    return v


def _idiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


class Evaluator:
    """Compiles expressions over one data dictionary into raw-value closures."""

    def __init__(self, datadict: DataDict):
        self.datadict = datadict
        self.checker = TypeChecker(datadict)
        self._compiled: Dict[int, tuple] = {}  # id -> (expr, fn, vtype)

    def static_type(self, expr: Expr) -> VarType:
        t = self.checker.type_of(expr)
        if t is None:
            raise ValueError(f"expression does not type-check: {expr!r}")
        return t

    def compile(self, expr: Expr) -> Callable[[Dict[str, object]], object]:
        cached = self._compiled.get(id(expr))
        if cached is not None and cached[0] is expr:
            return cached[1]
        fn = self._compile(expr)
        self._compiled[id(expr)] = (expr, fn, self.static_type(expr))
        return fn

    def eval(self, expr: Expr, state: State) -> Value:
        fn = self.compile(expr)
        return Value(self._compiled[id(expr)][2], fn(state.values))

    def eval_raw(self, expr: Expr, values: Dict[str, object]) -> object:
        return self.compile(expr)(values)

    # -- closure builders ----------------------------------------------

    def _compile(self, expr: Expr) -> Callable:
        if isinstance(expr, IntLit):
            v = expr.value
            return lambda s: v
        if isinstance(expr, FloatLit):
            v = expr.value
            return lambda s: v
        if isinstance(expr, BoolLit):
            v = expr.value
            return lambda s: v
        if isinstance(expr, (VarRef, ConstRef)):
            return self._compile_name(expr)
        if isinstance(expr, Unary):
            return self._compile_unary(expr)
        if isinstance(expr, Binary):
            return self._compile_binary(expr)
        raise TypeError(f"not an expression: {expr!r}")

    def _compile_name(self, expr) -> Callable:
        name = expr.name
        const = self.datadict.const(name)
        if const is not None and (isinstance(expr, ConstRef)
                                  or self.datadict.var(name) is None):
            v = const.value
            return lambda s: v
        if self.datadict.var(name) is None:
            raise ValueError(f"unbound name '{name}' in expression")
        return lambda s: s[name]

    def _operand(self, expr: Expr, target: VarType) -> Callable:
        """Compile a subexpression plus conversion into the promoted type."""
        fn = self._compile(expr)
        source = self.static_type(expr)
        if source == target or not target.is_numeric:
            return fn
        if target is VarType.FLOAT32:
            return lambda s: f32(float(fn(s)))
        if target is VarType.FLOAT64:
            return lambda s: float(fn(s))
        return fn

    def _compile_unary(self, expr: Unary) -> Callable:
        span = expr.span
        op = expr.op
        fn = self._compile(expr.operand)
        t = self.static_type(expr.operand)
        if op == "!":
            return lambda s: not fn(s)
        if op == "-":
            if t is VarType.INT32:
                return lambda s: _check_i32(-fn(s), span)
            if t is VarType.FLOAT32:
                return lambda s: f32(-fn(s))
            return lambda s: -fn(s)
        if op == "abs":
            if t is VarType.INT32:
                return lambda s: _check_i32(abs(fn(s)), span)
            return lambda s: abs(fn(s))
        if op == "sqrt":
            def _sqrt(s):
                v = fn(s)
                if v < 0:
                    raise EvalError("SqrtOfNegative", span,
                                    f"sqrt of negative value {v}")
                return math.sqrt(v)
            if t is VarType.FLOAT32:
                return lambda s: f32(_sqrt(s))
            return _sqrt
        raise ValueError(f"unknown unary operator {op!r}")

    def _compile_binary(self, expr: Binary) -> Callable:
        span = expr.span
        op = expr.op
        lt = self.static_type(expr.left)
        rt = self.static_type(expr.right)

        if op == "&&":
            lf, rf = self._compile(expr.left), self._compile(expr.right)
            return lambda s: lf(s) and rf(s)  # short-circuit
        if op == "||":
            lf, rf = self._compile(expr.left), self._compile(expr.right)
            return lambda s: lf(s) or rf(s)

        if op in ("==", "!=") and lt is VarType.BOOL:
            lf, rf = self._compile(expr.left), self._compile(expr.right)
            if op == "==":
                return lambda s: lf(s) == rf(s)
            return lambda s: lf(s) != rf(s)

        if op == "%":
            lf, rf = self._compile(expr.left), self._compile(expr.right)

            def _mod(s):
                b = rf(s)
                if b == 0:
                    raise EvalError("DivisionByZero", span, "modulus by zero")
                a = lf(s)
                return a - b * _idiv(a, b)  # sign follows the dividend
            return _mod

        common = promote(lt, rt)
        if common is None:
            raise ValueError(f"expression does not type-check: {expr!r}")
        lf = self._operand(expr.left, common)
        rf = self._operand(expr.right, common)

        if op in ("<", "<=", ">", ">=", "==", "!="):
            return {
                "<": lambda s: lf(s) < rf(s),
                "<=": lambda s: lf(s) <= rf(s),
                ">": lambda s: lf(s) > rf(s),
                ">=": lambda s: lf(s) >= rf(s),
                "==": lambda s: lf(s) == rf(s),
                "!=": lambda s: lf(s) != rf(s),
            }[op]

        if common is VarType.INT32:
            if op == "+":
                return lambda s: _check_i32(lf(s) + rf(s), span)
            if op == "-":
                return lambda s: _check_i32(lf(s) - rf(s), span)
            if op == "*":
                return lambda s: _check_i32(lf(s) * rf(s), span)
            if op == "/":
                def _div(s):
                    b = rf(s)
                    if b == 0:
                        raise EvalError("DivisionByZero", span,
                                        "division by zero")
                    return _check_i32(_idiv(lf(s), b), span)
                return _div
        else:
            rounder = f32 if common is VarType.FLOAT32 else float
            if op == "+":
                return lambda s: rounder(lf(s) + rf(s))
            if op == "-":
                return lambda s: rounder(lf(s) - rf(s))
            if op == "*":
                return lambda s: rounder(lf(s) * rf(s))
            if op == "/":
                def _fdiv(s):
                    b = rf(s)
                    if b == 0.0:
                        raise EvalError("DivisionByZero", span,
                                        "division by zero")
                    return rounder(lf(s) / b)
                return _fdiv
        raise ValueError(f"unknown binary operator {op!r}")


_evaluators: Dict[int, Evaluator] = {}


def evaluator_for(datadict: DataDict) -> Evaluator:
    ev = _evaluators.get(id(datadict))
    if ev is None or ev.datadict is not datadict:
        ev = Evaluator(datadict)
        _evaluators[id(datadict)] = ev
    return ev


def eval_expr(expr: Expr, state: State) -> Value:
    """Evaluate a type-correct expression against a state.

    Deterministic: the same expression and state produce an identical bit
    pattern. Raises EvalError on division by zero, sqrt of a negative, or
    int32 overflow.
    """
    return evaluator_for(state.datadict).eval(expr, state)
