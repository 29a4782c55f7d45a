"""SMT-LIB v2 export of constraints and a pipe driver for external solvers.

int32 variables become Int constants with their range asserted; float
variables become Real constants with declared min/max asserted. Truncating
integer division and modulus are encoded through helper define-funs with
C semantics (quotient toward zero, remainder signed like the dividend);
sqrt becomes a fresh nonnegative Real constrained by squaring.

Definedness side conditions are asserted globally: divisors are nonzero
and sqrt operands nonnegative, mirroring the evaluator's treatment of
those situations as errors rather than values.
"""

from __future__ import annotations

import shlex
import subprocess
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .evaluator import Value, coerce
from .model import (
    Binary,
    BoolLit,
    Expr,
    FloatLit,
    IntLit,
    Unary,
    VarType,
)
from .solver import Constraint, ConstraintSolver, SolveResult, SolverOptions, _Typer

_TDIV_DEFS = """\
(define-fun tdiv ((a Int) (b Int)) Int
  (ite (xor (< a 0) (< b 0)) (- (div (abs a) (abs b))) (div (abs a) (abs b))))
(define-fun tmod ((a Int) (b Int)) Int (- a (* b (tdiv a b))))"""


class _Emitter:
    def __init__(self, constraint: Constraint):
        self.constraint = constraint
        self.types = _Typer(constraint.datadict())
        self.side_conditions: List[str] = []
        self.aux_decls: List[str] = []
        self.aux_counter = 0
        self.uses_tdiv = False
        self.has_int = False
        self.has_real = False
        self.nonlinear = False
        self.mixed = False

    # -- literals -------------------------------------------------------

    @staticmethod
    def _int_lit(value: int) -> str:
        return str(value) if value >= 0 else f"(- {-value})"

    @staticmethod
    def _real_lit(value: float) -> str:
        frac = Fraction(value)
        num, den = frac.numerator, frac.denominator
        sign = num < 0
        num = abs(num)
        body = f"{num}.0" if den == 1 else f"(/ {num}.0 {den}.0)"
        return f"(- {body})" if sign else body

    # -- translation ------------------------------------------------------

    def _coerced(self, expr: Expr, want_real: bool) -> str:
        text = self.emit(expr)
        if want_real and self.types.type_of(expr) is VarType.INT32:
            self.mixed = True
            return f"(to_real {text})"
        return text

    def emit(self, expr: Expr) -> str:
        if isinstance(expr, IntLit):
            self.has_int = True
            return self._int_lit(expr.value)
        if isinstance(expr, FloatLit):
            self.has_real = True
            return self._real_lit(expr.value)
        if isinstance(expr, BoolLit):
            return "true" if expr.value else "false"
        if hasattr(expr, "name"):
            t = self.types.type_of(expr)
            if t is VarType.INT32:
                self.has_int = True
            elif t is not None and t.is_float:
                self.has_real = True
            return expr.name
        if isinstance(expr, Unary):
            return self._emit_unary(expr)
        if isinstance(expr, Binary):
            return self._emit_binary(expr)
        raise TypeError(f"not an expression: {expr!r}")

    def _emit_unary(self, expr: Unary) -> str:
        t = self.types.type_of(expr.operand)
        if expr.op == "!":
            return f"(not {self.emit(expr.operand)})"
        if expr.op == "-":
            return f"(- {self.emit(expr.operand)})"
        if expr.op == "abs":
            inner = self.emit(expr.operand)
            if t is VarType.INT32:
                return f"(abs {inner})"
            return f"(ite (>= {inner} 0.0) {inner} (- {inner}))"
        if expr.op == "sqrt":
            inner = self._coerced(expr.operand, want_real=True)
            self.has_real = True
            self.nonlinear = True
            name = f".sqrt{self.aux_counter}"
            self.aux_counter += 1
            self.aux_decls.append(f"(declare-const {name} Real)")
            self.side_conditions.append(f"(assert (>= {inner} 0.0))")
            self.side_conditions.append(f"(assert (>= {name} 0.0))")
            self.side_conditions.append(
                f"(assert (= (* {name} {name}) {inner}))")
            return name
        raise ValueError(f"unknown unary operator {expr.op!r}")

    def _emit_binary(self, expr: Binary) -> str:
        op = expr.op
        if op in ("&&", "||"):
            smt_op = "and" if op == "&&" else "or"
            return f"({smt_op} {self.emit(expr.left)} {self.emit(expr.right)})"

        lt = self.types.type_of(expr.left)
        rt = self.types.type_of(expr.right)
        if op in ("==", "!=") and lt is VarType.BOOL:
            inner = f"(= {self.emit(expr.left)} {self.emit(expr.right)})"
            return inner if op == "==" else f"(not {inner})"

        want_real = (lt is not None and lt.is_float) or \
                    (rt is not None and rt.is_float)
        left = self._coerced(expr.left, want_real)
        right = self._coerced(expr.right, want_real)

        if op in ("<", "<=", ">", ">="):
            return f"({op} {left} {right})"
        if op == "==":
            return f"(= {left} {right})"
        if op == "!=":
            return f"(distinct {left} {right})"
        if op == "%":
            self.uses_tdiv = True
            self.nonlinear = True
            self.side_conditions.append(f"(assert (distinct {right} 0))")
            return f"(tmod {left} {right})"
        if op == "/":
            if want_real:
                self.nonlinear = self.nonlinear or not isinstance(
                    expr.right, (IntLit, FloatLit))
                zero = "0.0"
                self.side_conditions.append(
                    f"(assert (distinct {right} {zero}))")
                return f"(/ {left} {right})"
            self.uses_tdiv = True
            self.nonlinear = True
            self.side_conditions.append(f"(assert (distinct {right} 0))")
            return f"(tdiv {left} {right})"
        if op in ("+", "-"):
            return f"({op} {left} {right})"
        if op == "*":
            if not isinstance(expr.left, (IntLit, FloatLit)) and \
                    not isinstance(expr.right, (IntLit, FloatLit)):
                self.nonlinear = True
            return f"(* {left} {right})"
        raise ValueError(f"unknown binary operator {op!r}")

    def logic(self) -> str:
        arith = ""
        if self.has_int and (self.has_real or self.mixed):
            arith = "IRA"
        elif self.has_real:
            arith = "RA"
        elif self.has_int:
            arith = "IA"
        if not arith:
            return "QF_UF"
        prefix = "N" if self.nonlinear else "L"
        return f"QF_{prefix}{arith}"


def emit_smtlib(constraint: Constraint) -> str:
    """Render a constraint as a complete SMT-LIB v2 script."""
    emitter = _Emitter(constraint)
    body = emitter.emit(constraint.expr)

    decls: List[str] = []
    range_asserts: List[str] = []
    for decl in constraint.variables:
        if decl.vtype is VarType.BOOL:
            decls.append(f"(declare-const {decl.name} Bool)")
            continue
        if decl.vtype is VarType.INT32:
            emitter.has_int = True
            decls.append(f"(declare-const {decl.name} Int)")
            lo, hi = decl.bounds()
            range_asserts.append(
                f"(assert (>= {decl.name} {emitter._int_lit(int(lo))}))")
            range_asserts.append(
                f"(assert (<= {decl.name} {emitter._int_lit(int(hi))}))")
            continue
        emitter.has_real = True
        decls.append(f"(declare-const {decl.name} Real)")
        if decl.min is not None:
            range_asserts.append(
                f"(assert (>= {decl.name} {emitter._real_lit(float(decl.min))}))")
        if decl.max is not None:
            range_asserts.append(
                f"(assert (<= {decl.name} {emitter._real_lit(float(decl.max))}))")

    lines = [f"(set-logic {emitter.logic()})",
             "(set-option :produce-models true)"]
    if emitter.uses_tdiv:
        lines.append(_TDIV_DEFS)
    lines.extend(decls)
    lines.extend(emitter.aux_decls)
    lines.extend(range_asserts)
    lines.extend(emitter.side_conditions)
    lines.append(f"(assert {body})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# External solver driver

def _sexpr_tokens(text: str) -> List[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _parse_sexprs(tokens: List[str]) -> List[object]:
    out: List[object] = []
    stack: List[List[object]] = []
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                out.append(done)
        elif stack:
            stack[-1].append(tok)
        else:
            out.append(tok)
    return out


def _numeric_of(sexpr) -> Optional[Fraction]:
    if isinstance(sexpr, str):
        try:
            return Fraction(sexpr)
        except ValueError:
            return None
    if isinstance(sexpr, list) and sexpr:
        if sexpr[0] == "-" and len(sexpr) == 2:
            inner = _numeric_of(sexpr[1])
            return -inner if inner is not None else None
        if sexpr[0] == "/" and len(sexpr) == 3:
            num = _numeric_of(sexpr[1])
            den = _numeric_of(sexpr[2])
            if num is not None and den not in (None, 0):
                return num / den
    return None


def parse_model_output(text: str, constraint: Constraint) -> Dict[str, Value]:
    """Extract a witness from (get-model)-style define-fun output."""
    witness: Dict[str, Value] = {}
    decls = {d.name: d for d in constraint.variables}
    for sexpr in _parse_sexprs(_sexpr_tokens(text)):
        stack = [sexpr]
        while stack:
            node = stack.pop()
            if not isinstance(node, list):
                continue
            if len(node) >= 5 and node[0] == "define-fun" and node[1] in decls:
                decl = decls[node[1]]
                value_expr = node[4]
                if decl.vtype is VarType.BOOL:
                    if value_expr in ("true", "false"):
                        witness[decl.name] = Value(
                            VarType.BOOL, value_expr == "true")
                    continue
                numeric = _numeric_of(value_expr)
                if numeric is not None:
                    if decl.vtype is VarType.INT32:
                        witness[decl.name] = Value(VarType.INT32, int(numeric))
                    else:
                        witness[decl.name] = Value(
                            decl.vtype, coerce(float(numeric), decl.vtype))
            else:
                stack.extend(node)
    return witness


def solve_external(constraint: Constraint, command: str,
                   options: Optional[SolverOptions] = None,
                   timeout: Optional[float] = None) -> SolveResult:
    """Pipe the SMT-LIB script to an external solver command.

    The command's stdout is read for a sat/unsat/unknown judgment plus an
    optional model; sat witnesses are verified by direct evaluation before
    being trusted (nudged by ulps when rational-vs-IEEE rounding bites).
    """
    script = emit_smtlib(constraint)
    try:
        proc = subprocess.run(
            shlex.split(command), input=script, capture_output=True,
            text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        return SolveResult("unknown", reason=f"external solver: {exc}")

    lines = [line.strip() for line in proc.stdout.splitlines() if line.strip()]
    status = next((l for l in lines if l in ("sat", "unsat", "unknown")), None)
    if status is None:
        return SolveResult("unknown", reason="external solver: no judgment")
    if status == "unsat":
        return SolveResult("unsat")
    if status == "unknown":
        return SolveResult("unknown", reason="external solver: unknown")

    model_text = "\n".join(lines[lines.index("sat") + 1:])
    witness = parse_model_output(model_text, constraint)
    solver = ConstraintSolver(options)
    evaluator_witness = dict(witness)
    for decl in constraint.variables:
        if decl.name not in evaluator_witness:
            if decl.vtype is VarType.BOOL:
                evaluator_witness[decl.name] = Value(VarType.BOOL, False)
            else:
                raw = solver._padding(decl)
                evaluator_witness[decl.name] = Value(
                    decl.vtype, coerce(float(raw) if decl.vtype.is_float
                                       else int(raw), decl.vtype))
    from .evaluator import Evaluator
    evaluator = Evaluator(constraint.datadict())
    verified = solver._verify(constraint, evaluator, evaluator_witness)
    if verified is not None:
        return SolveResult("sat", witness=verified)
    repaired = solver._nudge_floats(constraint, evaluator, evaluator_witness)
    if repaired is not None:
        return SolveResult("sat", witness=repaired)
    return SolveResult("unknown", reason="external witness failed verification")
