"""Satisfiability of boolean combinations of comparisons over bounded,
typed variables, with verified witnesses.

The decision pipeline, complete for the linear fragment:

1. Fold named constants, push negations inward, expand `!=` and boolean
   equality, and distribute into disjunctive normal form (inputs here are
   transition conditions and path constraints — small by construction).
2. Per conjunct, classify atoms. If every comparison is affine, run
   Gaussian elimination on equalities, then Fourier–Motzkin elimination
   over the rationals with the variables' declared bounds adjoined, and
   read a rational witness back by interval midpoints (never a boundary of
   a strict inequality).
3. int32 variables must land on integers: try a small box search around
   the rational point, then branch and bound on fractional variables.
   Bounded domains make this complete; a node budget guards pathologies
   and reports Unknown rather than guessing.
4. Conjuncts with any nonlinear atom (sqrt, products of variables, %, abs,
   division by a variable) fall back to seeded grid plus random sampling:
   Sat if a sample verifies, otherwise Unknown("nonlinear").

Every Sat witness is verified by direct IEEE evaluation of the original
constraint before being returned; float witnesses that fail verification
from rational-vs-IEEE rounding are nudged by up to 16 ulps.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .evaluator import Evaluator, EvalError, Value, coerce
from .model import (
    Binary,
    BoolLit,
    ConstRef,
    DataDict,
    Expr,
    FloatLit,
    IntLit,
    Unary,
    VarDecl,
    VarType,
    walk_expr,
)
from .printer import format_expr


class _Budget(Exception):
    pass


@dataclass(frozen=True)
class SolverOptions:
    seed: int = 0
    sample_budget: int = 10_000
    grid_budget: int = 1_000
    dnf_limit: int = 4_096
    fm_limit: int = 20_000
    bb_budget: int = 2_000
    ulp_nudges: int = 16


@dataclass(frozen=True)
class SolveResult:
    status: str  # "sat" | "unsat" | "unknown"
    witness: Optional[Dict[str, Value]] = None
    reason: Optional[str] = None

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"

    @property
    def is_unknown(self) -> bool:
        return self.status == "unknown"

    def __str__(self) -> str:
        if self.is_sat:
            pairs = ", ".join(f"{k}={v}" for k, v in self.witness.items())
            return f"sat ({pairs})"
        if self.is_unknown:
            return f"unknown ({self.reason})"
        return "unsat"


def _sat(witness: Dict[str, Value]) -> SolveResult:
    return SolveResult("sat", witness=witness)


def _unsat() -> SolveResult:
    return SolveResult("unsat")


def _unknown(reason: str) -> SolveResult:
    return SolveResult("unknown", reason=reason)


@dataclass(frozen=True)
class Constraint:
    """A boolean formula over typed, bounded variables."""

    expr: Expr
    variables: Tuple[VarDecl, ...]

    @classmethod
    def from_exprs(cls, exprs: Sequence[Expr], datadict: DataDict) -> "Constraint":
        """Conjunction of boolean expressions; variables and bounds are
        drawn from the data dictionary, named constants folded in."""
        folded = [fold_constants(e, datadict) for e in exprs]
        expr = folded[0]
        for nxt in folded[1:]:
            expr = Binary("&&", expr, nxt)
        decls: Dict[str, VarDecl] = {}
        for node in walk_expr(expr):
            if hasattr(node, "name") and node.name not in decls:
                decl = datadict.var(node.name)
                if decl is None:
                    raise ValueError(f"unknown variable '{node.name}' in constraint")
                decls[node.name] = decl
        return cls(expr, tuple(decls.values()))

    def datadict(self) -> DataDict:
        cached = getattr(self, "_dd", None)
        if cached is None:
            cached = DataDict(entries=self.variables)
            object.__setattr__(self, "_dd", cached)
        return cached

    def decl(self, name: str) -> VarDecl:
        for decl in self.variables:
            if decl.name == name:
                return decl
        raise KeyError(name)

    def __str__(self) -> str:
        return format_expr(self.expr)


def fold_constants(expr: Expr, datadict: DataDict) -> Expr:
    """Replace named-constant references with their literal values."""
    if isinstance(expr, ConstRef) or (
            hasattr(expr, "name") and datadict.const(expr.name) is not None
            and datadict.var(expr.name) is None):
        const = datadict.const(expr.name)
        if const is None:
            return expr
        if const.vtype is VarType.BOOL:
            return BoolLit(const.value, expr.span)
        if const.vtype is VarType.INT32:
            return IntLit(const.value, expr.span)
        return FloatLit(float(const.value), expr.span)
    if isinstance(expr, Unary):
        return Unary(expr.op, fold_constants(expr.operand, datadict), expr.span)
    if isinstance(expr, Binary):
        return Binary(expr.op, fold_constants(expr.left, datadict),
                      fold_constants(expr.right, datadict), expr.span)
    return expr


# --------------------------------------------------------------------------
# Normalization: NNF with rewritten atoms, then DNF

_NEGATED_CMP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def _is_bool_operand(expr: Expr, types: "_Typer") -> bool:
    return types.type_of(expr) is VarType.BOOL


class _Typer:
    def __init__(self, datadict: DataDict):
        from .typecheck import TypeChecker
        self._checker = TypeChecker(datadict)

    def type_of(self, expr: Expr) -> Optional[VarType]:
        return self._checker.type_of(expr)


def _nnf(expr: Expr, negate: bool, types: _Typer) -> Expr:
    """Negation normal form with comparison atoms kept whole.

    Numeric equality and disequality expand into strict comparisons when
    negated; boolean (in)equality expands into and/or form so DNF literals
    are plain variables or their negations.
    """
    if isinstance(expr, Unary) and expr.op == "!":
        return _nnf(expr.operand, not negate, types)
    if isinstance(expr, Binary) and expr.op in ("&&", "||"):
        op = expr.op
        if negate:
            op = "||" if op == "&&" else "&&"
        return Binary(op, _nnf(expr.left, negate, types),
                      _nnf(expr.right, negate, types), expr.span)
    if isinstance(expr, Binary) and expr.op in ("==", "!=") \
            and _is_bool_operand(expr.left, types):
        # p == q  ~>  (p && q) || (!p && !q); != is the complement
        want_equal = (expr.op == "==") != negate
        p, q = expr.left, expr.right
        if want_equal:
            return Binary("||",
                          Binary("&&", _nnf(p, False, types), _nnf(q, False, types)),
                          Binary("&&", _nnf(p, True, types), _nnf(q, True, types)),
                          expr.span)
        return Binary("||",
                      Binary("&&", _nnf(p, False, types), _nnf(q, True, types)),
                      Binary("&&", _nnf(p, True, types), _nnf(q, False, types)),
                      expr.span)
    if isinstance(expr, Binary) and expr.op in ("<", "<=", ">", ">="):
        if negate:
            return Binary(_NEGATED_CMP[expr.op], expr.left, expr.right, expr.span)
        return expr
    if isinstance(expr, Binary) and expr.op in ("==", "!="):
        want_equal = (expr.op == "==") != negate
        if want_equal:
            return Binary("==", expr.left, expr.right, expr.span)
        return Binary("||", Binary("<", expr.left, expr.right, expr.span),
                      Binary(">", expr.left, expr.right, expr.span), expr.span)
    if isinstance(expr, BoolLit):
        return BoolLit(expr.value != negate, expr.span)
    # remaining atoms: boolean variables
    return Unary("!", expr, expr.span) if negate else expr


def _dnf(expr: Expr, limit: int) -> Optional[List[List[Expr]]]:
    """List of conjuncts (each a list of literal atoms), or None past limit."""
    if isinstance(expr, Binary) and expr.op == "||":
        left = _dnf(expr.left, limit)
        if left is None:
            return None
        right = _dnf(expr.right, limit)
        if right is None or len(left) + len(right) > limit:
            return None
        return left + right
    if isinstance(expr, Binary) and expr.op == "&&":
        left = _dnf(expr.left, limit)
        right = _dnf(expr.right, limit)
        if left is None or right is None or len(left) * len(right) > limit:
            return None
        return [lc + rc for lc in left for rc in right]
    return [[expr]]


# --------------------------------------------------------------------------
# Affine atom extraction

class _Nonlinear(Exception):
    pass


@dataclass
class _Lin:
    """Affine form: sum(coeffs[v] * v) + const."""

    coeffs: Dict[str, Fraction]
    const: Fraction

    def __add__(self, other: "_Lin") -> "_Lin":
        coeffs = dict(self.coeffs)
        for name, c in other.coeffs.items():
            coeffs[name] = coeffs.get(name, Fraction(0)) + c
            if coeffs[name] == 0:
                del coeffs[name]
        return _Lin(coeffs, self.const + other.const)

    def __sub__(self, other: "_Lin") -> "_Lin":
        return self + other.scale(Fraction(-1))

    def scale(self, k: Fraction) -> "_Lin":
        if k == 0:
            return _Lin({}, Fraction(0))
        return _Lin({n: c * k for n, c in self.coeffs.items()}, self.const * k)

    def substitute(self, name: str, replacement: "_Lin") -> "_Lin":
        if name not in self.coeffs:
            return self
        k = self.coeffs[name]
        base = _Lin({n: c for n, c in self.coeffs.items() if n != name},
                    self.const)
        return base + replacement.scale(k)

    def value(self, assignment: Dict[str, Fraction]) -> Fraction:
        total = self.const
        for name, c in self.coeffs.items():
            total += c * assignment[name]
        return total


def _const_lin(value) -> _Lin:
    return _Lin({}, Fraction(value))


def _affine(expr: Expr, types: _Typer) -> _Lin:
    """Affine form of a numeric expression; raises _Nonlinear otherwise."""
    if isinstance(expr, IntLit):
        return _const_lin(expr.value)
    if isinstance(expr, FloatLit):
        return _const_lin(Fraction(expr.value))
    if hasattr(expr, "name"):  # VarRef / ConstRef (constants already folded)
        return _Lin({expr.name: Fraction(1)}, Fraction(0))
    if isinstance(expr, Unary):
        if expr.op == "-":
            return _affine(expr.operand, types).scale(Fraction(-1))
        raise _Nonlinear(expr.op)
    if isinstance(expr, Binary):
        if expr.op == "+":
            return _affine(expr.left, types) + _affine(expr.right, types)
        if expr.op == "-":
            return _affine(expr.left, types) - _affine(expr.right, types)
        if expr.op == "*":
            left = _affine(expr.left, types)
            right = _affine(expr.right, types)
            if not left.coeffs:
                return right.scale(left.const)
            if not right.coeffs:
                return left.scale(right.const)
            raise _Nonlinear("product of variables")
        if expr.op == "/":
            if types.type_of(expr) is VarType.INT32:
                raise _Nonlinear("truncating integer division")
            right = _affine(expr.right, types)
            if right.coeffs or right.const == 0:
                raise _Nonlinear("division by variable")
            return _affine(expr.left, types).scale(Fraction(1) / right.const)
        raise _Nonlinear(expr.op)
    raise _Nonlinear(repr(expr))


# inequality: lin (op) 0 where op in {"<", "<="}; equality: lin == 0
@dataclass
class _Ineq:
    lin: _Lin
    strict: bool


@dataclass
class _LinearSystem:
    inequalities: List[_Ineq]
    equalities: List[_Lin]
    bool_fixed: Dict[str, bool]
    nonlinear: List[Expr]
    atoms: List[Expr]


def _classify_conjunct(literals: Sequence[Expr], types: _Typer) -> Optional[_LinearSystem]:
    """Split a conjunct into linear pieces; returns None when trivially false."""
    system = _LinearSystem([], [], {}, [], list(literals))
    for lit in literals:
        if isinstance(lit, BoolLit):
            if not lit.value:
                return None
            continue
        if isinstance(lit, Unary) and lit.op == "!":
            name = getattr(lit.operand, "name", None)
            if name is not None:
                if system.bool_fixed.get(name, False) is True:
                    return None
                system.bool_fixed[name] = False
                continue
            system.nonlinear.append(lit)
            continue
        name = getattr(lit, "name", None)
        if name is not None:
            if system.bool_fixed.get(name, True) is False:
                return None
            system.bool_fixed[name] = True
            continue
        if isinstance(lit, Binary) and lit.op in ("<", "<=", ">", ">=", "=="):
            try:
                left = _affine(lit.left, types)
                right = _affine(lit.right, types)
            except _Nonlinear:
                system.nonlinear.append(lit)
                continue
            if lit.op == "==":
                system.equalities.append(left - right)
            elif lit.op == "<":
                system.inequalities.append(_Ineq(left - right, True))
            elif lit.op == "<=":
                system.inequalities.append(_Ineq(left - right, False))
            elif lit.op == ">":
                system.inequalities.append(_Ineq(right - left, True))
            else:
                system.inequalities.append(_Ineq(right - left, False))
            continue
        system.nonlinear.append(lit)
    return system


# --------------------------------------------------------------------------
# Fourier-Motzkin with witness reconstruction

class _Infeasible(Exception):
    pass


class _TooLarge(Exception):
    pass


def _fm_solve(inequalities: List[_Ineq], equalities: List[_Lin],
              limit: int) -> Dict[str, Fraction]:
    """Rational witness for a conjunction of affine constraints.

    Raises _Infeasible when the system has no rational solution and
    _TooLarge when elimination exceeds the inequality budget.
    """
    substitutions: List[Tuple[str, _Lin]] = []
    eqs = list(equalities)
    ineqs = list(inequalities)

    # Gaussian elimination of equalities
    while eqs:
        eq = eqs.pop()
        if not eq.coeffs:
            if eq.const != 0:
                raise _Infeasible()
            continue
        name = sorted(eq.coeffs)[0]
        coeff = eq.coeffs[name]
        rest = _Lin({n: c for n, c in eq.coeffs.items() if n != name}, eq.const)
        replacement = rest.scale(Fraction(-1) / coeff)
        substitutions.append((name, replacement))
        eqs = [e.substitute(name, replacement) for e in eqs]
        ineqs = [_Ineq(i.lin.substitute(name, replacement), i.strict)
                 for i in ineqs]

    # Fourier-Motzkin elimination
    variables = sorted({n for i in ineqs for n in i.lin.coeffs})
    eliminated: List[Tuple[str, List[Tuple[_Lin, bool]], List[Tuple[_Lin, bool]]]] = []
    for name in reversed(variables):
        lowers: List[Tuple[_Lin, bool]] = []  # bound <= x (or <)
        uppers: List[Tuple[_Lin, bool]] = []  # x <= bound (or <)
        rest: List[_Ineq] = []
        for ineq in ineqs:
            coeff = ineq.lin.coeffs.get(name)
            if coeff is None:
                rest.append(ineq)
                continue
            bound = _Lin({n: c for n, c in ineq.lin.coeffs.items() if n != name},
                         ineq.lin.const).scale(Fraction(-1) / coeff)
            if coeff > 0:
                uppers.append((bound, ineq.strict))
            else:
                lowers.append((bound, ineq.strict))
        if len(rest) + len(lowers) * len(uppers) > limit:
            raise _TooLarge()
        for lo, lo_strict in lowers:
            for up, up_strict in uppers:
                rest.append(_Ineq(lo - up, lo_strict or up_strict))
        eliminated.append((name, lowers, uppers))
        ineqs = rest

    # ground facts
    for ineq in ineqs:
        if ineq.lin.coeffs:
            raise AssertionError("unexpected free variable after elimination")
        if ineq.strict:
            if not ineq.lin.const < 0:
                raise _Infeasible()
        elif not ineq.lin.const <= 0:
            raise _Infeasible()

    # back-substitution, innermost elimination first
    assignment: Dict[str, Fraction] = {}
    for name, lowers, uppers in reversed(eliminated):
        lo_vals = [(lin.value(assignment), strict) for lin, strict in lowers]
        up_vals = [(lin.value(assignment), strict) for lin, strict in uppers]
        assignment[name] = _pick_value(lo_vals, up_vals)
    for name, replacement in reversed(substitutions):
        assignment[name] = replacement.value(assignment)
    return assignment


def _pick_value(lowers: List[Tuple[Fraction, bool]],
                uppers: List[Tuple[Fraction, bool]]) -> Fraction:
    """A point inside the interval, midpoint when bounded on both sides.

    Strict bounds never yield the boundary itself.
    """
    lo = max(lowers, key=lambda p: (p[0], p[1]))[0] if lowers else None
    hi = min(uppers, key=lambda p: (p[0], -p[1]))[0] if uppers else None
    lo_strict = any(s for v, s in lowers if v == lo) if lowers else False
    hi_strict = any(s for v, s in uppers if v == hi) if uppers else False
    if lo is None and hi is None:
        return Fraction(0)
    if lo is None:
        return hi - 1 if hi_strict else hi
    if hi is None:
        return lo + 1 if lo_strict else lo
    if lo == hi:
        return lo  # feasibility already guaranteed non-strict here
    if lo_strict or hi_strict:
        return (lo + hi) / 2
    # prefer an integer inside a closed interval when one exists
    candidate = Fraction(math.ceil(lo))
    if lo <= candidate <= hi:
        return candidate
    return (lo + hi) / 2


# --------------------------------------------------------------------------
# Solver

class ConstraintSolver:
    """Decides constraints; pure and deterministic for fixed options."""

    def __init__(self, options: Optional[SolverOptions] = None):
        self.options = options or SolverOptions()

    def solve(self, constraint: Constraint) -> SolveResult:
        evaluator = Evaluator(constraint.datadict())
        types = _Typer(constraint.datadict())
        nnf = _nnf(constraint.expr, False, types)
        conjuncts = _dnf(nnf, self.options.dnf_limit)
        if conjuncts is None:
            return _unknown("dnf-blowup")

        unknown_reason: Optional[str] = None
        for index, literals in enumerate(conjuncts):
            system = _classify_conjunct(literals, types)
            if system is None:
                continue  # trivially false conjunct
            result = self._solve_conjunct(constraint, system, evaluator, index)
            if result.is_sat:
                return result
            if result.is_unknown and unknown_reason is None:
                unknown_reason = result.reason
        if unknown_reason is not None:
            return _unknown(unknown_reason)
        return _unsat()

    # -- conjunct handling ---------------------------------------------

    def _solve_conjunct(self, constraint: Constraint, system: _LinearSystem,
                        evaluator: Evaluator, index: int) -> SolveResult:
        if system.nonlinear:
            return self._sample(constraint, system, evaluator, index)

        numeric_vars = sorted(
            {n for i in system.inequalities for n in i.lin.coeffs}
            | {n for e in system.equalities for n in e.coeffs})
        decls = {}
        for name in numeric_vars:
            try:
                decls[name] = constraint.decl(name)
            except KeyError:
                return _unknown(f"unbound variable '{name}'")

        bounds: List[_Ineq] = []
        for name, decl in decls.items():
            lo, hi = decl.bounds()
            bounds.append(_Ineq(_Lin({name: Fraction(-1)}, Fraction(lo)), False))
            bounds.append(_Ineq(_Lin({name: Fraction(1)}, -Fraction(hi)), False))

        int_vars = [n for n, d in decls.items() if d.vtype is VarType.INT32]
        budget = [self.options.bb_budget]
        try:
            assignment = self._solve_linear(
                system.inequalities + bounds, system.equalities, int_vars,
                budget)
        except _Infeasible:
            return _unsat()
        except _TooLarge:
            return _unknown("fm-blowup")
        except _Budget:
            return _unknown("int-search-budget")

        witness = self._build_witness(constraint, system, assignment)
        verified = self._verify(constraint, evaluator, witness)
        if verified is not None:
            return _sat(verified)
        repaired = self._nudge_floats(constraint, evaluator, witness)
        if repaired is not None:
            return _sat(repaired)
        return _unknown("float-boundary")

    def _solve_linear(self, inequalities: List[_Ineq], equalities: List[_Lin],
                      int_vars: List[str], budget: List[int]) -> Dict[str, Fraction]:
        """Rational FM solve plus branch and bound until int32 vars are integral."""
        if budget[0] <= 0:
            raise _Budget()
        budget[0] -= 1
        assignment = _fm_solve(inequalities, equalities, self.options.fm_limit)
        fractional = [n for n in int_vars
                      if n in assignment
                      and assignment[n].denominator != 1]
        if not fractional:
            return assignment

        # box repair around the rational point first
        boxed = self._box_repair(inequalities, equalities, assignment,
                                 fractional)
        if boxed is not None:
            return boxed

        name = fractional[0]
        value = assignment[name]
        floor_branch = inequalities + [
            _Ineq(_Lin({name: Fraction(1)}, -Fraction(math.floor(value))), False)]
        ceil_branch = inequalities + [
            _Ineq(_Lin({name: Fraction(-1)}, Fraction(math.ceil(value))), False)]
        for branch in (floor_branch, ceil_branch):
            try:
                return self._solve_linear(branch, equalities, int_vars, budget)
            except _Infeasible:
                continue
        raise _Infeasible()

    def _box_repair(self, inequalities: List[_Ineq], equalities: List[_Lin],
                    assignment: Dict[str, Fraction],
                    fractional: List[str]) -> Optional[Dict[str, Fraction]]:
        if len(fractional) > 6:
            return None
        choices = [(n, (Fraction(math.floor(assignment[n])),
                        Fraction(math.ceil(assignment[n]))))
                   for n in fractional]

        def satisfied(candidate: Dict[str, Fraction]) -> bool:
            for eq in equalities:
                if eq.value(candidate) != 0:
                    return False
            for ineq in inequalities:
                v = ineq.lin.value(candidate)
                if ineq.strict and not v < 0:
                    return False
                if not ineq.strict and not v <= 0:
                    return False
            return True

        def recurse(i: int, candidate: Dict[str, Fraction]):
            if i == len(choices):
                return dict(candidate) if satisfied(candidate) else None
            name, options = choices[i]
            for value in options:
                candidate[name] = value
                found = recurse(i + 1, candidate)
                if found is not None:
                    return found
            candidate[name] = assignment[name]
            return None

        # equalities force exact values; rounding breaks them unless the
        # assignment is free there, so skip the box when equalities bind
        for eq in equalities:
            if any(n in eq.coeffs for n in fractional):
                return None
        return recurse(0, dict(assignment))

    # -- witnesses ------------------------------------------------------

    def _build_witness(self, constraint: Constraint, system: _LinearSystem,
                       assignment: Dict[str, Fraction]) -> Dict[str, Value]:
        witness: Dict[str, Value] = {}
        for decl in constraint.variables:
            if decl.vtype is VarType.BOOL:
                value = system.bool_fixed.get(decl.name, False)
                witness[decl.name] = Value(VarType.BOOL, value)
                continue
            if decl.name in assignment:
                raw = assignment[decl.name]
            else:
                raw = self._padding(decl)
            if decl.vtype is VarType.INT32:
                witness[decl.name] = Value(VarType.INT32, int(raw))
            else:
                witness[decl.name] = Value(decl.vtype,
                                           coerce(float(raw), decl.vtype))
        return witness

    @staticmethod
    def _padding(decl: VarDecl) -> Fraction:
        lo, hi = decl.bounds()
        if decl.init is not None:
            return Fraction(decl.init)
        zero = Fraction(0)
        if Fraction(lo) <= zero <= Fraction(hi):
            return zero
        return Fraction(lo)

    def _verify(self, constraint: Constraint, evaluator: Evaluator,
                witness: Dict[str, Value]) -> Optional[Dict[str, Value]]:
        values = {name: v.raw for name, v in witness.items()}
        try:
            ok = evaluator.eval_raw(constraint.expr, values)
        except EvalError:
            return None
        return witness if ok else None

    def _nudge_floats(self, constraint: Constraint, evaluator: Evaluator,
                      witness: Dict[str, Value]) -> Optional[Dict[str, Value]]:
        float_vars = [d.name for d in constraint.variables if d.vtype.is_float]
        for name in float_vars:
            base = witness[name].raw
            vtype = witness[name].vtype
            for k in range(1, self.options.ulp_nudges + 1):
                for direction in (math.inf, -math.inf):
                    nudged = base
                    for _ in range(k):
                        nudged = math.nextafter(nudged, direction)
                    candidate = dict(witness)
                    candidate[name] = Value(vtype, coerce(nudged, vtype))
                    verified = self._verify(constraint, evaluator, candidate)
                    if verified is not None:
                        return verified
        return None

    # -- sampling for nonlinear conjuncts --------------------------------

    def _sample(self, constraint: Constraint, system: _LinearSystem,
                evaluator: Evaluator, index: int) -> SolveResult:
        conjunct = None
        for atom in system.atoms:
            conjunct = atom if conjunct is None else Binary("&&", conjunct, atom)
        rng = random.Random(self.options.seed * 1_000_003 + index)
        decls = [d for d in constraint.variables]

        def try_point(values: Dict[str, object]) -> Optional[Dict[str, Value]]:
            try:
                if not evaluator.eval_raw(conjunct, values):
                    return None
                if not evaluator.eval_raw(constraint.expr, values):
                    return None
            except EvalError:
                return None
            return {d.name: Value(d.vtype, values[d.name]) for d in decls}

        for values in self._grid_points(decls):
            found = try_point(values)
            if found is not None:
                return _sat(found)

        for _ in range(self.options.sample_budget):
            values = {}
            for decl in decls:
                values[decl.name] = self._random_value(decl, rng)
            found = try_point(values)
            if found is not None:
                return _sat(found)
        return _unknown("nonlinear")

    def _grid_points(self, decls: List[VarDecl]) -> Iterable[Dict[str, object]]:
        axes: List[List[object]] = []
        for decl in decls:
            if decl.vtype is VarType.BOOL:
                axes.append([False, True])
                continue
            lo, hi = decl.bounds()
            points = [lo, hi, (lo + hi) / 2, 0, 1, -1, 2]
            if decl.init is not None:
                points.append(decl.init)
            pruned = []
            for p in points:
                value = coerce(min(max(p, lo), hi), decl.vtype)
                if value not in pruned:
                    pruned.append(value)
            axes.append(pruned)
        total = 1
        for axis in axes:
            total *= len(axis)
        if total > self.options.grid_budget:
            axes = [axis[:2] for axis in axes]  # fall back to corners
            total = 1
            for axis in axes:
                total *= len(axis)
            if total > self.options.grid_budget:
                return
        names = [d.name for d in decls]
        for combo in itertools.product(*axes):
            yield dict(zip(names, combo))

    @staticmethod
    def _random_value(decl: VarDecl, rng: random.Random) -> object:
        if decl.vtype is VarType.BOOL:
            return rng.random() < 0.5
        lo, hi = decl.bounds()
        if decl.vtype is VarType.INT32:
            return rng.randint(int(lo), int(hi))
        # mix magnitudes: small values around zero plus the wide range
        if rng.random() < 0.5:
            raw = rng.uniform(max(lo, -1e6), min(hi, 1e6))
        else:
            raw = rng.uniform(float(lo), float(hi))
        if not math.isfinite(raw):
            raw = rng.uniform(max(lo, -1e6), min(hi, 1e6))
        return coerce(raw, decl.vtype)


def solve(constraint: Constraint,
          options: Optional[SolverOptions] = None) -> SolveResult:
    """Decide a constraint; see module docstring for completeness notes."""
    return ConstraintSolver(options).solve(constraint)
