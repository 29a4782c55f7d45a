"""Independent oracles shared by the unit and acceptance suites.

Everything here is deliberately written from first principles — brute
force, exhaustive enumeration, textbook recursion — and never calls into
the code paths it is used to check.
"""

import itertools
import random
from typing import Dict, List, Sequence, Tuple

import numpy as np

from aasrdl import ltl
from aasrdl.model import (
    Binary,
    BoolLit,
    DataDict,
    Expr,
    FloatLit,
    IntLit,
    Mode,
    Model,
    Procedure,
    Unary,
    VarDecl,
    VarRef,
    VarType,
)
from aasrdl.solver import Constraint


# --------------------------------------------------------------------------
# Elementary cycles by direct enumeration (digraphs up to ~8 nodes)

def brute_force_cycles(nodes: Sequence[str], edges) -> List[List[str]]:
    edge_set = set(edges)
    found = set()
    for k in range(1, len(nodes) + 1):
        for combo in itertools.permutations(nodes, k):
            if min(combo) != combo[0]:
                continue  # one canonical rotation per cycle
            path = list(zip(combo, combo[1:] + (combo[0],)))
            if all(e in edge_set for e in path):
                found.add(combo)
    return sorted([list(c) for c in found], key=lambda c: (len(c), c))


# --------------------------------------------------------------------------
# Random integer constraints plus a numpy enumeration oracle

def random_int_constraint(rng: random.Random, max_vars: int = 4,
                          nonlinear: bool = False) -> Constraint:
    """A random boolean formula over bounded int32 variables.

    Domain sizes shrink with the variable count so exhaustive enumeration
    stays at or below ~100k points.
    """
    nvars = rng.randint(1, max_vars)
    dom_cap = {1: 100, 2: 100, 3: 40, 4: 17}[nvars]
    decls = []
    for i in range(nvars):
        size = rng.randint(2, dom_cap)
        lo = rng.randint(-50, 50)
        decls.append(VarDecl(f"v{i}", VarType.INT32, None, lo, lo + size - 1))
    names = [d.name for d in decls]

    def atom() -> Expr:
        if nonlinear and rng.random() < 0.4:
            kind = rng.choice(["product", "mod"])
            a, b = rng.choice(names), rng.choice(names)
            if kind == "product":
                left = Binary("*", VarRef(a), VarRef(b))
            else:
                left = Binary("%", VarRef(a), IntLit(rng.randint(2, 7)))
            return Binary(rng.choice(["<", "<=", ">", ">=", "==", "!="]),
                          left, IntLit(rng.randint(-60, 60)))
        terms = None
        for name in names:
            coeff = rng.randint(-5, 5)
            if coeff == 0:
                continue
            term = Binary("*", IntLit(coeff), VarRef(name))
            terms = term if terms is None else Binary("+", terms, term)
        if terms is None:
            terms = VarRef(rng.choice(names))
        return Binary(rng.choice(["<", "<=", ">", ">=", "==", "!="]),
                      terms, IntLit(rng.randint(-100, 100)))

    def formula(depth: int) -> Expr:
        if depth == 0 or rng.random() < 0.4:
            return atom()
        op = rng.choice(["&&", "||", "!"])
        if op == "!":
            return Unary("!", formula(depth - 1))
        return Binary(op, formula(depth - 1), formula(depth - 1))

    expr = formula(rng.randint(1, 3))
    datadict = DataDict(entries=tuple(decls))
    used = {n.name for n in _walk(expr) if isinstance(n, VarRef)}
    variables = tuple(d for d in decls if d.name in used) or (decls[0],)
    return Constraint(expr, variables)


def _walk(expr):
    yield expr
    if isinstance(expr, Unary):
        yield from _walk(expr.operand)
    elif isinstance(expr, Binary):
        yield from _walk(expr.left)
        yield from _walk(expr.right)


def _numpy_eval(expr: Expr, arrays: Dict[str, np.ndarray]):
    if isinstance(expr, IntLit):
        return np.int64(expr.value)
    if isinstance(expr, FloatLit):
        return np.float64(expr.value)
    if isinstance(expr, BoolLit):
        return np.bool_(expr.value)
    if isinstance(expr, VarRef):
        return arrays[expr.name]
    if isinstance(expr, Unary):
        inner = _numpy_eval(expr.operand, arrays)
        if expr.op == "!":
            return ~inner
        if expr.op == "-":
            return -inner
        if expr.op == "abs":
            return np.abs(inner)
        raise NotImplementedError(expr.op)
    if isinstance(expr, Binary):
        left = _numpy_eval(expr.left, arrays)
        right = _numpy_eval(expr.right, arrays)
        op = expr.op
        if op == "&&":
            return left & right
        if op == "||":
            return left | right
        if op == "%":
            return np.fmod(left, right)  # C semantics: sign of the dividend
        return {
            "+": lambda: left + right, "-": lambda: left - right,
            "*": lambda: left * right,
            "<": lambda: left < right, "<=": lambda: left <= right,
            ">": lambda: left > right, ">=": lambda: left >= right,
            "==": lambda: left == right, "!=": lambda: left != right,
        }[op]()
    raise NotImplementedError(repr(expr))


def enumeration_verdict(constraint: Constraint) -> str:
    """sat/unsat by evaluating the formula over the full integer grid."""
    axes = []
    for decl in constraint.variables:
        lo, hi = decl.bounds()
        axes.append(np.arange(int(lo), int(hi) + 1, dtype=np.int64))
    grids = np.meshgrid(*axes, indexing="ij") if axes else []
    arrays = {decl.name: grid
              for decl, grid in zip(constraint.variables, grids)}
    result = _numpy_eval(constraint.expr, arrays)
    return "sat" if bool(np.any(result)) else "unsat"


# --------------------------------------------------------------------------
# Finite-trace LTL by textbook recursion over boolean atom traces

class BitTrace:
    """A trace whose snapshots carry boolean variables a, b directly."""

    def __init__(self, rows: Sequence[Tuple[bool, bool]]):
        self.rows = list(rows)

    def __len__(self):
        return len(self.rows)


A_VAR, B_VAR = VarRef("a"), VarRef("b")
ATOM_A, ATOM_B = ltl.Atom(A_VAR), ltl.Atom(B_VAR)


def brute_ltl(phi, trace: BitTrace, i: int) -> bool:
    """Direct transcription of the finite-trace semantics definition."""
    n = len(trace)
    if isinstance(phi, ltl.Atom):
        name = phi.expr.name
        return trace.rows[i][0 if name == "a" else 1]
    if isinstance(phi, ltl.Not):
        return not brute_ltl(phi.sub, trace, i)
    if isinstance(phi, ltl.And):
        return brute_ltl(phi.left, trace, i) and brute_ltl(phi.right, trace, i)
    if isinstance(phi, ltl.Or):
        return brute_ltl(phi.left, trace, i) or brute_ltl(phi.right, trace, i)
    if isinstance(phi, ltl.Implies):
        return (not brute_ltl(phi.left, trace, i)) or brute_ltl(phi.right, trace, i)
    if isinstance(phi, ltl.Next):
        return i + 1 < n and brute_ltl(phi.sub, trace, i + 1)
    if isinstance(phi, ltl.Eventually):
        return any(brute_ltl(phi.sub, trace, j) for j in range(i, n))
    if isinstance(phi, ltl.Always):
        return all(brute_ltl(phi.sub, trace, j) for j in range(i, n))
    if isinstance(phi, ltl.Until):
        return any(brute_ltl(phi.right, trace, j)
                   and all(brute_ltl(phi.left, trace, k) for k in range(i, j))
                   for j in range(i, n))
    raise TypeError(repr(phi))


class FakeSnapshot:
    def __init__(self, values):
        self.values = values


_BIT_DATADICT = DataDict(entries=(
    VarDecl("a", VarType.BOOL, False),
    VarDecl("b", VarType.BOOL, False)))


class FakeTrace:
    """Adapts boolean rows to the snapshots/datadict protocol.

    One shared data dictionary keeps the compiled-atom cache warm across
    the exhaustive sweeps.
    """

    def __init__(self, bits: BitTrace):
        self.snapshots = [FakeSnapshot({"a": a, "b": b}) for a, b in bits.rows]
        self.datadict = _BIT_DATADICT


def all_bit_traces(max_len: int):
    for length in range(1, max_len + 1):
        for bits in itertools.product([False, True], repeat=2 * length):
            yield BitTrace([(bits[2 * i], bits[2 * i + 1])
                            for i in range(length)])


_UNARY_OPS = (ltl.Not, ltl.Next, ltl.Eventually, ltl.Always)
_BINARY_OPS = (ltl.And, ltl.Or, ltl.Implies, ltl.Until)


def ltl_formulas_of_depth(max_depth: int):
    """Every distinct formula tree over atoms a, b up to the given depth.

    Sizes: depth 0 -> 2, depth <= 1 -> 26, depth <= 2 -> 2810.
    A tree of depth exactly d has at least one child of depth exactly d-1.
    """
    exact = [[ATOM_A, ATOM_B]]  # exact[d] = trees of depth exactly d
    for d in range(1, max_depth + 1):
        new = []
        for op in _UNARY_OPS:
            new.extend(op(phi) for phi in exact[d - 1])
        up_to_dm1 = [phi for level in exact for phi in level]
        up_to_dm2 = [phi for level in exact[:-1] for phi in level]
        for op in _BINARY_OPS:
            new.extend(op(left, right)
                       for left in exact[d - 1] for right in up_to_dm1)
            new.extend(op(left, right)
                       for left in up_to_dm2 for right in exact[d - 1])
        exact.append(new)
    return [phi for level in exact for phi in level]


def random_ltl_formula(rng: random.Random, depth: int):
    if depth == 0:
        return rng.choice([ATOM_A, ATOM_B])
    op = rng.choice(["not", "next", "eventually", "always",
                     "and", "or", "implies", "until"])
    if op in ("not", "next", "eventually", "always"):
        sub = random_ltl_formula(rng, depth - 1)
        return {"not": ltl.Not, "next": ltl.Next,
                "eventually": ltl.Eventually, "always": ltl.Always}[op](sub)
    left = random_ltl_formula(rng, depth - 1)
    right = random_ltl_formula(rng, rng.randint(0, depth - 1))
    pair = {"and": ltl.And, "or": ltl.Or, "implies": ltl.Implies,
            "until": ltl.Until}[op]
    return pair(left, right)


# --------------------------------------------------------------------------
# Concrete statement execution (replay oracle for generated tests)

def concrete_run_task(task, datadict: DataDict, inputs: Dict[str, object]):
    """Execute a loop-free task directly; returns (values, decision log).

    The decision log records (condition expr id, outcome) in execution
    order — an independent replay of what symbolic path collection claims.
    """
    from aasrdl.evaluator import State, coerce, default_raw, eval_expr

    values = {}
    for decl in datadict.entries:
        raw = decl.init if decl.init is not None else default_raw(decl.vtype)
        values[decl.name] = coerce(raw, decl.vtype)
    for name, value in inputs.items():
        decl = datadict.var(name)
        values[name] = coerce(value.raw if hasattr(value, "raw") else value,
                              decl.vtype)
    state = State(datadict=datadict, values=values)
    log = []

    from aasrdl.model import Assign, Call, If

    def exec_stmts(stmts):
        for stmt in stmts:
            if isinstance(stmt, Assign):
                state.set(stmt.var, eval_expr(stmt.expr, state).raw)
            elif isinstance(stmt, If):
                outcome = eval_expr(stmt.cond, state).raw
                log.append((id(stmt.cond), bool(outcome)))
                exec_stmts(stmt.then if outcome else stmt.orelse)

    exec_stmts(task)
    return state.values, log
