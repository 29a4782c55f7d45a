"""Finite-trace linear temporal logic over simulation snapshots.

Formulas are evaluated against a bounded window of trace positions with
strong-next semantics: `X phi` at the last position is false, never
vacuously true — the conservative reading for safety review of bounded
runs. `G phi` holds when phi holds at every remaining position, `F phi`
when it holds at some remaining position, and `phi U psi` when psi occurs
and phi holds at every position before it.

Atoms are boolean expressions over data-dictionary variables, evaluated on
individual snapshots.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .evaluator import evaluator_for
from .model import DataDict, Expr
from .printer import format_expr


@dataclass(frozen=True)
class Atom:
    expr: Expr


@dataclass(frozen=True)
class Not:
    sub: "LtlFormula"


@dataclass(frozen=True)
class And:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Or:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Implies:
    left: "LtlFormula"
    right: "LtlFormula"


@dataclass(frozen=True)
class Next:
    sub: "LtlFormula"


@dataclass(frozen=True)
class Eventually:
    sub: "LtlFormula"


@dataclass(frozen=True)
class Always:
    sub: "LtlFormula"


@dataclass(frozen=True)
class Until:
    left: "LtlFormula"
    right: "LtlFormula"


LtlFormula = object  # union of the node classes above


def format_ltl(phi: LtlFormula) -> str:
    if isinstance(phi, Atom):
        return f"({format_expr(phi.expr)})"
    if isinstance(phi, Not):
        return f"!{format_ltl(phi.sub)}"
    if isinstance(phi, Next):
        return f"X {format_ltl(phi.sub)}"
    if isinstance(phi, Eventually):
        return f"F {format_ltl(phi.sub)}"
    if isinstance(phi, Always):
        return f"G {format_ltl(phi.sub)}"
    if isinstance(phi, And):
        return f"({format_ltl(phi.left)} && {format_ltl(phi.right)})"
    if isinstance(phi, Or):
        return f"({format_ltl(phi.left)} || {format_ltl(phi.right)})"
    if isinstance(phi, Implies):
        return f"({format_ltl(phi.left)} -> {format_ltl(phi.right)})"
    if isinstance(phi, Until):
        return f"({format_ltl(phi.left)} U {format_ltl(phi.right)})"
    raise TypeError(f"not an LTL formula: {phi!r}")


def ltl_atoms(phi: LtlFormula) -> List[Atom]:
    """Atoms of a formula in left-to-right order (duplicates included)."""
    if isinstance(phi, Atom):
        return [phi]
    if isinstance(phi, (Not, Next, Eventually, Always)):
        return ltl_atoms(phi.sub)
    return ltl_atoms(phi.left) + ltl_atoms(phi.right)


def _truth_vector(phi: LtlFormula, atom_rows: Dict[int, Sequence[bool]],
                  length: int) -> List[bool]:
    """Truth of phi at every position of a window, computed bottom-up.

    Iterative per layer, so windows of any length evaluate without
    recursion-depth limits in the temporal operators.
    """
    if isinstance(phi, Atom):
        return list(atom_rows[id(phi)][:length])
    if isinstance(phi, Not):
        return [not v for v in _truth_vector(phi.sub, atom_rows, length)]
    if isinstance(phi, And):
        lv = _truth_vector(phi.left, atom_rows, length)
        rv = _truth_vector(phi.right, atom_rows, length)
        return [a and b for a, b in zip(lv, rv)]
    if isinstance(phi, Or):
        lv = _truth_vector(phi.left, atom_rows, length)
        rv = _truth_vector(phi.right, atom_rows, length)
        return [a or b for a, b in zip(lv, rv)]
    if isinstance(phi, Implies):
        lv = _truth_vector(phi.left, atom_rows, length)
        rv = _truth_vector(phi.right, atom_rows, length)
        return [(not a) or b for a, b in zip(lv, rv)]
    if isinstance(phi, Next):
        sv = _truth_vector(phi.sub, atom_rows, length)
        return [sv[i + 1] if i + 1 < length else False for i in range(length)]
    if isinstance(phi, Eventually):
        sv = _truth_vector(phi.sub, atom_rows, length)
        out = [False] * length
        seen = False
        for i in range(length - 1, -1, -1):
            seen = seen or sv[i]
            out[i] = seen
        return out
    if isinstance(phi, Always):
        sv = _truth_vector(phi.sub, atom_rows, length)
        out = [False] * length
        holds = True
        for i in range(length - 1, -1, -1):
            holds = holds and sv[i]
            out[i] = holds
        return out
    if isinstance(phi, Until):
        lv = _truth_vector(phi.left, atom_rows, length)
        rv = _truth_vector(phi.right, atom_rows, length)
        out = [False] * length
        nxt = False
        for i in range(length - 1, -1, -1):
            out[i] = rv[i] or (lv[i] and nxt)
            nxt = out[i]
        return out
    raise TypeError(f"not an LTL formula: {phi!r}")


def _atom_rows(phi: LtlFormula, snapshots: Sequence, datadict: DataDict,
               length: int) -> Dict[int, List[bool]]:
    ev = evaluator_for(datadict)
    rows: Dict[int, List[bool]] = {}
    for atom in ltl_atoms(phi):
        if id(atom) in rows:
            continue
        fn = ev.compile(atom.expr)
        rows[id(atom)] = [bool(fn(snapshots[i].values)) for i in range(length)]
    return rows


def eval_ltl(phi: LtlFormula, trace, position: int = 0,
             length: Optional[int] = None) -> bool:
    """Does phi hold at `position` of the trace's first `length` snapshots?

    `trace` is anything carrying `snapshots` (each with a `values` map) and
    a `datadict`; `length` defaults to the full trace.
    """
    snapshots = trace.snapshots
    n = len(snapshots) if length is None else min(length, len(snapshots))
    if not 0 <= position < n:
        raise IndexError(f"position {position} outside trace window of {n}")
    rows = _atom_rows(phi, snapshots, trace.datadict, n)
    return _truth_vector(phi, rows, n)[position]


def eval_ltl_prefixes(phi: LtlFormula, trace, lengths: Sequence[int]) -> Dict[int, bool]:
    """Truth of phi at position 0 for several prefix lengths of one trace.

    Equivalent to calling eval_ltl once per prefix; atom valuations are
    shared across prefixes since an atom's truth at a position does not
    depend on the window length.
    """
    snapshots = trace.snapshots
    usable = [n for n in lengths if 0 < n <= len(snapshots)]
    if not usable:
        return {}
    rows = _atom_rows(phi, snapshots, trace.datadict, max(usable))
    return {n: _truth_vector(phi, rows, n)[0] for n in usable}
