"""Finite-trace LTL: semantics, oracle agreement, algebraic identities."""

import random

import pytest

from aasrdl import ltl
from aasrdl.ltl import eval_ltl, eval_ltl_prefixes
from aasrdl.model import Binary, IntLit, VarRef
from aasrdl.simulator import Constant, constant_profile, run
from conftest import parse_ok
from oracles import (
    ATOM_A,
    ATOM_B,
    BitTrace,
    FakeTrace,
    all_bit_traces,
    brute_ltl,
    ltl_formulas_of_depth,
    random_ltl_formula,
)


def bit_trace(*rows):
    return BitTrace(rows)


def check(phi, trace: BitTrace, i=0):
    mine = eval_ltl(phi, FakeTrace(trace), i)
    ref = brute_ltl(phi, trace, i)
    assert mine == ref
    return mine


# --------------------------------------------------------------------------
# pinned examples

def test_always_true():
    for trace in (bit_trace((False, False)),
                  bit_trace((True, True), (False, True))):
        phi = ltl.Always(ltl.Or(ATOM_A, ltl.Not(ATOM_A)))
        assert check(phi, trace) is True


def test_eventually_reaches_value():
    """F(x == 3) against an integer-valued counter trace."""
    model = parse_ok("""
model t
datadict { var x : int32 init 0 ; }
mode A init { guard true ; procedure period 1 { x = x + 1 ; } }
""")
    phi = ltl.Eventually(ltl.Atom(Binary("==", VarRef("x"), IntLit(3))))
    trace = run(model, constant_profile(model, horizon=3))  # x: 1,2,3
    assert eval_ltl(phi, trace) is True
    short = run(model, constant_profile(model, horizon=2))  # x: 1,2
    assert eval_ltl(phi, short) is False


def test_eventually_always_stability():
    # stable from index 2 onward, length 10
    rows = [(False, False)] * 2 + [(True, False)] * 8
    phi = ltl.Eventually(ltl.Always(ATOM_A))
    assert check(phi, bit_trace(*rows)) is True
    # a failure at the last index defeats FG
    rows_bad = rows[:-1] + [(False, False)]
    assert check(phi, bit_trace(*rows_bad)) is False


def test_strong_next_at_trace_end():
    phi = ltl.Next(ATOM_A)
    assert check(phi, bit_trace((True, True))) is False  # no successor
    assert check(phi, bit_trace((False, False), (True, False))) is True


def test_until_semantics():
    phi = ltl.Until(ATOM_A, ATOM_B)
    assert check(phi, bit_trace((True, False), (True, False), (False, True))) is True
    assert check(phi, bit_trace((True, False), (False, False), (False, True))) is False
    assert check(phi, bit_trace((False, True))) is True  # psi immediately


def test_positions_other_than_zero():
    rows = [(False, False), (True, False), (True, False)]
    phi = ltl.Always(ATOM_A)
    assert check(phi, bit_trace(*rows), 0) is False
    assert check(phi, bit_trace(*rows), 1) is True


def test_position_out_of_range():
    with pytest.raises(IndexError):
        eval_ltl(ATOM_A, FakeTrace(bit_trace((True, True))), 5)


# --------------------------------------------------------------------------
# oracle agreement

def test_exhaustive_depth_two_agreement():
    """Every formula of depth <= 2 against every binary trace of length
    <= 3, at every position: implementation vs textbook recursion.

    The acceptance suite extends this sweep to traces of length <= 6.
    """
    formulas = ltl_formulas_of_depth(2)
    assert len(formulas) == 2810
    traces = list(all_bit_traces(3))
    for trace in traces:
        fake = FakeTrace(trace)
        for phi in formulas:
            for i in range(len(trace)):
                assert eval_ltl(phi, fake, i) == brute_ltl(phi, trace, i)


def test_random_depth_three_agreement():
    rng = random.Random(2024)
    traces = list(all_bit_traces(6))
    for _ in range(400):
        phi = random_ltl_formula(rng, 3)
        trace = rng.choice(traces)
        i = rng.randrange(len(trace))
        assert eval_ltl(phi, FakeTrace(trace), i) == brute_ltl(phi, trace, i)


# --------------------------------------------------------------------------
# identities

def test_always_is_not_eventually_not():
    rng = random.Random(7)
    for _ in range(200):
        phi = random_ltl_formula(rng, 2)
        trace = bit_trace(*[(rng.random() < 0.5, rng.random() < 0.5)
                            for _ in range(rng.randint(1, 6))])
        fake = FakeTrace(trace)
        lhs = eval_ltl(ltl.Always(phi), fake)
        rhs = not eval_ltl(ltl.Eventually(ltl.Not(phi)), fake)
        assert lhs == rhs


def test_eventually_is_true_until():
    true_atom = ltl.Or(ATOM_A, ltl.Not(ATOM_A))
    rng = random.Random(8)
    for _ in range(200):
        phi = random_ltl_formula(rng, 2)
        trace = bit_trace(*[(rng.random() < 0.5, rng.random() < 0.5)
                            for _ in range(rng.randint(1, 6))])
        fake = FakeTrace(trace)
        assert eval_ltl(ltl.Eventually(phi), fake) == \
            eval_ltl(ltl.Until(true_atom, phi), fake)


def test_prefix_helper_matches_direct_eval():
    rng = random.Random(9)
    trace = bit_trace(*[(rng.random() < 0.5, rng.random() < 0.5)
                        for _ in range(8)])
    fake = FakeTrace(trace)
    for _ in range(50):
        phi = random_ltl_formula(rng, 3)
        by_prefix = eval_ltl_prefixes(phi, fake, [1, 3, 8])
        for n in (1, 3, 8):
            assert by_prefix[n] == eval_ltl(phi, fake, 0, length=n)


def test_long_trace_no_recursion_limit():
    model = parse_ok("""
model t
datadict { var x : int32 init 0 ; }
mode A init { guard true ; procedure period 1 { x = x + 1 ; } }
""")
    trace = run(model, constant_profile(model, horizon=6000))
    phi = ltl.Always(ltl.Atom(Binary(">", VarRef("x"), IntLit(0))))
    assert eval_ltl(phi, trace) is True


def test_format_ltl_readable():
    phi = ltl.Always(ltl.Implies(ATOM_A, ltl.Next(ATOM_B)))
    assert ltl.format_ltl(phi) == "G ((a) -> X (b))"
