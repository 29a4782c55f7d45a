"""Model checking diagnostics, dependency graphs, cycle enumeration."""

import itertools
import random

import pytest

from aasrdl.analysis import (
    DepGraph,
    build_dep_graph,
    check_model,
    find_cycles,
    model_dep_graph,
    serialize_diagnostics,
)
from aasrdl.model import strip_spans
from aasrdl.parser import parse_model
from conftest import ENGINE_SRC, parse_ok


def codes(diags):
    return [d.code for d in diags]


def errors(diags):
    return [d for d in diags if d.severity == "error"]


# --------------------------------------------------------------------------
# check_model

def test_clean_engine_model(engine):
    assert check_model(engine) == []


def test_undeclared_output():
    src = """
model t
datadict {
  var Ax : float64 init 0.0 ; var Ay : float64 init 0.0 ;
  var Az : float64 init 0.0 ;
}
module m {
  in { }
  out { Ay Az }
  task { Ax = 1.0 ; Ay = 2.0 ; Az = 3.0 ; }
}
mode M init { guard true ; procedure period 1 { call m ; } }
"""
    diags = check_model(parse_ok(src))
    assert any(d.code == "UndeclaredOutput" and "'Ax'" in d.detail
               for d in diags)


def test_undeclared_input():
    src = """
model t
datadict { var a : float64 init 0.0 ; var b : float64 init 0.0 ; }
module m { in { } out { b } task { b = a + 1.0 ; } }
mode M init { guard true ; procedure period 1 { call m ; } }
"""
    diags = check_model(parse_ok(src))
    assert any(d.code == "UndeclaredInput" and "'a'" in d.detail for d in diags)


def test_capitalization_typo_is_undefined_variable():
    # the guard references n2 while the dictionary declares N2
    src = """
model t
datadict { var N2 : float64 init 0.0 ; }
mode M init { guard n2 < 500.0 ; procedure period 1 { } }
"""
    diags = check_model(parse_ok(src))
    assert any(d.code == "UndefinedVariable" and "'n2'" in d.detail
               for d in diags)


def test_use_before_init():
    src = """
model t
datadict { var x : float64 ; var y : float64 init 0.0 ; }
mode M init { guard true ; procedure period 1 { y = x + 1.0 ; x = 2.0 ; } }
"""
    diags = check_model(parse_ok(src))
    assert any(d.code == "UseBeforeInit" and "'x'" in d.detail for d in diags)


def test_use_before_init_exemptions():
    # inputs and write-first variables are exempt
    src = """
model t
datadict { input u : float64 ; var x : float64 ; }
mode M init { guard u > 0.0 ; procedure period 1 { x = u ; u = x ; } }
"""
    diags = check_model(parse_ok(src))
    assert not any(d.code == "UseBeforeInit" for d in diags)


def test_use_before_init_branch_sensitivity():
    # assigned in only one branch: a read after the if may still be early
    src = """
model t
datadict { var x : float64 ; var y : float64 init 0.0 ; input c : bool init false ; }
mode M init {
  guard true ;
  procedure period 1 {
    if (c) { x = 1.0 ; }
    y = x ;
  }
}
"""
    diags = check_model(parse_ok(src))
    assert any(d.code == "UseBeforeInit" for d in diags)


def test_unused_declared_io_warning():
    src = """
model t
datadict { var a : float64 init 0.0 ; var b : float64 init 0.0 ; }
module m { in { a b } out { b } task { b = a ; } }
mode M init { guard true ; procedure period 1 { call m ; } }
"""
    diags = check_model(parse_ok(src))
    unused = [d for d in diags if d.code == "UnusedDeclaredIO"]
    assert len(unused) == 1 and "'b'" in unused[0].detail
    assert all(d.severity == "warning" for d in unused)


def test_uncalled_module_warning():
    src = """
model t
datadict { var a : float64 init 0.0 ; }
module used { in { } out { a } task { a = 1.0 ; } }
module orphan { in { a } out { a } task { a = a ; } }
mode M init { guard true ; procedure period 1 { call used ; } }
"""
    diags = check_model(parse_ok(src))
    assert any(d.code == "UncalledModule" and "'orphan'" in d.detail
               for d in diags)


def test_duplicate_name_on_programmatic_model(engine):
    import dataclasses
    doubled = dataclasses.replace(engine, modes=engine.modes + (engine.modes[-1],))
    diags = check_model(doubled)
    assert any(d.code == "DuplicateName" for d in diags)


def test_module_call_cycle_is_error():
    src = """
model t
datadict { var a : float64 init 0.0 ; }
module p { in { } out { a } task { call q ; } }
module q { in { } out { a } task { call p ; } }
mode M init { guard true ; procedure period 1 { call p ; } }
"""
    diags = check_model(parse_ok(src))
    cycle = [d for d in diags if d.code == "CircularDependency"
             and "call cycle" in d.detail]
    assert cycle and all(d.severity == "error" for d in cycle)


def test_variable_cycle_is_warning():
    src = """
model t
datadict { var a : float64 init 0.0 ; var b : float64 init 0.0 ; }
module m { in { a b } out { a b } task { a = b ; b = a ; } }
mode M init { guard true ; procedure period 1 { call m ; } }
"""
    diags = check_model(parse_ok(src))
    cyc = [d for d in diags if d.code == "CircularDependency"]
    assert cyc and all(d.severity == "warning" for d in cyc)
    assert any("a -> b -> a" in d.detail or "b -> a -> b" in d.detail
               for d in cyc)


def test_report_serialization_is_sorted():
    src = """
model t
datadict { var N2 : float64 init 0.0 ; }
mode M init { guard n2 < 1.0 && zz > 2.0 ; procedure period 1 { } }
"""
    diags = check_model(parse_ok(src))
    text = serialize_diagnostics(diags)
    lines = text.splitlines()
    assert lines == sorted(lines) or len(lines) == 1


# --------------------------------------------------------------------------
# dependency graphs

def module_of(src, name="m"):
    model = parse_ok(src)
    return model.module(name), model


def test_dep_edge_simple():
    module, model = module_of("""
model t
datadict { var N2 : float64 init 0.0 ; var Ax : float64 init 0.0 ; }
module m { in { N2 } out { Ax } task { Ax = N2 + 1.0 ; } }
mode M init { guard true ; procedure period 1 { call m ; } }
""")
    graph = build_dep_graph(module, model)
    assert ("N2", "Ax") in graph.edges


def test_dep_edges_through_condition():
    """if (c) { y = x; } adds both c->y and x->y (hand-enumerated paths)."""
    module, model = module_of("""
model t
datadict {
  var c : bool init false ; var x : float64 init 0.0 ;
  var y : float64 init 0.0 ;
}
module m { in { c x } out { y } task { if (c) { y = x ; } } }
mode M init { guard true ; procedure period 1 { call m ; } }
""")
    graph = build_dep_graph(module, model)
    assert ("c", "y") in graph.edges and ("x", "y") in graph.edges


def test_dep_edges_symmetric_pair():
    module, model = module_of("""
model t
datadict { var a : float64 init 0.0 ; var b : float64 init 0.0 ; }
module m { in { a b } out { a b } task { a = b ; b = a ; } }
mode M init { guard true ; procedure period 1 { call m ; } }
""")
    graph = build_dep_graph(module, model)
    assert ("b", "a") in graph.edges and ("a", "b") in graph.edges


def test_dep_graph_stable_under_order_preserving_permutation():
    """The edge set is invariant under every permutation of independent
    assignments (all def-use-preserving reorderings of the task)."""
    statements = ["p = a ;", "q = b ;", "r = a + b ;"]
    base = """
model t
datadict {{
  var a : float64 init 0.0 ; var b : float64 init 0.0 ;
  var p : float64 init 0.0 ; var q : float64 init 0.0 ;
  var r : float64 init 0.0 ;
}}
module m {{ in {{ a b }} out {{ p q r }} task {{ {body} }} }}
mode M init {{ guard true ; procedure period 1 {{ call m ; }} }}
"""
    references = None
    for permutation in itertools.permutations(statements):
        module, _ = module_of(base.format(body=" ".join(permutation)))
        edges = set(build_dep_graph(module).edges)
        if references is None:
            references = edges
        assert edges == references


def test_call_contributes_interface_edges(engine):
    graph = model_dep_graph(engine)
    # module_1_2: N2 feeds Ay through the declared interface
    assert ("N2", "Ay") in graph.edges


# --------------------------------------------------------------------------
# cycle enumeration vs brute force

def brute_force_cycles(nodes, edges):
    """Every elementary cycle by direct enumeration of vertex sequences."""
    edge_set = set(edges)
    found = set()
    for k in range(1, len(nodes) + 1):
        for combo in itertools.permutations(nodes, k):
            if min(combo) != combo[0]:
                continue  # canonical rotation only
            path_edges = list(zip(combo, combo[1:] + (combo[0],)))
            if all(e in edge_set for e in path_edges):
                found.add(combo)
    return sorted([list(c) for c in found], key=lambda c: (len(c), c))


def test_two_cycle():
    graph = DepGraph(("a", "b"), (("a", "b"), ("b", "a")), "t")
    assert find_cycles(graph) == [["a", "b"]]


def test_acyclic_chain():
    graph = DepGraph(("x", "y", "z"), (("x", "y"), ("y", "z")), "t")
    assert find_cycles(graph) == []


def test_three_cycle_with_chord():
    nodes = ("a", "b", "c")
    edges = (("a", "b"), ("b", "c"), ("c", "a"), ("a", "c"))
    graph = DepGraph(nodes, edges, "t")
    assert find_cycles(graph) == brute_force_cycles(nodes, edges)


def test_self_loop():
    graph = DepGraph(("a",), (("a", "a"),), "t")
    assert find_cycles(graph) == [["a"]]


@pytest.mark.parametrize("seed", range(20))
def test_cycles_match_brute_force_random(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 8)
    nodes = tuple(f"v{i}" for i in range(n))
    edges = tuple((a, b) for a in nodes for b in nodes
                  if rng.random() < 0.25)
    graph = DepGraph(nodes, edges, "t")
    assert find_cycles(graph) == brute_force_cycles(nodes, edges)


# --------------------------------------------------------------------------
# consistency with simulation

def test_clean_on_simulating_models(engine, counter):
    """A model that simulates without runtime errors must not report
    UndefinedVariable or UseBeforeInit."""
    from aasrdl.simulator import constant_profile, run

    for model in (engine, counter):
        trace = run(model, constant_profile(model, horizon=5))
        assert not trace.aborted
        bad = [d for d in check_model(model)
               if d.code in ("UndefinedVariable", "UseBeforeInit")]
        assert bad == []
