"""Shared fixtures: model sources and parse helpers."""

import pytest

from aasrdl.parser import parse_expression, parse_model


ENGINE_SRC = """
model engine_start

datadict {
  const ES_SLOW : int32 = 2 ;
  var ES : int32 init 2 ;
  input N2 : float64 init 0.0 min 0.0 max 1000.0 ;
  input Ain1 : float64 init 1.0 min -100.0 max 100.0 ;
  input Ain2 : float64 init 1.0 min -100.0 max 100.0 ;
  input Ain3 : float64 init 2.0 min -100.0 max 100.0 ;
  var Ax : float64 init 0.0 ;
  var Ay : float64 init 0.0 ;
  var Az : float64 init 0.0 ;
  var stable : bool init false ;
}

module module_1_2 {
  in { N2 }
  out { Ay }
  task {
    Ay = N2 / 100.0 ;
  }
}

module module_1_1 {
  in { Ain1 Ain2 Ain3 }
  out { Ax Ay Az stable }
  task {
    Ax = Ain1 * 2.0 ;
    Ay = Ain2 + 1.0 ;
    Az = Ain3 - 1.0 ;
    if (Ax > 0.0 && Ay > 0.0 && Az > 0.0) {
      stable = true ;
    } else {
      stable = false ;
    }
  }
}

mode SLOW init {
  guard ES == ES_SLOW ;
  procedure period 5 {
    call module_1_2 ;
    call module_1_1 ;
  }
  transition priority 1 to BEYONDSLOW when N2 < 500 ;
  transition priority 2 to NORMAL when N2 > 200 ;
}

mode BEYONDSLOW {
  guard true ;
  procedure period 5 { }
}

mode NORMAL {
  guard true ;
  procedure period 10 { }
}
"""

COUNTER_SRC = """
model counter
datadict {
  var x : int32 init 0 ;
}
mode RUN init {
  guard true ;
  procedure period 1 {
    x = x + 1 ;
  }
}
"""


def parse_ok(src, filename="<test>"):
    result = parse_model(src, filename)
    assert result.ok, [str(d) for d in result.diagnostics]
    return result.model


def expr_of(text, datadict):
    expr, diags = parse_expression(text, datadict)
    assert expr is not None, [str(d) for d in diags]
    return expr


@pytest.fixture
def engine():
    return parse_ok(ENGINE_SRC, "engine_start.arl")


@pytest.fixture
def counter():
    return parse_ok(COUNTER_SRC, "counter.arl")
