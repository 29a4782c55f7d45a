"""Statistical estimation: sample counts, batches, abort accounting."""

import math
from decimal import Decimal, getcontext

import pytest

from aasrdl import ltl
from aasrdl.estimate import (
    EstimationConfig,
    estimate,
    estimate_many,
    render_csv,
    render_table,
    sample_count,
)
from aasrdl.model import Binary, FloatLit, IntLit, VarRef
from aasrdl.parser import parse_ltl
from aasrdl.simulator import Uniform, constant_profile
from conftest import parse_ok


def hoeffding_oracle(delta: str, sigma: str) -> int:
    """High-precision independent computation of ceil(ln(2/s) / (2 d^2))."""
    getcontext().prec = 60
    d = Decimal(delta)
    s = Decimal(sigma)
    value = (Decimal(2) / s).ln() / (2 * d * d)
    return int(math.ceil(value))


def test_sample_count_pinned_values():
    assert hoeffding_oracle("0.01", "0.05") == 18445
    assert sample_count(0.01, 0.05) == 18445
    assert hoeffding_oracle("0.1", "0.05") == 185
    assert sample_count(0.1, 0.05) == 185
    assert hoeffding_oracle("0.02", "0.05") == 4612
    assert sample_count(0.02, 0.05) == 4612


def test_sample_count_rejects_bad_parameters():
    with pytest.raises(ValueError):
        sample_count(0.5, 1.99)
    with pytest.raises(ValueError):
        sample_count(0.0, 0.05)
    with pytest.raises(ValueError):
        sample_count(1.5, 0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        EstimationConfig(horizons=())
    with pytest.raises(ValueError):
        EstimationConfig(horizons=(5, 1))


BERNOULLI_SRC = """
model bernoulli
datadict {
  input u : float64 init 0.0 min 0.0 max 1.0 ;
}
mode M init { guard true ; procedure period 1 { } }
"""


def bernoulli_setup(threshold: float):
    model = parse_ok(BERNOULLI_SRC)
    profile = constant_profile(model, overrides={"u": Uniform(0.0, 1.0)})
    phi = ltl.Atom(Binary("<", VarRef("u"), FloatLit(threshold)))
    return model, profile, phi


def test_deterministic_property_is_certain():
    model = parse_ok("""
model t
datadict { var x : int32 init 0 ; }
mode M init { guard true ; procedure period 1 { x = x + 1 ; } }
""")
    phi = ltl.Always(ltl.Atom(Binary(">=", VarRef("x"), IntLit(1))))
    result = estimate(model, constant_profile(model),
                      phi, EstimationConfig(horizons=(0, 5, 10), samples=50))
    assert all(row.estimate == 1.0 for row in result.rows)
    assert not result.aborted


def test_bernoulli_estimate_near_truth():
    model, profile, phi = bernoulli_setup(0.3)
    config = EstimationConfig(horizons=(0,), samples=2000, seed=17)
    result = estimate(model, profile, phi, config)
    assert abs(result.rows[0].estimate - 0.3) < 0.05


def test_interval_clipping():
    model, profile, phi = bernoulli_setup(2.0)  # always true
    config = EstimationConfig(horizons=(0,), delta=0.1, samples=100)
    result = estimate(model, profile, phi, config)
    row = result.rows[0]
    assert row.estimate == 1.0
    assert row.interval(config.delta) == (0.9, 1.0)


TRAP_SRC = """
model trap
datadict {
  var ES : int32 init 2 ;
  var armed : bool ;
}
mode WORK init {
  guard true ;
  procedure period 1 { }
  transition priority 1 to DONE when armed do { ES = 5 ; } ;
  transition priority 2 to TRAP when true do { ES = 4 ; } ;
}
mode TRAP {
  guard true ;
  procedure period 1 { }
}
mode DONE {
  guard true ;
  procedure period 1 { }
}
"""


def test_trap_mode_gives_zero_column():
    """A never-armed flag strands the system in a trap mode, so the
    eventually-stays property scores 0% at every horizon."""
    model = parse_ok(TRAP_SRC)
    result = parse_ltl("F G (ES == 5 || ES == 6 || ES == 8)", model.datadict)
    assert result.ok
    config = EstimationConfig(horizons=(0, 10, 50, 100), samples=80)
    out = estimate(model, constant_profile(model), result.formula, config)
    assert all(row.successes == 0 for row in out.rows)


def test_monotone_rising_column_for_eventually():
    """An F-of-state property is nondecreasing in the horizon on one
    fixed run set."""
    model = parse_ok(BERNOULLI_SRC)
    profile = constant_profile(model, overrides={"u": Uniform(0.0, 1.0)})
    phi = ltl.Eventually(ltl.Atom(Binary("<", VarRef("u"), FloatLit(0.05))))
    config = EstimationConfig(horizons=(0, 5, 20, 60), samples=400, seed=4)
    result = estimate(model, profile, phi, config)
    estimates = [row.estimate for row in result.rows]
    assert estimates == sorted(estimates)
    assert estimates[-1] > estimates[0]


ABORT_SRC = """
model fragile
datadict {
  input u : float64 init 0.0 min 0.0 max 1.0 ;
  var k : int32 init 0 ;
}
mode M init {
  guard u < 0.5 ;
  procedure period 1 { k = k + 1 ; }
}
"""


def test_aborted_runs_count_as_failures_and_are_tallied():
    model = parse_ok(ABORT_SRC)
    profile = constant_profile(model, overrides={"u": Uniform(0.0, 1.0)})
    phi = ltl.Always(ltl.Atom(Binary(">=", VarRef("k"), IntLit(0))))
    config = EstimationConfig(horizons=(0, 3), samples=300, seed=5)
    result = estimate(model, profile, phi, config)
    assert result.aborted.get("GuardViolation", 0) > 0
    # about half the runs die at cycle 0, so even horizon 0 is well below 1
    assert result.rows[0].estimate < 0.75
    # longer horizons can only lose more runs
    assert result.rows[1].successes <= result.rows[0].successes


def test_determinism_and_parallel_equivalence():
    model, profile, phi = bernoulli_setup(0.5)
    config = EstimationConfig(horizons=(0, 2), samples=120, seed=3)
    serial_a = estimate(model, profile, phi, config)
    serial_b = estimate(model, profile, phi, config)
    assert serial_a.rows == serial_b.rows
    parallel = estimate(model, profile, phi,
                        EstimationConfig(horizons=(0, 2), samples=120,
                                         seed=3, jobs=2))
    assert parallel.rows == serial_a.rows


def test_timeout_marks_incomplete():
    model, profile, phi = bernoulli_setup(0.5)
    config = EstimationConfig(horizons=(0,), samples=100000, timeout=0.05)
    result = estimate(model, profile, phi, config)
    assert result.incomplete
    assert result.rows[0].samples < 100000


def test_estimate_many_shares_runs():
    model, profile, _ = bernoulli_setup(0.5)
    low = ltl.Atom(Binary("<", VarRef("u"), FloatLit(0.5)))
    high = ltl.Atom(Binary(">=", VarRef("u"), FloatLit(0.5)))
    config = EstimationConfig(horizons=(0,), samples=500, seed=9)
    results = estimate_many(model, profile, [("low", low), ("high", high)],
                            config)
    assert results[0].rows[0].successes + results[1].rows[0].successes == 500


def test_render_table_shape():
    model, profile, phi = bernoulli_setup(0.5)
    config = EstimationConfig(horizons=(0, 2), samples=40)
    results = estimate_many(model, profile, [("P", phi)], config)
    table = render_table(results)
    lines = table.splitlines()
    assert lines[0].split() == ["period", "P1"]
    assert lines[1].split()[0] == "0"
    assert lines[2].split()[0] == "2"
    csv_text = render_csv(results)
    assert csv_text.splitlines()[0] == \
        "property,horizon,samples,successes,estimate,low,high"
    assert len(csv_text.splitlines()) == 3
