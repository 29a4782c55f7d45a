"""Monte Carlo estimation of temporal-property satisfaction probability.

The sample count comes from the additive Hoeffding bound: to estimate a
probability within half-width delta at confidence error sigma,

    n = ceil(ln(2 / sigma) / (2 * delta^2))

independent runs suffice. Run j of a batch is seeded batch_seed + j, so
batches are reproducible and parallel execution equals serial execution.

A property is checked at several horizons against prefixes of each run's
trace (horizon h uses positions 0..h). Runs that end before a horizon —
guard violations, runtime errors, or an early stop signal — count as
failures at that horizon and are tallied by kind: an execution that dies
of a requirements error never certifies a property.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .ltl import LtlFormula, eval_ltl_prefixes
from .model import Model
from .simulator import Completed, EnvProfile, GuardViolation, RunError, StoppedBySignal, Trace, run


def sample_count(delta: float, sigma: float) -> int:
    """Hoeffding-bound run count for half-width delta and confidence error sigma."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not 0 < sigma < 1:
        raise ValueError(f"sigma must be in (0, 1), got {sigma}")
    return math.ceil(math.log(2.0 / sigma) / (2.0 * delta * delta))


@dataclass(frozen=True)
class EstimationConfig:
    horizons: Tuple[int, ...]
    delta: float = 0.01
    sigma: float = 0.05
    seed: int = 0
    samples: Optional[int] = None  # overrides the Hoeffding count
    timeout: Optional[float] = None  # wall-clock seconds; partial result
    jobs: int = 1

    def __post_init__(self):
        if not self.horizons:
            raise ValueError("at least one horizon is required")
        if list(self.horizons) != sorted(self.horizons):
            raise ValueError("horizons must be ascending")
        if any(h < 0 for h in self.horizons):
            raise ValueError("horizons must be nonnegative")

    def run_count(self) -> int:
        if self.samples is not None:
            return self.samples
        return sample_count(self.delta, self.sigma)


@dataclass(frozen=True)
class HorizonRow:
    horizon: int
    samples: int
    successes: int

    @property
    def estimate(self) -> float:
        return self.successes / self.samples if self.samples else 0.0

    def interval(self, delta: float) -> Tuple[float, float]:
        return (max(0.0, self.estimate - delta),
                min(1.0, self.estimate + delta))


@dataclass
class EstimationResult:
    property_text: str
    config: EstimationConfig
    rows: List[HorizonRow]
    aborted: Dict[str, int] = field(default_factory=dict)
    incomplete: bool = False  # timeout cut the batch short

    def row(self, horizon: int) -> HorizonRow:
        for r in self.rows:
            if r.horizon == horizon:
                return r
        raise KeyError(horizon)


def _status_kind(trace: Trace) -> Optional[str]:
    status = trace.status
    if isinstance(status, Completed):
        return None
    if isinstance(status, StoppedBySignal):
        return "StoppedBySignal"
    if isinstance(status, GuardViolation):
        return "GuardViolation"
    if isinstance(status, RunError):
        return status.kind
    return "Unknown"


def _evaluate_run(model: Model, profile: EnvProfile,
                  formulas: Sequence[LtlFormula], horizons: Sequence[int],
                  seed: int, strict: bool) -> Tuple[List[List[bool]], Optional[str]]:
    """One seeded run evaluated for every formula at every horizon."""
    cycles = max(horizons) + 1
    trace = run(model, replace(profile, seed=seed, horizon=cycles),
                strict=strict)
    lengths = [h + 1 for h in horizons]
    outcome: List[List[bool]] = []
    for formula in formulas:
        by_length = eval_ltl_prefixes(formula, trace, lengths)
        outcome.append([by_length.get(h + 1, False) for h in horizons])
    kind = None
    if len(trace.snapshots) < cycles:
        kind = _status_kind(trace) or "Unknown"
    return outcome, kind


# ProcessPool worker state, installed once per worker via the initializer
_WORKER: dict = {}


def _init_worker(model, profile, formulas, horizons, strict):
    _WORKER.update(model=model, profile=profile, formulas=formulas,
                   horizons=horizons, strict=strict)


def _worker_run(seed: int):
    return _evaluate_run(_WORKER["model"], _WORKER["profile"],
                         _WORKER["formulas"], _WORKER["horizons"],
                         seed, _WORKER["strict"])


def estimate_many(model: Model, profile: EnvProfile,
                  formulas: Sequence[Tuple[str, LtlFormula]],
                  config: EstimationConfig,
                  strict: bool = False) -> List[EstimationResult]:
    """Estimate several properties over one shared batch of runs."""
    if not formulas:
        return []
    total = config.run_count()
    horizons = list(config.horizons)
    phis = [phi for _, phi in formulas]

    successes = [[0] * len(horizons) for _ in formulas]
    aborted: List[Dict[str, int]] = [dict() for _ in formulas]
    completed_runs = 0
    deadline = (time.monotonic() + config.timeout
                if config.timeout is not None else None)
    incomplete = False

    def absorb(outcome: List[List[bool]], kind: Optional[str]) -> None:
        for f_index, bits in enumerate(outcome):
            for h_index, ok in enumerate(bits):
                if ok:
                    successes[f_index][h_index] += 1
            if kind is not None:
                aborted[f_index][kind] = aborted[f_index].get(kind, 0) + 1

    if config.jobs <= 1:
        for j in range(total):
            if deadline is not None and time.monotonic() > deadline:
                incomplete = True
                break
            outcome, kind = _evaluate_run(model, profile, phis, horizons,
                                          config.seed + j, strict)
            absorb(outcome, kind)
            completed_runs += 1
    else:
        chunk = max(1, min(256, total // (config.jobs * 4) or 1))
        with ProcessPoolExecutor(
                max_workers=config.jobs, initializer=_init_worker,
                initargs=(model, profile, phis, horizons, strict)) as pool:
            next_seed = 0
            while next_seed < total:
                if deadline is not None and time.monotonic() > deadline:
                    incomplete = True
                    break
                seeds = [config.seed + j for j in
                         range(next_seed, min(next_seed + chunk * config.jobs,
                                              total))]
                for outcome, kind in pool.map(_worker_run, seeds,
                                              chunksize=chunk):
                    absorb(outcome, kind)
                    completed_runs += 1
                next_seed += len(seeds)

    results = []
    for f_index, (text, _) in enumerate(formulas):
        rows = [HorizonRow(h, completed_runs, successes[f_index][h_index])
                for h_index, h in enumerate(horizons)]
        results.append(EstimationResult(text, config, rows,
                                        aborted[f_index], incomplete))
    return results


def estimate(model: Model, profile: EnvProfile, formula: LtlFormula,
             config: EstimationConfig, property_text: str = "property",
             strict: bool = False) -> EstimationResult:
    """Estimate one property's satisfaction probability per horizon."""
    return estimate_many(model, profile, [(property_text, formula)],
                         config, strict)[0]


# --------------------------------------------------------------------------
# Rendering

def render_table(results: Sequence[EstimationResult]) -> str:
    """Horizons down the rows, properties across the columns."""
    if not results:
        return "no properties\n"
    horizons = [row.horizon for row in results[0].rows]
    headers = ["period"] + [f"P{i + 1}" for i in range(len(results))]
    table = [headers]
    for h_index, horizon in enumerate(horizons):
        row = [str(horizon)]
        for result in results:
            r = result.rows[h_index]
            row.append(f"{100.0 * r.estimate:.1f}%")
        table.append(row)
    widths = [max(len(line[i]) for line in table) for i in range(len(headers))]
    lines = ["  ".join(cell.rjust(widths[i]) for i, cell in enumerate(line))
             for line in table]
    lines.append("")
    for i, result in enumerate(results):
        lines.append(f"P{i + 1}: {result.property_text}")
        row0 = result.rows[0]
        lines.append(f"    n={row0.samples}, delta={result.config.delta}, "
                     f"sigma={result.config.sigma}"
                     + (" (incomplete: timeout)" if result.incomplete else ""))
        if result.aborted:
            parts = ", ".join(f"{kind}={count}" for kind, count
                              in sorted(result.aborted.items()))
            lines.append(f"    runs ended early: {parts}")
    return "\n".join(lines) + "\n"


def render_csv(results: Sequence[EstimationResult]) -> str:
    lines = ["property,horizon,samples,successes,estimate,low,high"]
    for result in results:
        for row in result.rows:
            lo, hi = row.interval(result.config.delta)
            lines.append(f"\"{result.property_text}\",{row.horizon},"
                         f"{row.samples},{row.successes},"
                         f"{row.estimate:.6f},{lo:.6f},{hi:.6f}")
    return "\n".join(lines) + "\n"
