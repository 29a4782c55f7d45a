"""Cycle-by-cycle execution of a model under an environment profile.

Each cycle: (1) sample every input variable's stimulus, (2) check the
current mode's guard — a false guard is a requirements error that stops
the run, (3) execute the mode's procedures whose period divides the global
time, (4) try transitions in ascending priority on the post-procedure
state: the first with a true condition runs its action on a staged copy
and commits only if the target mode's guard accepts the staged state,
otherwise the action rolls back and lower priorities are tried, (5) record
a snapshot, (6) honor the stop signal and the horizon. A committed mode
switch takes effect at the end of the cycle, never mid-cycle.

Runs are deterministic: the profile seed drives one generator, consumed in
data-dictionary declaration order, so identical (model, profile) pairs
produce bit-identical traces. Writes outside a variable's declared bounds
are recorded as warnings by default and abort the run in strict mode.
"""

from __future__ import annotations

import bisect
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import yaml

from .evaluator import (
    EvalError,
    Evaluator,
    State,
    Value,
    coerce,
    default_raw,
    format_value,
)
from .model import (
    Assign,
    Call,
    ControlFlow,
    DataDict,
    Expr,
    If,
    Mode,
    Model,
    SourceSpan,
    VarDecl,
    VarKind,
    VarType,
)
from .typecheck import TypeChecker


# --------------------------------------------------------------------------
# Environment profiles

@dataclass(frozen=True)
class Constant:
    value: object


@dataclass(frozen=True)
class Uniform:
    lo: object
    hi: object


@dataclass(frozen=True)
class Normal:
    mean: float
    stddev: float


@dataclass(frozen=True)
class TimeSeries:
    points: Tuple[Tuple[int, object], ...]  # (cycle, value), step-held


Stimulus = Union[Constant, Uniform, Normal, TimeSeries]


@dataclass(frozen=True)
class EnvProfile:
    stimuli: Tuple[Tuple[str, Stimulus], ...] = ()
    seed: int = 0
    horizon: Optional[int] = None
    stop: Optional[Expr] = None

    def stimulus(self, name: str) -> Optional[Stimulus]:
        for key, stim in self.stimuli:
            if key == name:
                return stim
        return None


class ProfileError(ValueError):
    pass


def _check_stimulus_value(decl: VarDecl, value, what: str):
    if decl.vtype is VarType.BOOL:
        if not isinstance(value, bool):
            raise ProfileError(f"{what}: '{decl.name}' is bool, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProfileError(f"{what}: '{decl.name}' needs a number, got {value!r}")
    if decl.vtype is VarType.INT32 and float(value) != int(value):
        raise ProfileError(f"{what}: '{decl.name}' is int32, got {value!r}")
    coerced = coerce(value, decl.vtype)
    lo, hi = decl.bounds()
    if not lo <= coerced <= hi:
        raise ProfileError(
            f"{what}: value {value!r} outside bounds [{lo}, {hi}] of "
            f"'{decl.name}'")
    return coerced


def _parse_stimulus(decl: VarDecl, spec_value) -> Stimulus:
    name = decl.name
    if not isinstance(spec_value, dict) or len(spec_value) != 1:
        raise ProfileError(
            f"input '{name}': expected one of constant/uniform/normal/"
            f"timeseries, got {spec_value!r}")
    kind, payload = next(iter(spec_value.items()))
    if kind == "constant":
        return Constant(_check_stimulus_value(decl, payload,
                                              f"constant for '{name}'"))
    if kind == "uniform":
        if decl.vtype is VarType.BOOL:
            if payload not in (None, [], [0, 1]):
                raise ProfileError(
                    f"uniform on bool '{name}' takes no range")
            return Uniform(False, True)
        if not isinstance(payload, (list, tuple)) or len(payload) != 2:
            raise ProfileError(f"uniform for '{name}' needs [lo, hi]")
        lo = _check_stimulus_value(decl, payload[0], f"uniform lo of '{name}'")
        hi = _check_stimulus_value(decl, payload[1], f"uniform hi of '{name}'")
        if lo > hi:
            raise ProfileError(f"uniform for '{name}': lo {lo} > hi {hi}")
        return Uniform(lo, hi)
    if kind == "normal":
        if decl.vtype is VarType.BOOL:
            raise ProfileError(f"normal stimulus on bool '{name}'")
        if not isinstance(payload, (list, tuple)) or len(payload) != 2:
            raise ProfileError(f"normal for '{name}' needs [mean, stddev]")
        mean, stddev = float(payload[0]), float(payload[1])
        if stddev < 0 or not math.isfinite(mean) or not math.isfinite(stddev):
            raise ProfileError(f"normal for '{name}': bad parameters")
        return Normal(mean, stddev)
    if kind == "timeseries":
        if not isinstance(payload, (list, tuple)) or not payload:
            raise ProfileError(f"timeseries for '{name}' needs [[cycle, value], ...]")
        points = []
        last_cycle = -1
        for entry in payload:
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise ProfileError(f"timeseries entry for '{name}': {entry!r}")
            cycle = int(entry[0])
            if cycle <= last_cycle:
                raise ProfileError(
                    f"timeseries for '{name}': cycles must strictly increase")
            last_cycle = cycle
            points.append((cycle, _check_stimulus_value(
                decl, entry[1], f"timeseries value for '{name}'")))
        return TimeSeries(tuple(points))
    raise ProfileError(f"input '{name}': unknown stimulus kind '{kind}'")


def load_profile(text: str, model: Model) -> EnvProfile:
    """Parse a YAML environment profile and validate it against the model."""
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ProfileError(f"profile is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ProfileError("profile must be a mapping")

    known = {"seed", "horizon", "stop", "inputs"}
    for key in data:
        if key not in known:
            raise ProfileError(f"unknown profile key '{key}'")

    seed = int(data.get("seed", 0))
    horizon = data.get("horizon")
    if horizon is not None:
        horizon = int(horizon)
        if horizon < 0:
            raise ProfileError("horizon must be nonnegative")

    stop_expr = None
    if "stop" in data and data["stop"] is not None:
        from .parser import parse_expression
        stop_expr, diags = parse_expression(str(data["stop"]), model.datadict)
        if stop_expr is None:
            raise ProfileError(
                "stop condition does not parse: "
                + "; ".join(d.message for d in diags))
        t = TypeChecker(model.datadict).type_of(stop_expr)
        if t is not VarType.BOOL:
            raise ProfileError(f"stop condition must be boolean, got {t}")

    inputs = data.get("inputs") or {}
    if not isinstance(inputs, dict):
        raise ProfileError("'inputs' must be a mapping")
    stimuli: List[Tuple[str, Stimulus]] = []
    input_decls = [d for d in model.datadict.entries if d.kind is VarKind.INPUT]
    declared = {d.name for d in input_decls}
    for name in inputs:
        if name not in declared:
            raise ProfileError(f"'{name}' is not an input variable")
    for decl in input_decls:
        if decl.name not in inputs:
            raise ProfileError(f"input '{decl.name}' has no stimulus")
        stimuli.append((decl.name, _parse_stimulus(decl, inputs[decl.name])))

    return EnvProfile(tuple(stimuli), seed, horizon, stop_expr)


def constant_profile(model: Model, seed: int = 0,
                     horizon: Optional[int] = None,
                     overrides: Optional[Dict[str, Stimulus]] = None) -> EnvProfile:
    """Profile holding every input at its declared init (tests, defaults)."""
    overrides = overrides or {}
    stimuli = []
    for decl in model.datadict.entries:
        if decl.kind is not VarKind.INPUT:
            continue
        if decl.name in overrides:
            stimuli.append((decl.name, overrides[decl.name]))
        else:
            value = decl.init if decl.init is not None else default_raw(decl.vtype)
            stimuli.append((decl.name, Constant(value)))
    return EnvProfile(tuple(stimuli), seed, horizon, None)


# --------------------------------------------------------------------------
# Traces

@dataclass(frozen=True)
class Snapshot:
    cycle: int
    time_ms: int
    mode: str
    values: Dict[str, object]


@dataclass(frozen=True)
class Completed:
    def __str__(self) -> str:
        return "Completed"


@dataclass(frozen=True)
class StoppedBySignal:
    cycle: int

    def __str__(self) -> str:
        return "StoppedBySignal"


@dataclass(frozen=True)
class GuardViolation:
    mode: str
    cycle: int

    def __str__(self) -> str:
        return f"GuardViolation({self.mode}, {self.cycle})"


@dataclass(frozen=True)
class RunError:
    kind: str  # DivisionByZero | SqrtOfNegative | Int32Overflow | BoundsViolation
    location: str
    cycle: int

    def __str__(self) -> str:
        return f"RuntimeError({self.kind}, {self.location}, {self.cycle})"


TerminalStatus = Union[Completed, StoppedBySignal, GuardViolation, RunError]


@dataclass(frozen=True)
class BoundsWarning:
    cycle: int
    var: str
    value: object
    location: str


@dataclass(frozen=True)
class TransitionAttempt:
    cycle: int
    priority: int
    target: str
    condition_true: bool
    guard_accepted: Optional[bool]  # None when the condition was false
    committed: bool


@dataclass
class Trace:
    datadict: DataDict
    base_tick: int
    snapshots: List[Snapshot] = field(default_factory=list)
    status: TerminalStatus = field(default_factory=Completed)
    bounds_warnings: List[BoundsWarning] = field(default_factory=list)
    attempts: List[TransitionAttempt] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return isinstance(self.status, Completed)

    @property
    def aborted(self) -> bool:
        return isinstance(self.status, (GuardViolation, RunError))

    def final_values(self) -> Dict[str, object]:
        return self.snapshots[-1].values if self.snapshots else {}


def base_tick(model: Model) -> int:
    """Greatest common divisor of every procedure period in the model."""
    periods = [proc.period for mode in model.modes for proc in mode.procedures]
    if not periods:
        raise ValueError("model has no procedures")
    tick = periods[0]
    for p in periods[1:]:
        tick = math.gcd(tick, p)
    return tick


# --------------------------------------------------------------------------
# Compiled execution

class _Abort(Exception):
    def __init__(self, kind: str, location: str):
        super().__init__(kind)
        self.kind = kind
        self.location = location


def _loc(span: Optional[SourceSpan]) -> str:
    return str(span) if span else "<model>"


class _Context:
    __slots__ = ("cycle", "strict", "warnings")

    def __init__(self, strict: bool):
        self.cycle = 0
        self.strict = strict
        self.warnings: List[BoundsWarning] = []


class _Program:
    """Model compiled into closures for the cycle loop."""

    def __init__(self, model: Model, strict: bool):
        self.model = model
        self.evaluator = Evaluator(model.datadict)
        self.ctx = _Context(strict)
        self.modes: Dict[str, dict] = {}
        for mode in model.modes:
            self.modes[mode.name] = {
                "guard": self.evaluator.compile(mode.guard),
                "guard_expr": mode.guard,
                "procedures": [(proc.period, self._compile_block(proc.body, ()))
                               for proc in mode.procedures],
                "transitions": [
                    (trans.priority,
                     self.evaluator.compile(trans.condition),
                     trans.target,
                     self._compile_block(trans.action, ()))
                    for trans in sorted(mode.transitions,
                                        key=lambda t: t.priority)],
            }

    def _compile_block(self, stmts: ControlFlow,
                       stack: Tuple[str, ...]) -> List[Callable]:
        ops: List[Callable] = []
        for stmt in stmts:
            if isinstance(stmt, Assign):
                ops.append(self._compile_assign(stmt))
            elif isinstance(stmt, If):
                cond = self.evaluator.compile(stmt.cond)
                then_ops = self._compile_block(stmt.then, stack)
                else_ops = self._compile_block(stmt.orelse, stack)

                def run_if(values, _cond=cond, _t=then_ops, _e=else_ops):
                    for op in (_t if _cond(values) else _e):
                        op(values)
                ops.append(run_if)
            elif isinstance(stmt, Call):
                if stmt.module in stack:
                    raise ValueError(
                        f"module call cycle through '{stmt.module}'")
                callee = self.model.module(stmt.module)
                if callee is None:
                    raise ValueError(f"call to unknown module '{stmt.module}'")
                ops.extend(self._compile_block(callee.task,
                                               stack + (stmt.module,)))
        return ops

    def _compile_assign(self, stmt: Assign) -> Callable:
        decl = self.model.datadict.var(stmt.var)
        if decl is None:
            raise ValueError(f"assignment to unknown variable '{stmt.var}'")
        fn = self.evaluator.compile(stmt.expr)
        name = decl.name
        vtype = decl.vtype
        lo, hi = decl.bounds() if vtype.is_numeric else (None, None)
        bounded = decl.min is not None or decl.max is not None
        ctx = self.ctx
        location = _loc(stmt.span)

        def run_assign(values):
            raw = coerce(fn(values), vtype)
            if bounded and not lo <= raw <= hi:
                if ctx.strict:
                    raise _Abort("BoundsViolation", location)
                ctx.warnings.append(BoundsWarning(ctx.cycle, name, raw, location))
            values[name] = raw
        return run_assign


class _Sampler:
    """Draws each input's stimulus; consumption order is declaration order."""

    def __init__(self, model: Model, profile: EnvProfile):
        self.rng = random.Random(profile.seed)
        self.plan: List[Tuple[str, VarDecl, Stimulus, List[int], List[object]]] = []
        for decl in model.datadict.entries:
            if decl.kind is not VarKind.INPUT:
                continue
            stim = profile.stimulus(decl.name)
            if stim is None:
                raise ProfileError(f"input '{decl.name}' has no stimulus")
            cycles: List[int] = []
            values: List[object] = []
            if isinstance(stim, TimeSeries):
                cycles = [c for c, _ in stim.points]
                values = [v for _, v in stim.points]
            self.plan.append((decl.name, decl, stim, cycles, values))

    def apply(self, cycle: int, state_values: Dict[str, object]) -> None:
        for name, decl, stim, ts_cycles, ts_values in self.plan:
            if isinstance(stim, Constant):
                state_values[name] = stim.value
            elif isinstance(stim, Uniform):
                if decl.vtype is VarType.BOOL:
                    state_values[name] = self.rng.random() < 0.5
                elif decl.vtype is VarType.INT32:
                    state_values[name] = self.rng.randint(stim.lo, stim.hi)
                else:
                    state_values[name] = coerce(
                        self.rng.uniform(stim.lo, stim.hi), decl.vtype)
            elif isinstance(stim, Normal):
                raw = self.rng.gauss(stim.mean, stim.stddev)
                lo, hi = decl.bounds()
                if decl.vtype is VarType.INT32:
                    raw = round(raw)
                state_values[name] = coerce(min(max(raw, lo), hi), decl.vtype)
            else:  # TimeSeries
                index = bisect.bisect_right(ts_cycles, cycle) - 1
                if index < 0:
                    state_values[name] = (decl.init if decl.init is not None
                                          else default_raw(decl.vtype))
                else:
                    state_values[name] = ts_values[index]


def run(model: Model, profile: EnvProfile, *, strict: bool = False,
        verbose: bool = False) -> Trace:
    """Execute the model under a profile; see module docstring for the
    per-cycle semantics. The model must already type-check and pass the
    model checker with zero errors."""
    horizon = profile.horizon
    if horizon is None:
        raise ProfileError("profile has no horizon and none was supplied")
    tick = base_tick(model) if any(
        m.procedures for m in model.modes) else 1

    program = _Program(model, strict)
    sampler = _Sampler(model, profile)
    evaluator = program.evaluator
    ctx = program.ctx
    trace = Trace(model.datadict, tick)

    stop_fn = evaluator.compile(profile.stop) if profile.stop is not None else None

    state = State.initial(model)
    values = state.values
    current = model.initial_mode

    for cycle in range(horizon):
        ctx.cycle = cycle
        time_ms = cycle * tick
        mode_entry = program.modes.get(current)
        if mode_entry is None:
            raise ValueError(f"unknown mode '{current}'")

        try:
            # (1) fresh environment values
            sampler.apply(cycle, values)

            # (2) the current mode's guard must hold
            if not mode_entry["guard"](values):
                trace.status = GuardViolation(current, cycle)
                trace.bounds_warnings = ctx.warnings
                return trace

            # (3) periodic procedures
            for period, ops in mode_entry["procedures"]:
                if time_ms % period == 0:
                    for op in ops:
                        op(values)

            # (4) transitions, ascending priority, rollback on guard refusal
            pending: Optional[str] = None
            for priority, cond_fn, target, action_ops in mode_entry["transitions"]:
                if not cond_fn(values):
                    if verbose:
                        trace.attempts.append(TransitionAttempt(
                            cycle, priority, target, False, None, False))
                    continue
                staged = dict(values)
                for op in action_ops:
                    op(staged)
                accepted = bool(program.modes[target]["guard"](staged))
                if verbose:
                    trace.attempts.append(TransitionAttempt(
                        cycle, priority, target, True, accepted, accepted))
                if accepted:
                    values.clear()
                    values.update(staged)
                    pending = target
                    break

            # (5) snapshot of the cycle, still under the old mode
            trace.snapshots.append(Snapshot(cycle, time_ms, current,
                                            dict(values)))

            # (6) stop signal, then the scheduled mode switch
            if stop_fn is not None and stop_fn(values):
                trace.status = StoppedBySignal(cycle)
                trace.bounds_warnings = ctx.warnings
                return trace
            if pending is not None:
                current = pending

        except EvalError as err:
            trace.status = RunError(err.kind, _loc(err.span), cycle)
            trace.bounds_warnings = ctx.warnings
            return trace
        except _Abort as err:
            trace.status = RunError(err.kind, err.location, cycle)
            trace.bounds_warnings = ctx.warnings
            return trace

    trace.status = Completed()
    trace.bounds_warnings = ctx.warnings
    return trace


# --------------------------------------------------------------------------
# Trace export

def export_trace(trace: Trace) -> str:
    """CSV with one row per snapshot and a trailing status comment.

    Floats print with round-trip precision (float32 columns use the
    shortest digits that survive the 32-bit representation).
    """
    names = [decl.name for decl in trace.datadict.entries]
    types = {decl.name: decl.vtype for decl in trace.datadict.entries}
    lines = ["cycle,time_ms,mode," + ",".join(names)]
    for snap in trace.snapshots:
        row = [str(snap.cycle), str(snap.time_ms), snap.mode]
        row.extend(format_value(snap.values[n], types[n]) for n in names)
        lines.append(",".join(row))
    for warning in trace.bounds_warnings:
        lines.append(f"# warning: cycle {warning.cycle}: {warning.var}="
                     f"{format_value(warning.value, types[warning.var])} "
                     f"outside declared bounds at {warning.location}")
    lines.append(f"# status: {trace.status}")
    return "\n".join(lines) + "\n"
