"""Receding-horizon compiler from scenario schemas to mixed-integer programs.

A :class:`ConstraintSchema` declares the decision structure of a scenario:
named inputs (some boolean), states, auxiliary memory variables, per-step
indicator booleans, and a list of constraint templates.  Templates reference
quantities by name and step offset; :func:`compile_horizon` instantiates them
for every step of the prediction horizon, folds references to the known
current state into constants, assembles the tracking cost, and emits one
:class:`~hri_mpc.miqp.MiqpProblem`.

Column layout of the compiled problem, in order: real inputs step-major,
then states for steps 1..p, then auxiliaries for steps 1..p, then the
boolean block step-major (boolean inputs first, indicators after).

:class:`RecedingHorizonController` wraps compile + solve with a zero-input
fallback so a planning failure never takes the control loop down.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from hri_mpc.dynamics import LinearModel
from hri_mpc.miqp import (
    BnbOptions,
    MiqpProblem,
    SolveStatus,
    solve_bnb,
)

# ---------------------------------------------------------------------------
# linear rows over (name, step) keys
# ---------------------------------------------------------------------------

Key = tuple[str, int]


@dataclass
class Row:
    """``sum(coeffs) + const  <= 0`` (kind "le") or ``== 0`` (kind "eq")."""

    coeffs: dict[Key, float]
    const: float
    kind: str
    label: str

    def __post_init__(self) -> None:
        if self.kind not in ("le", "eq"):
            raise ValueError(f"row kind must be 'le' or 'eq', got {self.kind!r}")

    def evaluate(self, values: dict[Key, float]) -> float:
        total = self.const
        for key, coeff in self.coeffs.items():
            total += coeff * values[key]
        return total

    def satisfied(self, values: dict[Key, float], tol: float = 1e-9) -> bool:
        v = self.evaluate(values)
        if self.kind == "eq":
            return abs(v) <= tol
        return v <= tol


# ---------------------------------------------------------------------------
# constraint templates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdIndicator:
    """indicator(i) = 1 exactly when state(i) >= threshold (loose at the
    boundary, where both values are admissible)."""

    state: str
    indicator: str
    threshold: float


@dataclass(frozen=True)
class LocationIndicator:
    """Two station indicators on one position state.

    low_indicator(i) = 1 iff state(i) <= low_threshold and
    high_indicator(i) = 1 iff state(i) >= high_threshold, with big-M from
    ``span`` (the declared width of the position range).
    """

    state: str
    low_indicator: str
    low_threshold: float
    high_indicator: str
    high_threshold: float
    span: float


@dataclass(frozen=True)
class GatedInput:
    """input(i) is forced to zero unless gate(i) = 1, else stays in [lo, hi]."""

    input: str
    gate: str
    lo: float
    hi: float


@dataclass(frozen=True)
class SignIndicatorPair:
    """positive(i) = 1 permits input(i) in [0, hi]; negative(i) = 1 permits
    [lo, 0]; at most one of the pair is set; both clear pins input to 0."""

    input: str
    positive: str
    negative: str
    lo: float
    hi: float


@dataclass(frozen=True)
class LinkEquality:
    """sum(coeff * sym(i + offset)) + sum(coeff * exo) + const == 0."""

    terms: tuple[tuple[str, int, float], ...]
    exo_terms: tuple[tuple[str, float], ...] = ()
    const: float = 0.0


@dataclass(frozen=True)
class XorLink:
    """output(i) = operand(i) XOR exo, with the exogenous side constant."""

    output: str
    operand: str
    exo: str


@dataclass(frozen=True)
class RangeBound:
    """Hard range on a state, enforced on every step 1..p."""

    state: str
    lo: float
    hi: float


@dataclass(frozen=True)
class DurationUpdate:
    """duration(i+1) = switch(i) * (duration(i) + dt), linearized with the
    duration's reachable range as big-M."""

    duration: str
    switch: str


@dataclass(frozen=True)
class StaringIndicator:
    """indicator(i) = 1 exactly when duration(i) > reference(i) (ties go
    either way; the boundary is loose)."""

    indicator: str
    duration: str
    reference: str


@dataclass(frozen=True)
class EdgeDetector:
    """rising(i)/falling(i) flag changes of a boolean signal between steps
    i-1 and i; output(i) = rising(i) + falling(i).  Step 0 compares against
    the exogenous previous value."""

    signal: str
    rising: str
    falling: str
    output: str
    prev_exo: str


@dataclass(frozen=True)
class HoldConstant:
    """input(i) pinned to an exogenous constant on every step."""

    input: str
    exo: str


Template = (
    ThresholdIndicator
    | LocationIndicator
    | GatedInput
    | SignIndicatorPair
    | LinkEquality
    | XorLink
    | RangeBound
    | DurationUpdate
    | StaringIndicator
    | EdgeDetector
    | HoldConstant
)


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuxVar:
    """Auxiliary per-step memory (duration counters and the like).

    The value at the current step is not a decision variable; it enters the
    program as the exogenous constant named by ``init_exo``.
    """

    name: str
    lo: float
    hi: float
    init_exo: str


@dataclass
class ConstraintSchema:
    input_names: tuple[str, ...]
    bool_input_names: tuple[str, ...]
    state_names: tuple[str, ...]
    state_bounds: dict[str, tuple[float, float]]
    input_bounds: dict[str, tuple[float, float]]
    indicator_names: tuple[str, ...]
    aux: tuple[AuxVar, ...] = ()
    templates: tuple[Template, ...] = ()
    exogenous_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.input_names = tuple(self.input_names)
        self.bool_input_names = tuple(self.bool_input_names)
        self.state_names = tuple(self.state_names)
        self.indicator_names = tuple(self.indicator_names)
        self.aux = tuple(self.aux)
        self.templates = tuple(self.templates)
        self.exogenous_names = tuple(self.exogenous_names)

        all_names = (
            list(self.input_names)
            + list(self.state_names)
            + [a.name for a in self.aux]
            + list(self.indicator_names)
            + list(self.exogenous_names)
        )
        dupes = {n for n in all_names if all_names.count(n) > 1}
        if dupes:
            raise ValueError(f"schema names must be unique, duplicated: {sorted(dupes)}")
        for b in self.bool_input_names:
            if b not in self.input_names:
                raise ValueError(f"boolean input {b!r} not among inputs")
        for name, (lo, hi) in self.state_bounds.items():
            if name not in self.state_names:
                raise ValueError(f"state_bounds names unknown state {name!r}")
            if not lo < hi:
                raise ValueError(f"state {name!r} range [{lo}, {hi}] is empty")
        for name in self.state_names:
            if name not in self.state_bounds:
                raise ValueError(f"state {name!r} missing a declared range")
        for name, (lo, hi) in self.input_bounds.items():
            if name not in self.input_names:
                raise ValueError(f"input_bounds names unknown input {name!r}")
            if not lo <= hi:
                raise ValueError(f"input {name!r} bounds [{lo}, {hi}] are empty")
        for a in self.aux:
            if not a.lo < a.hi:
                raise ValueError(f"aux {a.name!r} range [{a.lo}, {a.hi}] is empty")
            if a.init_exo not in self.exogenous_names:
                raise ValueError(
                    f"aux {a.name!r} init {a.init_exo!r} not among exogenous names"
                )
        for tpl in self.templates:
            self._validate_template(tpl)

    # symbol kind helpers used by validation and the compiler

    def kind_of(self, name: str) -> str:
        if name in self.input_names:
            return "bool_input" if name in self.bool_input_names else "input"
        if name in self.state_names:
            return "state"
        if any(a.name == name for a in self.aux):
            return "aux"
        if name in self.indicator_names:
            return "indicator"
        if name in self.exogenous_names:
            return "exogenous"
        raise ValueError(f"unknown symbol {name!r}")

    def aux_by_name(self, name: str) -> AuxVar:
        for a in self.aux:
            if a.name == name:
                return a
        raise ValueError(f"unknown aux variable {name!r}")

    def _expect(self, name: str, kinds: tuple[str, ...], where: str) -> None:
        kind = self.kind_of(name)
        if kind not in kinds:
            raise ValueError(
                f"{where}: {name!r} is a {kind}, expected one of {kinds}"
            )

    def _validate_template(self, tpl: Template) -> None:
        t = type(tpl).__name__
        if isinstance(tpl, ThresholdIndicator):
            self._expect(tpl.state, ("state",), t)
            self._expect(tpl.indicator, ("indicator",), t)
            lo, hi = self.state_bounds[tpl.state]
            if not lo <= tpl.threshold <= hi:
                raise ValueError(
                    f"{t}: threshold {tpl.threshold} outside {tpl.state!r} "
                    f"range [{lo}, {hi}]"
                )
        elif isinstance(tpl, LocationIndicator):
            self._expect(tpl.state, ("state",), t)
            self._expect(tpl.low_indicator, ("indicator",), t)
            self._expect(tpl.high_indicator, ("indicator",), t)
            if tpl.span <= 0:
                raise ValueError(f"{t}: span must be positive, got {tpl.span}")
            if tpl.low_threshold > tpl.high_threshold:
                raise ValueError(
                    f"{t}: low threshold {tpl.low_threshold} above high "
                    f"{tpl.high_threshold}"
                )
        elif isinstance(tpl, GatedInput):
            self._expect(tpl.input, ("input",), t)
            self._expect(tpl.gate, ("indicator", "bool_input"), t)
            if not tpl.lo <= 0.0 <= tpl.hi:
                raise ValueError(f"{t}: [lo, hi] must contain 0 so the gate can close")
        elif isinstance(tpl, SignIndicatorPair):
            self._expect(tpl.input, ("input",), t)
            self._expect(tpl.positive, ("indicator",), t)
            self._expect(tpl.negative, ("indicator",), t)
            if not (tpl.lo < 0.0 < tpl.hi):
                raise ValueError(f"{t}: needs lo < 0 < hi, got [{tpl.lo}, {tpl.hi}]")
        elif isinstance(tpl, LinkEquality):
            for name, _, _ in tpl.terms:
                self._expect(
                    name, ("input", "bool_input", "state", "aux", "indicator"), t
                )
            for name, _ in tpl.exo_terms:
                self._expect(name, ("exogenous",), t)
        elif isinstance(tpl, XorLink):
            self._expect(tpl.output, ("input",), t)
            self._expect(tpl.operand, ("bool_input", "indicator"), t)
            self._expect(tpl.exo, ("exogenous",), t)
        elif isinstance(tpl, RangeBound):
            self._expect(tpl.state, ("state",), t)
            if not tpl.lo < tpl.hi:
                raise ValueError(f"{t}: range [{tpl.lo}, {tpl.hi}] is empty")
        elif isinstance(tpl, DurationUpdate):
            self._expect(tpl.duration, ("aux",), t)
            self._expect(tpl.switch, ("bool_input",), t)
        elif isinstance(tpl, StaringIndicator):
            self._expect(tpl.indicator, ("indicator", "bool_input"), t)
            self._expect(tpl.duration, ("aux",), t)
            self._expect(tpl.reference, ("aux",), t)
        elif isinstance(tpl, EdgeDetector):
            self._expect(tpl.signal, ("bool_input",), t)
            self._expect(tpl.rising, ("indicator",), t)
            self._expect(tpl.falling, ("indicator",), t)
            self._expect(tpl.output, ("input",), t)
            self._expect(tpl.prev_exo, ("exogenous",), t)
        elif isinstance(tpl, HoldConstant):
            self._expect(tpl.input, ("input",), t)
            self._expect(tpl.exo, ("exogenous",), t)
        else:
            raise ValueError(f"unknown template type {t}")


# ---------------------------------------------------------------------------
# template encoders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncodeContext:
    """Everything an encoder may consult besides the template itself.

    ``intervals`` holds per-step variable ranges established by reachability
    analysis; encoders derive their big-M constants from these, falling back
    to the schema's declared ranges.  Tight per-step constants are what keep
    the relaxation close to the integer hull, so every refinement here pays
    off directly in branch-and-bound effort.
    """

    schema: ConstraintSchema
    dt: float
    exogenous: dict[str, float]
    intervals: dict[Key, tuple[float, float]] = field(default_factory=dict)

    def bounds_of(self, name: str, t: int) -> tuple[float, float]:
        got = self.intervals.get((name, t))
        if got is not None:
            return got
        if name in self.schema.state_bounds:
            return self.schema.state_bounds[name]
        for a in self.schema.aux:
            if a.name == name:
                return (a.lo, a.hi)
        if name in self.schema.input_bounds:
            return self.schema.input_bounds[name]
        raise ValueError(f"no declared range for {name!r}")


def _le(coeffs: dict[Key, float], const: float, label: str) -> Row:
    return Row(coeffs, const, "le", label)


def _eq(coeffs: dict[Key, float], const: float, label: str) -> Row:
    return Row(coeffs, const, "eq", label)


def encode_threshold(tpl: ThresholdIndicator, i: int, ctx: EncodeContext) -> list[Row]:
    lo, hi = ctx.bounds_of(tpl.state, i)
    v = (tpl.state, i)
    d = (tpl.indicator, i)
    # one-sided constants: m_up frees the upper row once the indicator is on,
    # m_dn frees the lower row while it is off; each only needs to cover the
    # reachable overshoot on its own side of the threshold
    m_up = hi - tpl.threshold
    m_dn = tpl.threshold - lo
    return [
        _le({v: 1.0, d: -m_up}, -tpl.threshold, f"{tpl.indicator}[{i}] off->below"),
        _le({v: -1.0, d: m_dn}, tpl.threshold - m_dn, f"{tpl.indicator}[{i}] on->above"),
    ]


def encode_location(tpl: LocationIndicator, i: int, ctx: EncodeContext) -> list[Row]:
    v = (tpl.state, i)
    low = (tpl.low_indicator, i)
    high = (tpl.high_indicator, i)
    lo, hi = ctx.bounds_of(tpl.state, i)
    m1 = hi - tpl.low_threshold
    m2 = tpl.low_threshold - lo
    m3 = hi - tpl.high_threshold
    m4 = tpl.high_threshold - lo
    return [
        _le({v: 1.0, low: m1}, -tpl.low_threshold - m1, f"{tpl.low_indicator}[{i}] on->at"),
        _le({v: -1.0, low: -m2}, tpl.low_threshold, f"{tpl.low_indicator}[{i}] off->away"),
        _le({v: 1.0, high: -m3}, -tpl.high_threshold, f"{tpl.high_indicator}[{i}] off->away"),
        _le({v: -1.0, high: m4}, tpl.high_threshold - m4, f"{tpl.high_indicator}[{i}] on->at"),
    ]


def encode_gated(tpl: GatedInput, i: int, ctx: EncodeContext) -> list[Row]:
    u = (tpl.input, i)
    g = (tpl.gate, i)
    return [
        _le({u: 1.0, g: -tpl.hi}, 0.0, f"{tpl.input}[{i}] gate upper"),
        _le({u: -1.0, g: tpl.lo}, 0.0, f"{tpl.input}[{i}] gate lower"),
    ]


def encode_sign_pair(tpl: SignIndicatorPair, i: int, ctx: EncodeContext) -> list[Row]:
    u = (tpl.input, i)
    dp = (tpl.positive, i)
    dn = (tpl.negative, i)
    return [
        _le({u: 1.0, dp: -tpl.hi}, 0.0, f"{tpl.input}[{i}] pos cap"),
        _le({u: -1.0, dp: -tpl.lo}, tpl.lo, f"{tpl.input}[{i}] pos floor"),
        _le({u: -1.0, dn: tpl.lo}, 0.0, f"{tpl.input}[{i}] neg floor"),
        _le({u: 1.0, dn: tpl.hi}, -tpl.hi, f"{tpl.input}[{i}] neg cap"),
        _le({dp: 1.0, dn: 1.0}, -1.0, f"{tpl.input}[{i}] sign exclusive"),
    ]


def encode_link(tpl: LinkEquality, i: int, ctx: EncodeContext) -> list[Row]:
    coeffs: dict[Key, float] = {}
    const = tpl.const
    for name, offset, coeff in tpl.terms:
        key = (name, i + offset)
        coeffs[key] = coeffs.get(key, 0.0) + coeff
    for name, coeff in tpl.exo_terms:
        const += coeff * ctx.exogenous[name]
    return [_eq(coeffs, const, f"link[{i}]")]


def encode_xor(tpl: XorLink, i: int, ctx: EncodeContext) -> list[Row]:
    c = ctx.exogenous[tpl.exo]
    if c not in (0.0, 1.0):
        raise ValueError(f"xor exogenous {tpl.exo!r} must be 0 or 1, got {c!r}")
    out = (tpl.output, i)
    op = (tpl.operand, i)
    # out = op xor c  ->  out = op + c - 2 c op
    return [_eq({out: 1.0, op: 2.0 * c - 1.0}, -c, f"{tpl.output}[{i}] xor")]


def encode_duration(tpl: DurationUpdate, i: int, ctx: EncodeContext) -> list[Row]:
    a = ctx.schema.aux_by_name(tpl.duration)
    dt = ctx.dt
    cur_lo, cur_hi = ctx.bounds_of(tpl.duration, i)
    nxt_lo, nxt_hi = ctx.bounds_of(tpl.duration, i + 1)
    # the count-up row must relax fully when the switch is off, where the
    # next value resets to a.lo; the switch-off slack is therefore the
    # largest possible drop from cur + dt down to a.lo
    span = cur_hi + dt - a.lo
    nxt = (tpl.duration, i + 1)
    cur = (tpl.duration, i)
    s = (tpl.switch, i)
    rows = [
        _le({nxt: 1.0, s: -nxt_hi}, 0.0, f"{tpl.duration}[{i+1}] off->reset hi"),
        _le({nxt: -1.0, s: a.lo}, 0.0, f"{tpl.duration}[{i+1}] off->reset lo"),
        _le(
            {cur: 1.0, nxt: -1.0, s: span},
            dt - span,
            f"{tpl.duration}[{i+1}] on->count up",
        ),
    ]
    # growth cap: a reset can only lower the value (a.lo <= cur + dt), so
    # nxt <= cur + dt holds whether or not the switch stays on
    if a.lo <= cur_lo + dt:
        rows.append(
            _le({cur: -1.0, nxt: 1.0}, -dt, f"{tpl.duration}[{i+1}] growth cap")
        )
    else:
        off_gap = a.lo - cur_lo - dt
        rows.append(
            _le(
                {cur: -1.0, nxt: 1.0, s: off_gap},
                -dt - off_gap,
                f"{tpl.duration}[{i+1}] on->count down",
            )
        )
    return rows


def encode_staring(tpl: StaringIndicator, i: int, ctx: EncodeContext) -> list[Row]:
    d_lo, d_hi = ctx.bounds_of(tpl.duration, i)
    z_lo, z_hi = ctx.bounds_of(tpl.reference, i)
    d = (tpl.duration, i)
    z = (tpl.reference, i)
    s = (tpl.indicator, i)
    m_hi = d_hi - z_lo
    m_lo = d_lo - z_hi
    rows = [
        _le({d: 1.0, z: -1.0, s: -m_hi}, 0.0, f"{tpl.indicator}[{i}] off->not above"),
        _le({d: -1.0, z: 1.0, s: -m_lo}, m_lo, f"{tpl.indicator}[{i}] on->at least"),
    ]
    # cover cut: an unbroken run of the switch from the current step carries
    # the duration to d(0) + i*dt, so when that provably exceeds the comfort
    # limit the indicator must fire unless at least one switch step is off;
    # fractional switch dips cannot fake a reset against this row
    switch = None
    for other in ctx.schema.templates:
        if isinstance(other, DurationUpdate) and other.duration == tpl.duration:
            switch = other.switch
            break
    d0_lo, _ = ctx.bounds_of(tpl.duration, 0)
    if switch is not None and i >= 1 and d0_lo + i * ctx.dt > z_hi:
        coeffs: dict[Key, float] = {(switch, j): 1.0 for j in range(i)}
        coeffs[s] = -1.0
        rows.append(_le(coeffs, 1.0 - i, f"{tpl.indicator}[{i}] unbroken stare"))
    return rows


def encode_edge(tpl: EdgeDetector, i: int, ctx: EncodeContext) -> list[Row]:
    cur = (tpl.signal, i)
    on = (tpl.rising, i)
    off = (tpl.falling, i)
    out = (tpl.output, i)
    rows: list[Row] = []
    if i == 0:
        prev_val = ctx.exogenous[tpl.prev_exo]
        if prev_val not in (0.0, 1.0):
            raise ValueError(
                f"edge exogenous {tpl.prev_exo!r} must be 0 or 1, got {prev_val!r}"
            )
        prev: dict[Key, float] = {}
        prev_const = prev_val
    else:
        prev = {(tpl.signal, i - 1): 1.0}
        prev_const = 0.0

    def with_prev(sign: float, base: dict[Key, float], const: float, label: str) -> Row:
        coeffs = dict(base)
        for key, coeff in prev.items():
            coeffs[key] = coeffs.get(key, 0.0) + sign * coeff
        return _le(coeffs, const + sign * prev_const, label)

    rows.append(_le({on: 1.0, cur: -1.0}, 0.0, f"{tpl.rising}[{i}] needs on"))
    rows.append(with_prev(-1.0, {cur: 1.0, on: -1.0}, 0.0, f"{tpl.rising}[{i}] forced"))
    rows.append(with_prev(1.0, {on: 1.0}, -1.0, f"{tpl.rising}[{i}] needs prior off"))
    rows.append(with_prev(-1.0, {off: 1.0}, 0.0, f"{tpl.falling}[{i}] needs prior on"))
    rows.append(with_prev(1.0, {cur: -1.0, off: -1.0}, 0.0, f"{tpl.falling}[{i}] forced"))
    rows.append(_le({off: 1.0, cur: 1.0}, -1.0, f"{tpl.falling}[{i}] needs off"))
    rows.append(
        _eq({out: 1.0, on: -1.0, off: -1.0}, 0.0, f"{tpl.output}[{i}] edge sum")
    )
    return rows


def encode_hold(tpl: HoldConstant, i: int, ctx: EncodeContext) -> list[Row]:
    return [
        _eq(
            {(tpl.input, i): 1.0},
            -ctx.exogenous[tpl.exo],
            f"{tpl.input}[{i}] hold",
        )
    ]


_ENCODERS = {
    ThresholdIndicator: encode_threshold,
    LocationIndicator: encode_location,
    GatedInput: encode_gated,
    SignIndicatorPair: encode_sign_pair,
    LinkEquality: encode_link,
    XorLink: encode_xor,
    DurationUpdate: encode_duration,
    StaringIndicator: encode_staring,
    EdgeDetector: encode_edge,
    HoldConstant: encode_hold,
}


def encode_template(tpl: Template, i: int, ctx: EncodeContext) -> list[Row]:
    """Rows for one template at one step; RangeBound compiles to variable
    bounds instead and yields no rows here."""
    if isinstance(tpl, RangeBound):
        return []
    return _ENCODERS[type(tpl)](tpl, i, ctx)


# ---------------------------------------------------------------------------
# cost and horizon configuration
# ---------------------------------------------------------------------------


@dataclass
class CostSpec:
    """Stage cost sum_i (C x(k+i) - y_ref)' Qy (C x(k+i) - y_ref), i=1..p."""

    C: np.ndarray
    y_ref: np.ndarray
    Qy: np.ndarray

    def __post_init__(self) -> None:
        self.C = np.asarray(self.C, dtype=np.float64)
        self.y_ref = np.asarray(self.y_ref, dtype=np.float64)
        self.Qy = np.asarray(self.Qy, dtype=np.float64)
        if self.C.ndim != 2:
            raise ValueError(f"C must be 2-D, got shape {self.C.shape}")
        n_y = self.C.shape[0]
        if self.y_ref.shape != (n_y,):
            raise ValueError(
                f"y_ref has shape {self.y_ref.shape}, expected ({n_y},)"
            )
        if self.Qy.shape != (n_y, n_y):
            raise ValueError(
                f"Qy has shape {self.Qy.shape}, expected ({n_y}, {n_y})"
            )


@dataclass
class HorizonConfig:
    p: int = 8
    c: int = 3

    def __post_init__(self) -> None:
        self.p = int(self.p)
        self.c = int(self.c)
        if self.p < 1:
            raise ValueError(f"prediction horizon must be >= 1, got {self.p}")
        if not 1 <= self.c <= self.p:
            raise ValueError(
                f"control horizon must be in [1, {self.p}], got {self.c}"
            )


@dataclass
class ScenarioSpec:
    name: str
    model: LinearModel
    schema: ConstraintSchema
    cost: CostSpec

    def __post_init__(self) -> None:
        n = self.model.n
        if len(self.schema.state_names) != n:
            raise ValueError(
                f"schema declares {len(self.schema.state_names)} states, "
                f"model has {n}"
            )
        if len(self.schema.input_names) != self.model.m:
            raise ValueError(
                f"schema declares {len(self.schema.input_names)} inputs, "
                f"model has {self.model.m}"
            )
        if self.cost.C.shape[1] != n:
            raise ValueError(
                f"cost C has {self.cost.C.shape[1]} columns, model has {n} states"
            )


# ---------------------------------------------------------------------------
# compiler
# ---------------------------------------------------------------------------


@dataclass
class CompiledHorizon:
    problem: MiqpProblem
    columns: dict[Key, int]
    spec: ScenarioSpec
    horizon: HorizonConfig
    x0: np.ndarray
    exogenous: dict[str, float]
    row_labels_eq: tuple[str, ...]
    row_labels_ineq: tuple[str, ...]

    def column(self, name: str, t: int) -> int:
        return self.columns[(name, t)]

    def input_vector(self, values: np.ndarray, i: int) -> np.ndarray:
        """Full input vector u(k+i) drawn from a solution vector."""
        names = self.spec.schema.input_names
        out = np.empty(len(names))
        for j, name in enumerate(names):
            out[j] = values[self.columns[(name, i)]]
        return out

    def state_vector(self, values: np.ndarray, t: int) -> np.ndarray:
        names = self.spec.schema.state_names
        out = np.empty(len(names))
        for j, name in enumerate(names):
            out[j] = values[self.columns[(name, t)]]
        return out

    def describe(self) -> str:
        p = self.problem
        lines = [
            f"variables: {p.n} ({p.n_real} real, {p.n_bool} boolean)",
            f"rows: {len(self.row_labels_eq)} equality, "
            f"{len(self.row_labels_ineq)} inequality",
        ]
        for label, (a, b) in zip(self.row_labels_eq, p.eq):
            nz = int(np.count_nonzero(a))
            lines.append(f"  eq  {label}: {nz} coeffs, rhs {b:.6g}")
        for label, (a, b) in zip(self.row_labels_ineq, p.ineq):
            nz = int(np.count_nonzero(a))
            lines.append(f"  ineq {label}: {nz} coeffs, rhs {b:.6g}")
        return "\n".join(lines)


def _build_columns(
    schema: ConstraintSchema, p: int
) -> tuple[dict[Key, int], int, int]:
    real_inputs = [n for n in schema.input_names if n not in schema.bool_input_names]
    columns: dict[Key, int] = {}
    col = 0
    for i in range(p):
        for name in real_inputs:
            columns[(name, i)] = col
            col += 1
    for t in range(1, p + 1):
        for name in schema.state_names:
            columns[(name, t)] = col
            col += 1
    for t in range(1, p + 1):
        for a in schema.aux:
            columns[(a.name, t)] = col
            col += 1
    n_real = col
    for i in range(p):
        for name in schema.bool_input_names:
            columns[(name, i)] = col
            col += 1
        for name in schema.indicator_names:
            columns[(name, i)] = col
            col += 1
    return columns, n_real, col - n_real


def _interval_dot(
    coeffs: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> tuple[float, float]:
    """Range of coeffs . v over the box [lo, hi], tolerating infinite ends."""
    out_lo = 0.0
    out_hi = 0.0
    lo_inf = False
    hi_inf = False
    for c, a, b in zip(coeffs, lo, hi):
        if c == 0.0:
            continue
        t1 = c * a
        t2 = c * b
        tlo, thi = (t1, t2) if t1 <= t2 else (t2, t1)
        if tlo == -math.inf:
            lo_inf = True
        else:
            out_lo += tlo
        if thi == math.inf:
            hi_inf = True
        else:
            out_hi += thi
    return (-math.inf if lo_inf else out_lo, math.inf if hi_inf else out_hi)


def _refine_intervals(
    schema: ConstraintSchema,
    model: LinearModel,
    p: int,
    x0: np.ndarray,
    exo: dict[str, float],
) -> dict[Key, tuple[float, float]]:
    """Per-step reachable ranges for states and auxiliaries.

    Forward interval propagation from the measured state under the input
    boxes, intersected with the declared ranges.  Encoders turn these into
    per-step big-M constants; a constant sized to what a variable can reach
    within the horizon, instead of its whole declared range, keeps the
    relaxation near the integer hull and the search tree small.
    """
    inf = math.inf
    intervals: dict[Key, tuple[float, float]] = {}

    # input boxes: unit boxes for booleans, declared ranges otherwise
    ubox: dict[str, tuple[float, float]] = {}
    for name in schema.input_names:
        if name in schema.bool_input_names:
            ubox[name] = (0.0, 1.0)
        else:
            ubox[name] = schema.input_bounds.get(name, (-inf, inf))
    unit_names = set(schema.bool_input_names) | set(schema.indicator_names)

    def same_step_box(name: str) -> tuple[float, float] | None:
        if name in ubox:
            return ubox[name]
        if name in unit_names:
            return (0.0, 1.0)
        return None

    # inputs held to an exogenous constant are exact
    for tpl in schema.templates:
        if isinstance(tpl, HoldConstant):
            v = exo[tpl.exo]
            ubox[tpl.input] = (v, v)

    # inputs defined by a same-step equality inherit the implied range
    for tpl in schema.templates:
        if not isinstance(tpl, LinkEquality):
            continue
        for name, off, coeff in tpl.terms:
            if off != 0 or coeff == 0.0 or ubox.get(name) != (-inf, inf):
                continue
            lo_sum = hi_sum = tpl.const + sum(
                ecoeff * exo[ename] for ename, ecoeff in tpl.exo_terms
            )
            ok = True
            for name2, off2, coeff2 in tpl.terms:
                if name2 == name:
                    continue
                box2 = same_step_box(name2) if off2 == 0 else None
                if box2 is None:
                    ok = False
                    break
                t1 = coeff2 * box2[0]
                t2 = coeff2 * box2[1]
                lo_sum += min(t1, t2)
                hi_sum += max(t1, t2)
            if ok and math.isfinite(lo_sum) and math.isfinite(hi_sum):
                c1 = -hi_sum / coeff
                c2 = -lo_sum / coeff
                ubox[name] = (min(c1, c2), max(c1, c2))

    # state reachability under the input boxes
    Ad, Bd = model.step_matrices()
    ulo = np.array([ubox[nm][0] for nm in schema.input_names])
    uhi = np.array([ubox[nm][1] for nm in schema.input_names])
    hard: dict[str, tuple[float, float]] = {}
    for tpl in schema.templates:
        if isinstance(tpl, RangeBound):
            hard[tpl.state] = (tpl.lo, tpl.hi)
    xlo = x0.astype(np.float64).copy()
    xhi = x0.astype(np.float64).copy()
    for j, sname in enumerate(schema.state_names):
        intervals[(sname, 0)] = (float(x0[j]), float(x0[j]))
    for t in range(1, p + 1):
        nlo = np.empty(model.n)
        nhi = np.empty(model.n)
        for s in range(model.n):
            alo, ahi = _interval_dot(Ad[s], xlo, xhi)
            blo, bhi = _interval_dot(Bd[s], ulo, uhi)
            nlo[s] = alo + blo
            nhi[s] = ahi + bhi
        for s, sname in enumerate(schema.state_names):
            lo, hi = nlo[s], nhi[s]
            for declared in (schema.state_bounds.get(sname), hard.get(sname)):
                if declared is None:
                    continue
                clo = max(lo, declared[0])
                chi = min(hi, declared[1])
                if clo <= chi:
                    lo, hi = clo, chi
                else:
                    # reachability and the declared range disagree; keep the
                    # declared range the encoders have always trusted
                    lo, hi = declared
            nlo[s] = lo
            nhi[s] = hi
            intervals[(sname, t)] = (lo, hi)
        xlo, xhi = nlo, nhi

    # auxiliaries: exact at the current step, template-driven afterwards
    aux_names = {a.name for a in schema.aux}
    for a in schema.aux:
        v = exo[a.init_exo]
        intervals[(a.name, 0)] = (v, v)
    for tpl in schema.templates:
        if isinstance(tpl, DurationUpdate):
            a = schema.aux_by_name(tpl.duration)
            d0 = exo[a.init_exo]
            for t in range(1, p + 1):
                intervals[(tpl.duration, t)] = (a.lo, min(a.hi, d0 + t * model.dt))
        elif isinstance(tpl, LinkEquality):
            targets = [trm for trm in tpl.terms if trm[0] in aux_names]
            if len(targets) != 1 or targets[0][2] == 0.0:
                continue
            tname, toff, tcoeff = targets[0]
            a = schema.aux_by_name(tname)
            base = tpl.const + sum(
                ecoeff * exo[ename] for ename, ecoeff in tpl.exo_terms
            )
            for i in range(p):
                step = i + toff
                if not 1 <= step <= p:
                    continue
                lo_sum = hi_sum = base
                ok = True
                for name2, off2, coeff2 in tpl.terms:
                    if name2 == tname:
                        continue
                    box = intervals.get((name2, i + off2))
                    if box is None:
                        box = same_step_box(name2)
                    if box is None:
                        ok = False
                        break
                    t1 = coeff2 * box[0]
                    t2 = coeff2 * box[1]
                    lo_sum += min(t1, t2)
                    hi_sum += max(t1, t2)
                if not ok:
                    continue
                c1 = -hi_sum / tcoeff
                c2 = -lo_sum / tcoeff
                lo = max(min(c1, c2), a.lo)
                hi = min(max(c1, c2), a.hi)
                if lo <= hi:
                    intervals[(tname, step)] = (lo, hi)
    return intervals


def compile_horizon(
    spec: ScenarioSpec,
    horizon: HorizonConfig,
    x0: np.ndarray,
    exogenous: dict[str, float] | None = None,
) -> CompiledHorizon:
    """Instantiate the schema over the prediction horizon as one program.

    ``x0`` is the measured current state; references to step-0 states and
    auxiliaries fold into constants, so the current state is never a
    decision variable.
    """
    schema = spec.schema
    model = spec.model
    p = horizon.p
    exo = dict(exogenous or {})
    missing = [n for n in schema.exogenous_names if n not in exo]
    if missing:
        raise ValueError(f"missing exogenous values: {missing}")
    for name, value in exo.items():
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"exogenous {name!r} is not finite: {value!r}")
        exo[name] = value
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({model.n},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 contains non-finite entries")

    columns, n_real, n_bool = _build_columns(schema, p)
    n = n_real + n_bool
    x0_by_name = {name: float(x0[j]) for j, name in enumerate(schema.state_names)}
    aux_init = {a.name: exo[a.init_exo] for a in schema.aux}
    intervals = _refine_intervals(schema, model, p, x0, exo)
    ctx = EncodeContext(schema=schema, dt=model.dt, exogenous=exo, intervals=intervals)

    def resolve(row: Row) -> tuple[np.ndarray, float]:
        vec = np.zeros(n)
        const = row.const
        for (name, t), coeff in row.coeffs.items():
            key = (name, t)
            if key in columns:
                vec[columns[key]] += coeff
                continue
            if t == 0 and name in x0_by_name:
                const += coeff * x0_by_name[name]
                continue
            if t == 0 and name in aux_init:
                const += coeff * aux_init[name]
                continue
            raise ValueError(f"row {row.label!r} references unknown {key}")
        return vec, -const

    eq_rows: list[tuple[np.ndarray, float]] = []
    ineq_rows: list[tuple[np.ndarray, float]] = []
    labels_eq: list[str] = []
    labels_ineq: list[str] = []

    def emit(row: Row) -> None:
        vec, rhs = resolve(row)
        if row.kind == "eq":
            eq_rows.append((vec, rhs))
            labels_eq.append(row.label)
        else:
            ineq_rows.append((vec, rhs))
            labels_ineq.append(row.label)

    # dynamics: x(t+1) = (A dt + I) x(t) + B dt u(t)
    Ad, Bd = model.step_matrices()
    for i in range(p):
        for s, sname in enumerate(schema.state_names):
            coeffs: dict[Key, float] = {(sname, i + 1): 1.0}
            for s2, s2name in enumerate(schema.state_names):
                if Ad[s, s2] != 0.0:
                    coeffs[(s2name, i)] = coeffs.get((s2name, i), 0.0) - Ad[s, s2]
            for j, uname in enumerate(schema.input_names):
                if Bd[s, j] != 0.0:
                    coeffs[(uname, i)] = coeffs.get((uname, i), 0.0) - Bd[s, j]
            emit(Row(coeffs, 0.0, "eq", f"dyn {sname}[{i + 1}]"))

    for tpl in schema.templates:
        for i in range(p):
            for row in encode_template(tpl, i, ctx):
                emit(row)

    # cost over predicted outputs
    C, y_ref, Qy = spec.cost.C, spec.cost.y_ref, spec.cost.Qy
    Qblock = C.T @ Qy @ C
    qblock = -2.0 * (C.T @ Qy @ y_ref)
    Q = np.zeros((n, n))
    q = np.zeros(n)
    c0 = float(p * (y_ref @ Qy @ y_ref))
    state_cols = [
        [columns[(name, t)] for name in schema.state_names] for t in range(1, p + 1)
    ]
    for cols in state_cols:
        idx = np.asarray(cols)
        Q[np.ix_(idx, idx)] += Qblock
        q[idx] += qblock

    # variable bounds: inputs from declared bounds, states from RangeBound
    # templates (declared state ranges stay advisory big-M), aux from decls
    bounds = np.empty((n_real, 2))
    bounds[:, 0] = -np.inf
    bounds[:, 1] = np.inf
    real_inputs = [nm for nm in schema.input_names if nm not in schema.bool_input_names]
    for i in range(p):
        for name in real_inputs:
            if name in schema.input_bounds:
                lo, hi = schema.input_bounds[name]
                bounds[columns[(name, i)]] = (lo, hi)
    for tpl in schema.templates:
        if isinstance(tpl, RangeBound):
            for t in range(1, p + 1):
                bounds[columns[(tpl.state, t)]] = (tpl.lo, tpl.hi)
    for a in schema.aux:
        for t in range(1, p + 1):
            bounds[columns[(a.name, t)]] = (a.lo, a.hi)

    problem = MiqpProblem(
        n_real=n_real,
        n_bool=n_bool,
        Q=Q,
        q=q,
        c0=c0,
        eq=eq_rows,
        ineq=ineq_rows,
        bounds=bounds,
    )
    return CompiledHorizon(
        problem=problem,
        columns=columns,
        spec=spec,
        horizon=horizon,
        x0=x0,
        exogenous=exo,
        row_labels_eq=tuple(labels_eq),
        row_labels_ineq=tuple(labels_ineq),
    )


# ---------------------------------------------------------------------------
# controller
# ---------------------------------------------------------------------------


@dataclass
class Plan:
    """Outcome of one receding-horizon solve.

    ``inputs`` always holds ``c`` applicable input vectors; on fallback they
    are all zero and ``objective`` is NaN.
    """

    status: str
    inputs: np.ndarray
    objective: float
    solve_time: float
    nodes: int = 0
    qp_solves: int = 0
    reason: str = ""
    values: np.ndarray | None = None
    compiled: CompiledHorizon | None = None


class RecedingHorizonController:
    """Compile-and-solve wrapper with a zero-input fallback.

    ``plan`` never raises: scenario loops depend on always getting usable
    input vectors back, so solver trouble degrades into zeros plus a reason
    string instead of an exception.

    The default solver options accept any plan within 0.01% of optimal cost:
    at control rates the proof of the last digits costs more than the digits
    are worth, and no closed-loop behavior hinges on them.
    """

    def __init__(
        self,
        spec: ScenarioSpec,
        horizon: HorizonConfig | None = None,
        options: BnbOptions | None = None,
    ) -> None:
        self.spec = spec
        self.horizon = horizon or HorizonConfig()
        self.options = options or BnbOptions(tol_gap_rel=1e-4)

    def _fallback(self, reason: str, t0: float) -> Plan:
        m = len(self.spec.schema.input_names)
        return Plan(
            status="fallback",
            inputs=np.zeros((self.horizon.c, m)),
            objective=math.nan,
            solve_time=time.perf_counter() - t0,
            reason=reason,
        )

    def plan(
        self, x0: np.ndarray, exogenous: dict[str, float] | None = None
    ) -> Plan:
        t0 = time.perf_counter()
        try:
            compiled = compile_horizon(self.spec, self.horizon, x0, exogenous)
            solution = solve_bnb(compiled.problem, self.options)
        except Exception as err:
            return self._fallback(f"{type(err).__name__}: {err}", t0)
        if solution.values is None:
            return self._fallback(f"solver returned {solution.status.value}", t0)
        inputs = np.vstack(
            [
                compiled.input_vector(solution.values, i)
                for i in range(self.horizon.c)
            ]
        )
        status = "ok" if solution.status == SolveStatus.OPTIMAL else "degraded"
        return Plan(
            status=status,
            inputs=inputs,
            objective=solution.objective,
            solve_time=time.perf_counter() - t0,
            nodes=solution.stats.nodes,
            qp_solves=solution.stats.qp_solves,
            values=solution.values,
            compiled=compiled,
        )
