"""Closed-loop batch simulation and trace persistence.

An episode alternates receding-horizon planning with plant steps of the same
linear model the controller assumes, so the dynamics residual of a recorded
trace is zero by construction.  The gaze scenario additionally completes the
plant-side input vector each step: the human's gaze comes from a synthetic
switching process, the mismatch / staring / switch flags are recomputed from
what actually happened rather than from the plan, and the duration and
comfort-limit memories are advanced by their defining update rules.

Traces persist as CSV with a one-line JSON preamble comment.  Every recorded
number is snapped to 12 significant digits at record time, which makes the
write / read cycle lossless and replayed episodes byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from hri_mpc.miqp import BnbOptions
from hri_mpc.mpc import (
    HorizonConfig,
    Plan,
    RecedingHorizonController,
    ScenarioSpec,
)
from hri_mpc.scenario_gaze import GazeParams

TRACE_VERSION = 1

# status flags a trace row can carry; "ok" means the governing solve closed
# at proven optimality, "degraded" an incumbent under an iteration or node
# cap, "fallback" the all-zero safe input
ROW_STATUSES = ("ok", "degraded", "fallback")


def snap12(value: float) -> float:
    """Round to 12 significant digits, the trace file's resolution."""
    return float(f"{value:.12g}")


def _snap_array(values: Iterable[float]) -> list[float]:
    return [snap12(float(v)) for v in values]


def params_digest(params_dict: dict) -> str:
    """Short stable digest of a parameter set for trace headers."""
    blob = json.dumps(params_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# synthetic human gaze
# ---------------------------------------------------------------------------


@dataclass
class GazeProcess:
    """Two-state switching process with geometric run lengths.

    Each step the gaze flips with probability ``p_switch`` (a Bernoulli
    draw from a seeded PCG64 stream), else holds.  ``current`` starts at 0:
    the human is not looking when a session begins.
    """

    p_switch: float
    seed: int = 0
    current: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_switch <= 1.0:
            raise ValueError(
                f"p_switch must be in [0, 1], got {self.p_switch}"
            )
        self.current = int(self.current)
        if self.current not in (0, 1):
            raise ValueError(f"current must be 0 or 1, got {self.current}")
        self._rng = np.random.Generator(np.random.PCG64(self.seed))

    @classmethod
    def from_rate(
        cls, dt: float, rate_per_s: float = 0.20, seed: int = 0
    ) -> "GazeProcess":
        """Per-step switch probability from a per-second switch rate."""
        return cls(p_switch=dt * rate_per_s, seed=seed)

    def step(self) -> int:
        if self._rng.random() < self.p_switch:
            self.current ^= 1
        return self.current


# ---------------------------------------------------------------------------
# trace container and CSV round trip
# ---------------------------------------------------------------------------


@dataclass
class Trace:
    """Closed-loop time series plus the header that reproduces it.

    ``columns`` names the numeric columns of ``data`` (time, states,
    auxiliaries, inputs, indicator booleans, objective); ``status`` carries
    the per-row solver flag, one entry per data row.
    """

    header: dict
    columns: tuple[str, ...]
    data: np.ndarray
    status: tuple[str, ...]

    def __post_init__(self) -> None:
        self.columns = tuple(self.columns)
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.size == 0:
            self.data = self.data.reshape(0, len(self.columns))
        if self.data.ndim != 2 or self.data.shape[1] != len(self.columns):
            raise ValueError(
                f"data has shape {self.data.shape}, expected "
                f"(rows, {len(self.columns)})"
            )
        self.status = tuple(self.status)
        if len(self.status) != self.data.shape[0]:
            raise ValueError(
                f"{len(self.status)} status flags for "
                f"{self.data.shape[0]} rows"
            )

    @property
    def steps(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def body_lines(self) -> list[str]:
        """The column header plus one CSV line per row (no preamble)."""
        lines = [",".join(self.columns) + ",status"]
        for row, flag in zip(self.data, self.status):
            cells = [f"{v:.12g}" for v in row]
            cells.append(flag)
            lines.append(",".join(cells))
        return lines

    def body_bytes(self) -> bytes:
        return ("\n".join(self.body_lines()) + "\n").encode("utf-8")


def write_trace(trace: Trace, path: str) -> None:
    header = dict(trace.header)
    header.setdefault("version", TRACE_VERSION)
    preamble = "# " + json.dumps(header, sort_keys=True, separators=(",", ":"))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(preamble + "\n")
        fh.write(trace.body_bytes().decode("utf-8"))


def read_trace(path: str) -> Trace:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError(f"{path}: line 1: missing JSON preamble comment")
    try:
        header = json.loads(lines[0][2:])
    except json.JSONDecodeError as err:
        raise ValueError(f"{path}: line 1: bad preamble JSON: {err}") from err
    if len(lines) < 2:
        raise ValueError(f"{path}: line 2: missing column header")
    names = lines[1].split(",")
    if names[-1] != "status":
        raise ValueError(
            f"{path}: line 2: last column must be 'status', got {names[-1]!r}"
        )
    columns = tuple(names[:-1])
    rows: list[list[float]] = []
    flags: list[str] = []
    for k, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(names):
            raise ValueError(
                f"{path}: line {k}: expected {len(names)} fields, "
                f"got {len(cells)}"
            )
        try:
            rows.append([float(c) for c in cells[:-1]])
        except ValueError as err:
            raise ValueError(f"{path}: line {k}: {err}") from err
        flags.append(cells[-1])
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
    return Trace(header=header, columns=columns, data=data, status=tuple(flags))


def traces_equal(a: Trace, b: Trace) -> bool:
    return (
        a.header == b.header
        and a.columns == b.columns
        and a.status == b.status
        and a.data.shape == b.data.shape
        and bool(np.array_equal(a.data, b.data, equal_nan=True))
    )


# ---------------------------------------------------------------------------
# episode runners
# ---------------------------------------------------------------------------


def _trace_columns(spec: ScenarioSpec) -> tuple[str, ...]:
    schema = spec.schema
    return (
        ("t",)
        + tuple(schema.state_names)
        + tuple(a.name for a in schema.aux)
        + tuple(schema.input_names)
        + tuple(schema.indicator_names)
        + ("objective",)
    )


def _base_header(
    spec: ScenarioSpec,
    horizon: HorizonConfig,
    seed: int,
    x0: np.ndarray,
    mode: str,
    params_dict: dict | None,
) -> dict:
    return {
        "version": TRACE_VERSION,
        "scenario": spec.name,
        "mode": mode,
        "params_sha256": params_digest(params_dict or {}),
        "seed": int(seed),
        "p": horizon.p,
        "c": horizon.c,
        "dt": spec.model.dt,
        "rng": "pcg64",
        "x0": _snap_array(x0),
        "truncated": False,
    }


@dataclass
class _Recorder:
    columns: tuple[str, ...]
    rows: list[list[float]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def add(self, numbers: Iterable[float], flag: str) -> None:
        row = _snap_array(numbers)
        if len(row) != len(self.columns):
            raise ValueError(
                f"row has {len(row)} fields, expected {len(self.columns)}"
            )
        self.rows.append(row)
        self.flags.append(flag)

    def finish(self, header: dict) -> Trace:
        data = np.array(self.rows, dtype=np.float64).reshape(
            len(self.rows), len(self.columns)
        )
        return Trace(
            header=header, columns=self.columns, data=data,
            status=tuple(self.flags),
        )


def _plan_flag(plan: Plan) -> str:
    if plan.status == "ok":
        return "ok"
    if plan.status == "degraded":
        return "degraded"
    return "fallback"


def _plan_indicators(plan: Plan, names: tuple[str, ...], offset: int) -> list[int]:
    """Indicator booleans at a plan offset, zeros on fallback."""
    if plan.values is None or plan.compiled is None:
        return [0] * len(names)
    out = []
    for name in names:
        v = plan.values[plan.compiled.column(name, offset)]
        out.append(int(round(v)))
    return out


def run_assistant_episode(
    spec: ScenarioSpec,
    horizon: HorizonConfig,
    x0: np.ndarray,
    duration_steps: int,
    seed: int = 0,
    mode: str = "",
    params_dict: dict | None = None,
    options: BnbOptions | None = None,
    on_plan: Callable[[int, Plan], None] | None = None,
) -> Trace:
    """Closed loop for the assistant: planned inputs applied verbatim."""
    controller = RecedingHorizonController(spec, horizon, options)
    columns = _trace_columns(spec)
    rec = _Recorder(columns)
    header = _base_header(spec, horizon, seed, x0, mode, params_dict)
    names = spec.schema.indicator_names
    x = np.asarray(x0, dtype=np.float64).copy()
    plan: Plan | None = None
    try:
        for k in range(duration_steps):
            offset = k % horizon.c
            if offset == 0 or plan is None:
                plan = controller.plan(x)
                if on_plan is not None:
                    on_plan(k, plan)
            u = plan.inputs[offset]
            flags = _plan_indicators(plan, names, offset)
            rec.add(
                [k * spec.model.dt, *x, *u, *flags, plan.objective],
                _plan_flag(plan),
            )
            x = spec.model.step(x, u)
    except Exception:
        header["truncated"] = True
    return rec.finish(header)


def run_gaze_episode(
    spec: ScenarioSpec,
    horizon: HorizonConfig,
    params: GazeParams,
    duration_steps: int,
    gaze: GazeProcess | None = None,
    seed: int = 0,
    x0: np.ndarray | None = None,
    mode: str = "",
    options: BnbOptions | None = None,
    on_plan: Callable[[int, Plan], None] | None = None,
    u1_sequence: Iterable[int] | None = None,
    mode_sequence: Iterable[str] | None = None,
    spec_factory: Callable[[str], ScenarioSpec] | None = None,
) -> Trace:
    """Closed loop for the gaze scenario with plant-side input completion.

    The human's gaze is sampled every step (from ``u1_sequence`` when given,
    else from ``gaze``, else constant 0) and latched into the solve that
    governs each control window.  The robot's planned gaze decision is
    applied verbatim; the mismatch, staring, and switch inputs are recomputed
    from the realized signals, and the duration / comfort-limit memories
    advance by their defining updates, so the recorded inputs always describe
    what actually happened.

    ``mode_sequence`` optionally retargets the cost per step (live sessions
    switch modes mid-run); ``spec_factory`` must then map a mode name to a
    spec sharing this scenario's model.
    """
    if gaze is None and u1_sequence is None:
        gaze = GazeProcess.from_rate(spec.model.dt, seed=seed)
    u1_iter = iter(u1_sequence) if u1_sequence is not None else None
    mode_iter = iter(mode_sequence) if mode_sequence is not None else None
    controllers = {mode or spec.name: RecedingHorizonController(spec, horizon, options)}
    columns = _trace_columns(spec)
    rec = _Recorder(columns)
    x0 = np.zeros(spec.model.n) if x0 is None else np.asarray(x0, dtype=np.float64)
    header = _base_header(spec, horizon, seed, x0, mode, params.to_dict())
    dt = spec.model.dt
    x = x0.copy()
    d = 0.0
    z = params.comfort_limit(x[0])
    u0_prev = 0
    u1 = 0
    active_mode = mode or spec.name
    plan: Plan | None = None
    anchor = 0
    try:
        for k in range(duration_steps):
            if u1_iter is not None:
                u1 = int(next(u1_iter))
            elif gaze is not None:
                u1 = gaze.step()
            if mode_iter is not None:
                wanted = next(mode_iter)
                if wanted != active_mode:
                    if spec_factory is None:
                        raise ValueError(
                            "mode_sequence requires a spec_factory"
                        )
                    if wanted not in controllers:
                        controllers[wanted] = RecedingHorizonController(
                            spec_factory(wanted), horizon, options
                        )
                    active_mode = wanted
                    plan = None
            offset = k - anchor
            if plan is None or offset >= horizon.c:
                exo = {
                    "u1_init": float(u1),
                    "d_init": d,
                    "z_init": z,
                    "u0_prev": float(u0_prev),
                }
                plan = controllers[active_mode].plan(x, exo)
                if on_plan is not None:
                    on_plan(k, plan)
                anchor = k
                offset = 0
            u0 = int(round(plan.inputs[offset][0]))
            u2 = u0 ^ u1
            u3 = 1 if d > z else 0
            u4 = 1 if u0 != u0_prev else 0
            edge_on = 1 if (u0 == 1 and u0_prev == 0) else 0
            edge_off = 1 if (u0 == 0 and u0_prev == 1) else 0
            rec.add(
                [
                    k * dt, *x, d, z,
                    u0, u1, u2, u3, u4, edge_on, edge_off,
                    plan.objective,
                ],
                _plan_flag(plan),
            )
            x = spec.model.step(
                x, np.array([u0, u1, u2, u3, u4], dtype=np.float64)
            )
            z = params.comfort_limit(rec.rows[-1][1])
            d = u0 * (d + dt)
            u0_prev = u0
    except Exception:
        header["truncated"] = True
    return rec.finish(header)


def run_episode(
    spec: ScenarioSpec,
    horizon: HorizonConfig | None = None,
    x0: np.ndarray | None = None,
    duration_steps: int = 100,
    gaze: GazeProcess | None = None,
    seed: int = 0,
    mode: str = "",
    gaze_params: GazeParams | None = None,
    params_dict: dict | None = None,
    options: BnbOptions | None = None,
    on_plan: Callable[[int, Plan], None] | None = None,
) -> Trace:
    """Dispatch to the scenario-appropriate episode runner.

    A schema that latches the human's gaze (exposes ``u1_init``) runs the
    gaze loop and needs ``gaze_params`` for the memory updates; anything
    else runs the verbatim-input loop.
    """
    horizon = horizon or HorizonConfig()
    if "u1_init" in spec.schema.exogenous_names:
        if gaze_params is None:
            raise ValueError(
                "gaze-style scenario needs gaze_params for plant updates"
            )
        return run_gaze_episode(
            spec, horizon, gaze_params, duration_steps,
            gaze=gaze, seed=seed, x0=x0, mode=mode, options=options,
            on_plan=on_plan,
        )
    if x0 is None:
        raise ValueError("x0 is required for this scenario")
    return run_assistant_episode(
        spec, horizon, x0, duration_steps,
        seed=seed, mode=mode, params_dict=params_dict, options=options,
        on_plan=on_plan,
    )


# ---------------------------------------------------------------------------
# aggregate statistics (the sweep subcommand's payload)
# ---------------------------------------------------------------------------


def trace_stats(trace: Trace) -> dict:
    """Per-episode summary used by sweeps and exit-code policy."""
    out: dict = {
        "steps": trace.steps,
        "truncated": bool(trace.header.get("truncated", False)),
    }
    n = max(trace.steps, 1)
    degraded = sum(1 for s in trace.status if s != "ok")
    out["degraded_fraction"] = degraded / n
    cols = trace.columns
    if "u0" in cols and "u1" in cols:
        u0 = trace.column("u0")
        u1 = trace.column("u1")
        out["gaze_fraction"] = float(np.mean(u0)) if trace.steps else 0.0
        out["reciprocation"] = (
            float(np.mean(u0 == u1)) if trace.steps else 0.0
        )
        out["staring_steps"] = int(np.sum(trace.column("u3") > 0.5))
    if "H_l" in cols:
        h = trace.column("H_l")
        out["workload_band_occupancy"] = (
            float(np.mean((h >= 0.20) & (h <= 0.30))) if trace.steps else 0.0
        )
    return out


def aggregate_stats(traces: list[Trace]) -> dict:
    """Mean per-episode statistics over a sweep."""
    per = [trace_stats(t) for t in traces]
    if not per:
        return {"episodes": 0}
    keys = sorted(
        k for k in per[0] if isinstance(per[0][k], (int, float)) and k != "steps"
    )
    agg: dict = {"episodes": len(per), "steps": per[0]["steps"]}
    for key in keys:
        agg[key] = float(np.mean([p[key] for p in per]))
    return agg
