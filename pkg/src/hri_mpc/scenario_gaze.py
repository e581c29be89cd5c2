"""Social gaze scenario: a robot deciding each tick whether to look at a
human, balancing felt connection against awkwardness.

States: ``x_c`` (connection, grown by mutual gaze) and ``x_a`` (awkwardness,
grown by mismatched gaze, by staring past a comfort limit, and by rapid
gaze flicker).

Inputs, matching the model's B columns:

* ``u0``  robot gaze decision (boolean)
* ``u1``  human gaze, held to its latest observed value over the horizon
* ``u2``  gaze mismatch, pinned to ``u0 XOR u1``
* ``u3``  staring flag (boolean), raised when the robot's unbroken gaze
  duration exceeds the comfort limit; it also cancels ``u0``'s connection
  contribution
* ``u4``  gaze switch flag, pinned to the sum of rising and falling edge
  indicators of ``u0``

Auxiliary memory: ``d`` (unbroken robot gaze duration, reset by looking
away) and ``z`` (comfort limit, an affine one-step-lagged function of
connection).  Both enter the program at the current step through exogenous
values fed back by the runtime.

Two modes share the dynamics and differ only in the tracking cost:
``connection`` targets high connection at zero awkwardness, ``awkward``
targets high awkwardness and ignores connection.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from hri_mpc.dynamics import LinearModel
from hri_mpc.mpc import (
    AuxVar,
    ConstraintSchema,
    CostSpec,
    DurationUpdate,
    EdgeDetector,
    HoldConstant,
    LinkEquality,
    ScenarioSpec,
    StaringIndicator,
    XorLink,
)

STATE_NAMES = ("x_c", "x_a")
INPUT_NAMES = ("u0", "u1", "u2", "u3", "u4")
MODES = ("connection", "awkward")

# declared working range of the connection state, used to derive the
# comfort-limit bounds; the plant cannot leave it under bounded inputs
_X_C_RANGE = (-100.0, 200.0)


@dataclass
class GazeParams:
    """Physical constants of the gaze model.

    ``m_z`` and ``b_z`` define the comfort limit ``z = m_z * x_c + b_z``:
    the more connected the pair feels, the longer a stare stays comfortable.
    ``d_max`` caps the tracked stare duration.  ``dt`` is the tick period
    the model is discretized at (the live loop runs at ``1 / dt`` Hz).
    """

    tau_c: float = 8.0
    tau_a: float = 4.0
    gamma_00: float = 6.0
    gamma_01: float = 6.0
    gamma_12: float = 20.0
    gamma_13: float = 12.0
    gamma_14: float = 2.0
    m_z: float = 0.05
    b_z: float = 2.0
    d_max: float = 120.0
    dt: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        for name in ("tau_c", "tau_a", "dt", "d_max"):
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        for name in ("gamma_00", "gamma_01", "gamma_12", "gamma_13", "gamma_14"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if self.m_z < 0:
            raise ValueError(f"m_z must be non-negative, got {self.m_z}")
        if self.b_z <= 0:
            raise ValueError(f"b_z must be positive, got {self.b_z}")

    def comfort_limit(self, x_c: float) -> float:
        return self.m_z * x_c + self.b_z

    def z_bounds(self) -> tuple[float, float]:
        lo, hi = _X_C_RANGE
        return (self.comfort_limit(lo), self.comfort_limit(hi))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GazeParams":
        return cls(**data)


def default_params() -> GazeParams:
    return GazeParams()


def load_params(path: str) -> GazeParams:
    with open(path, encoding="utf-8") as fh:
        return GazeParams.from_dict(json.load(fh))


def build_model(params: GazeParams, dt: float | None = None) -> LinearModel:
    p = params
    A = np.diag([-1.0 / p.tau_c, -1.0 / p.tau_a])
    B = np.array(
        [
            [p.gamma_00, p.gamma_01, 0.0, -p.gamma_00, 0.0],
            [0.0, 0.0, p.gamma_12, p.gamma_13, p.gamma_14],
        ]
    )
    return LinearModel(A=A, B=B, C=np.eye(2), dt=p.dt if dt is None else dt)


def build_schema(params: GazeParams) -> ConstraintSchema:
    p = params
    z_lo, z_hi = p.z_bounds()
    templates = (
        HoldConstant(input="u1", exo="u1_init"),
        XorLink(output="u2", operand="u0", exo="u1_init"),
        DurationUpdate(duration="d", switch="u0"),
        StaringIndicator(indicator="u3", duration="d", reference="z"),
        EdgeDetector(
            signal="u0",
            rising="edge_on",
            falling="edge_off",
            output="u4",
            prev_exo="u0_prev",
        ),
        LinkEquality(
            terms=(("z", 1, 1.0), ("x_c", 0, -p.m_z)),
            const=-p.b_z,
        ),
    )
    return ConstraintSchema(
        input_names=INPUT_NAMES,
        bool_input_names=("u0", "u3"),
        state_names=STATE_NAMES,
        state_bounds={"x_c": _X_C_RANGE, "x_a": (-100.0, 200.0)},
        input_bounds={"u1": (0.0, 1.0), "u2": (0.0, 1.0), "u4": (0.0, 1.0)},
        indicator_names=("edge_on", "edge_off"),
        aux=(
            AuxVar(name="d", lo=0.0, hi=p.d_max, init_exo="d_init"),
            AuxVar(name="z", lo=z_lo, hi=z_hi, init_exo="z_init"),
        ),
        templates=templates,
        exogenous_names=("u1_init", "d_init", "z_init", "u0_prev"),
    )


def build_cost(mode: str) -> CostSpec:
    if mode == "connection":
        return CostSpec(C=np.eye(2), y_ref=np.array([80.0, 0.0]), Qy=np.diag([1.0, 1.0]))
    if mode == "awkward":
        return CostSpec(C=np.eye(2), y_ref=np.array([0.0, 80.0]), Qy=np.diag([0.0, 1.0]))
    raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")


def make_spec(
    params: GazeParams | None = None,
    mode: str = "connection",
    dt: float | None = None,
) -> ScenarioSpec:
    params = params or default_params()
    return ScenarioSpec(
        name=f"gaze-{mode}",
        model=build_model(params, dt),
        schema=build_schema(params),
        cost=build_cost(mode),
    )


def initial_state() -> np.ndarray:
    return np.zeros(2)


def initial_exogenous(params: GazeParams) -> dict[str, float]:
    """Exogenous values for a fresh session: nobody has been looking."""
    return {
        "u1_init": 0.0,
        "d_init": 0.0,
        "z_init": params.comfort_limit(0.0),
        "u0_prev": 0.0,
    }
