"""Workplace assistant scenario: a mobile robot shuttling between an
inventory station and a workspace while keeping its battery, its delivery
duty, and the human's workload near target levels.

States, in order:

* ``R_x``  robot position along the aisle, stations at ``l_is`` and ``l_ws``
* ``R_b``  battery level, charging only happens at the inventory station
* ``R_d``  carried-stock level, raised by inventory pickup
* ``R_p``  delivery progress driven by battery headroom and stock drain
* ``H_l``  human workload, lowered by workspace pickups

Inputs: ``u_move`` (signed drive), ``u_charge`` (pinned by an equality to
station presence minus a movement penalty), ``u_ipu``/``u_ido`` (inventory
pick up / drop off), ``u_wpu``/``u_wdo`` (workspace pick up / drop off).

Per-step indicator booleans: ``can_move`` (battery above threshold),
``at_inv``/``at_ws`` (station presence), ``move_pos``/``move_neg`` (drive
sign, each charged as movement by the charge link).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from hri_mpc.dynamics import LinearModel
from hri_mpc.mpc import (
    ConstraintSchema,
    CostSpec,
    GatedInput,
    LinkEquality,
    LocationIndicator,
    RangeBound,
    ScenarioSpec,
    SignIndicatorPair,
    ThresholdIndicator,
)

STATE_NAMES = ("R_x", "R_b", "R_d", "R_p", "H_l")
INPUT_NAMES = ("u_move", "u_charge", "u_ipu", "u_ido", "u_wpu", "u_wdo")


@dataclass
class AssistantParams:
    """Physical constants of the assistant model.

    Time constants are in seconds; gains are per-unit-input rates.  The
    defaults are calibrated so that a full charge settles at 1.0
    (``gamma_c * tau_b == 1``) and a station round trip is worth its
    battery cost at the default horizon.
    """

    tau_b: float = 25.0
    tau_p: float = 10.0
    tau_l: float = 60.0
    beta_b: float = 1.2
    beta_l: float = 0.8
    gamma_m: float = 4.0
    gamma_c: float = 0.04
    gamma_i: float = 0.5
    gamma_w: float = 0.5
    gamma_p: float = 0.5
    gamma_l: float = 0.25
    b_thresh: float = 0.2
    l_is: float = 1.0
    l_ws: float = 9.0
    x_max: float = 10.0
    u_move_min: float = -1.0
    u_move_max: float = 1.0
    gamma_movepenalty: float = 0.5

    def __post_init__(self) -> None:
        for name in ("tau_b", "tau_p", "tau_l"):
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        for name in (
            "beta_b",
            "beta_l",
            "gamma_m",
            "gamma_c",
            "gamma_i",
            "gamma_w",
            "gamma_p",
            "gamma_l",
            "gamma_movepenalty",
        ):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
        if not 0.0 < self.b_thresh < 1.0:
            raise ValueError(f"b_thresh must be in (0, 1), got {self.b_thresh}")
        if not 0.0 <= self.l_is < self.l_ws <= self.x_max:
            raise ValueError(
                f"need 0 <= l_is < l_ws <= x_max, got "
                f"l_is={self.l_is} l_ws={self.l_ws} x_max={self.x_max}"
            )
        if not self.u_move_min < 0.0 < self.u_move_max:
            raise ValueError(
                f"need u_move_min < 0 < u_move_max, got "
                f"[{self.u_move_min}, {self.u_move_max}]"
            )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AssistantParams":
        return cls(**data)


def default_params() -> AssistantParams:
    return AssistantParams()


def load_params(path: str) -> AssistantParams:
    with open(path, encoding="utf-8") as fh:
        return AssistantParams.from_dict(json.load(fh))


def build_model(params: AssistantParams, dt: float = 1.0) -> LinearModel:
    p = params
    A = np.zeros((5, 5))
    A[1, 1] = -1.0 / p.tau_b
    A[3, 1] = p.beta_b / p.tau_p
    A[3, 2] = -p.beta_l / p.tau_p
    A[3, 3] = -1.0 / p.tau_p
    A[4, 4] = -1.0 / p.tau_l
    B = np.zeros((5, 6))
    B[0, 0] = p.gamma_m
    B[1, 1] = p.gamma_c
    B[2] = [0.0, 0.0, p.gamma_i, -p.gamma_i, -p.gamma_w, -p.gamma_w]
    B[3] = [0.0, 0.0, 0.0, 0.0, -p.gamma_p, p.gamma_p]
    B[4] = [0.0, 0.0, 0.0, 0.0, -p.gamma_l, p.gamma_l]
    C = np.zeros((3, 5))
    C[0, 1] = 1.0
    C[1, 3] = 1.0
    C[2, 4] = 1.0
    return LinearModel(A=A, B=B, C=C, dt=dt)


def build_schema(params: AssistantParams) -> ConstraintSchema:
    p = params
    templates = (
        ThresholdIndicator(state="R_b", indicator="can_move", threshold=p.b_thresh),
        LocationIndicator(
            state="R_x",
            low_indicator="at_inv",
            low_threshold=p.l_is,
            high_indicator="at_ws",
            high_threshold=p.l_ws,
            span=p.x_max,
        ),
        GatedInput(input="u_move", gate="can_move", lo=p.u_move_min, hi=p.u_move_max),
        GatedInput(input="u_ipu", gate="at_inv", lo=0.0, hi=1.0),
        GatedInput(input="u_ido", gate="at_inv", lo=0.0, hi=1.0),
        GatedInput(input="u_wpu", gate="at_ws", lo=0.0, hi=1.0),
        GatedInput(input="u_wdo", gate="at_ws", lo=0.0, hi=1.0),
        SignIndicatorPair(
            input="u_move",
            positive="move_pos",
            negative="move_neg",
            lo=p.u_move_min,
            hi=p.u_move_max,
        ),
        LinkEquality(
            terms=(
                ("u_charge", 0, 1.0),
                ("at_inv", 0, -1.0),
                ("move_pos", 0, p.gamma_movepenalty),
                ("move_neg", 0, p.gamma_movepenalty),
            )
        ),
        RangeBound(state="R_d", lo=0.0, hi=1.0),
    )
    return ConstraintSchema(
        input_names=INPUT_NAMES,
        bool_input_names=(),
        state_names=STATE_NAMES,
        state_bounds={
            "R_x": (0.0, p.x_max),
            "R_b": (0.0, 1.0),
            "R_d": (0.0, 1.0),
            "R_p": (-10.0, 10.0),
            "H_l": (-20.0, 20.0),
        },
        input_bounds={
            "u_move": (p.u_move_min, p.u_move_max),
            "u_ipu": (0.0, 1.0),
            "u_ido": (0.0, 1.0),
            "u_wpu": (0.0, 1.0),
            "u_wdo": (0.0, 1.0),
        },
        indicator_names=("can_move", "at_inv", "at_ws", "move_pos", "move_neg"),
        templates=templates,
    )


def build_cost() -> CostSpec:
    C = np.zeros((3, 5))
    C[0, 1] = 1.0
    C[1, 3] = 1.0
    C[2, 4] = 1.0
    return CostSpec(C=C, y_ref=np.array([1.0, 1.0, 0.25]), Qy=np.diag([1.0, 1.0, 10.0]))


def make_spec(params: AssistantParams | None = None, dt: float = 1.0) -> ScenarioSpec:
    params = params or default_params()
    return ScenarioSpec(
        name="assistant",
        model=build_model(params, dt),
        schema=build_schema(params),
        cost=build_cost(),
    )


def initial_state(case: str) -> np.ndarray:
    """Preset starting states for the two study cases.

    ``case1`` is routine operation: healthy battery, full stock, idle human.
    ``case2`` is the stressed variant: low battery and a heavily loaded
    human, which forces a charge detour before workspace relief.
    """
    if case == "case1":
        return np.array([5.0, 0.8, 1.0, 0.5, 0.0])
    if case == "case2":
        return np.array([5.0, 0.3, 1.0, 0.5, 0.9])
    raise ValueError(f"unknown case {case!r}, expected 'case1' or 'case2'")
