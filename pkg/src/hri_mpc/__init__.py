"""Mixed-integer MPC toolkit for human-robot interaction models.

Two scenario families ship with the package: a workplace assistant robot
(battery / deliverable / workload logistics) and a social gaze robot
(connection / awkwardness shaping).  Both run on the same stack: linear
dynamics, a big-M constraint compiler, and a self-contained branch-and-bound
MIQP solver.

The web service lives in :mod:`hri_mpc.live` and is imported on demand so the
numeric core does not depend on it.
"""

from hri_mpc.dynamics import LinearModel
from hri_mpc.miqp import (
    BnbOptions,
    MiqpProblem,
    MiqpSolution,
    SolveStatus,
    check_solution,
    solve_bnb,
    solve_oracle,
    solve_qp_relaxation,
)
from hri_mpc.mpc import (
    CompiledHorizon,
    ConstraintSchema,
    CostSpec,
    HorizonConfig,
    RecedingHorizonController,
    ScenarioSpec,
    compile_horizon,
)

__all__ = [
    "BnbOptions",
    "CompiledHorizon",
    "ConstraintSchema",
    "CostSpec",
    "HorizonConfig",
    "LinearModel",
    "MiqpProblem",
    "MiqpSolution",
    "RecedingHorizonController",
    "ScenarioSpec",
    "SolveStatus",
    "check_solution",
    "compile_horizon",
    "solve_bnb",
    "solve_oracle",
    "solve_qp_relaxation",
]

__version__ = "0.1.0"
