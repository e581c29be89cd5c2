"""Continuous-time linear models stepped by explicit Euler.

Every scenario model is an LTI triple (A, B, C) plus a timestep.  The discrete
update is the literal first-order hold-free rule

    x(k+1) = (A*dt + I) x(k) + B u(k) dt

with no zero-order-hold matrix exponential and no saturation: input limits are
the optimizer's job, not the integrator's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_matrix(name: str, value: object) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _as_vector(name: str, value: object, length: int) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    return arr


@dataclass
class LinearModel:
    """LTI dynamics x' = A x + B u with output y = C x, stepped at ``dt``.

    Args:
        A: (n, n) state matrix.
        B: (n, m) input matrix.
        C: (n_y, n) output selector.
        dt: timestep in seconds, strictly positive.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    dt: float

    def __post_init__(self) -> None:
        self.A = _as_matrix("A", self.A)
        self.B = _as_matrix("B", self.B)
        self.C = _as_matrix("C", self.C)
        n = self.A.shape[0]
        if self.A.shape[1] != n:
            raise ValueError(f"A must be square, got shape {self.A.shape}")
        if self.B.shape[0] != n:
            raise ValueError(
                f"B has {self.B.shape[0]} rows, expected n={n} to match A"
            )
        if self.C.shape[1] != n:
            raise ValueError(
                f"C has {self.C.shape[1]} columns, expected n={n} to match A"
            )
        self.dt = float(self.dt)
        if not np.isfinite(self.dt) or self.dt <= 0.0:
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        for arr in (self.A, self.B, self.C):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def step_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Discrete pair (A*dt + I, B*dt) used by the horizon compiler."""
        return self.A * self.dt + np.eye(self.n), self.B * self.dt

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """One explicit-Euler step; no clamping of x or u."""
        x = _as_vector("x", x, self.n)
        u = _as_vector("u", u, self.m)
        return (self.A * self.dt + np.eye(self.n)) @ x + (self.B @ u) * self.dt

    def output(self, x: np.ndarray) -> np.ndarray:
        x = _as_vector("x", x, self.n)
        return self.C @ x

    def rollout(self, x0: np.ndarray, inputs: object) -> np.ndarray:
        """Propagate a sequence of inputs; returns (len(inputs)+1, n) states.

        Row 0 is ``x0`` itself; row k is the state after applying the first k
        inputs.  An empty input sequence returns just ``x0``.
        """
        x0 = _as_vector("x0", x0, self.n)
        seq = [np.asarray(u, dtype=np.float64) for u in inputs]
        states = np.empty((len(seq) + 1, self.n))
        states[0] = x0
        for k, u in enumerate(seq):
            if u.ndim != 1 or u.shape[0] != self.m:
                raise ValueError(
                    f"input {k} has shape {u.shape}, expected ({self.m},)"
                )
            states[k + 1] = self.step(states[k], u)
        return states
