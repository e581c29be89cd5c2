"""Mixed-integer quadratic programs and a self-contained solver stack.

Three entry points share one problem container:

* :func:`solve_qp_relaxation` -- convex relaxation with booleans in [0, 1];
  an operator-splitting (ADMM) iteration with Ruiz equilibration and an
  active-set polish step.  Equality-only problems take a direct KKT path.
* :func:`solve_oracle` -- exhaustive enumeration over boolean assignments,
  the ground truth for small problems.
* :func:`solve_bnb` -- best-first branch and bound on the relaxation bound
  with most-fractional branching and deterministic tie-breaking.

Objective convention everywhere: ``J(v) = v' Q v + q' v + c0`` (no 1/2
factor).  Boolean variables occupy the trailing index range and always carry
[0, 1] bounds in the stored problem; fixing them is solver business.
Problems are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import heapq
import os
import json
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lstsq, lu_factor, lu_solve


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


def _rows_to_arrays(name: str, rows: object, n: int) -> tuple[np.ndarray, np.ndarray]:
    coeffs = []
    rhs = []
    for k, row in enumerate(rows):
        try:
            a, b = row
        except (TypeError, ValueError):
            raise ValueError(f"{name} row {k} must be a (coefficients, rhs) pair")
        a = np.asarray(a, dtype=np.float64)
        if a.shape != (n,):
            raise ValueError(f"{name} row {k} has shape {a.shape}, expected ({n},)")
        b = float(b)
        if not np.all(np.isfinite(a)) or not np.isfinite(b):
            raise ValueError(f"{name} row {k} contains non-finite entries")
        coeffs.append(a)
        rhs.append(b)
    if coeffs:
        return np.array(coeffs), np.array(rhs)
    return np.zeros((0, n)), np.zeros(0)


@dataclass
class MiqpProblem:
    """min  v' Q v + q' v + c0  over reals and {0, 1} booleans.

    Args:
        n_real: number of continuous variables (index range [0, n_real)).
        n_bool: number of boolean variables (trailing index range).
        Q: (n, n) cost matrix, symmetrized to (Q+Q')/2 on construction and
            rejected if any eigenvalue falls below -1e-9.
        q: (n,) linear cost.
        c0: constant cost term.
        eq: iterable of (coefficients, rhs) rows meaning ``a @ v == rhs``.
        ineq: iterable of (coefficients, rhs) rows meaning ``a @ v <= rhs``.
        bounds: per-variable [lo, hi]; either (n_real, 2) for the reals or
            (n, 2) including booleans, whose rows must then be [0, 1].
            Omitted bounds mean unbounded reals.
    """

    n_real: int
    n_bool: int
    Q: np.ndarray
    q: np.ndarray
    c0: float = 0.0
    eq: object = ()
    ineq: object = ()
    bounds: object = None

    def __post_init__(self) -> None:
        self.n_real = int(self.n_real)
        self.n_bool = int(self.n_bool)
        if self.n_real < 0 or self.n_bool < 0 or self.n_real + self.n_bool == 0:
            raise ValueError(
                f"need at least one variable, got n_real={self.n_real} "
                f"n_bool={self.n_bool}"
            )
        n = self.n
        Q = np.asarray(self.Q, dtype=np.float64)
        if Q.shape != (n, n):
            raise ValueError(f"Q has shape {Q.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(Q)):
            raise ValueError("Q contains non-finite entries")
        Q = (Q + Q.T) / 2.0
        self.Q = Q
        q = np.asarray(self.q, dtype=np.float64)
        if q.shape != (n,):
            raise ValueError(f"q has shape {q.shape}, expected ({n},)")
        if not np.all(np.isfinite(q)):
            raise ValueError("q contains non-finite entries")
        self.q = q
        self.c0 = float(self.c0)
        self.A_eq, self.b_eq = _rows_to_arrays("eq", self.eq, n)
        self.A_in, self.b_in = _rows_to_arrays("ineq", self.ineq, n)
        self.eq = [(self.A_eq[i], self.b_eq[i]) for i in range(len(self.b_eq))]
        self.ineq = [(self.A_in[i], self.b_in[i]) for i in range(len(self.b_in))]

        if self.bounds is None:
            full = np.empty((n, 2))
            full[: self.n_real, 0] = -np.inf
            full[: self.n_real, 1] = np.inf
        else:
            given = np.asarray(self.bounds, dtype=np.float64)
            if given.shape == (self.n_real, 2):
                full = np.empty((n, 2))
                full[: self.n_real] = given
            elif given.shape == (n, 2):
                full = given.copy()
                bool_part = full[self.n_real :]
                if bool_part.size and not (
                    np.all(bool_part[:, 0] == 0.0) and np.all(bool_part[:, 1] == 1.0)
                ):
                    raise ValueError("boolean bounds must be exactly [0, 1]")
            else:
                raise ValueError(
                    f"bounds has shape {given.shape}, expected ({self.n_real}, 2) "
                    f"or ({n}, 2)"
                )
        full[self.n_real :, 0] = 0.0
        full[self.n_real :, 1] = 1.0
        if np.any(np.isnan(full)):
            raise ValueError("bounds contain NaN")
        if np.any(full[:, 0] > full[:, 1]):
            bad = int(np.argmax(full[:, 0] > full[:, 1]))
            raise ValueError(f"variable {bad} has lo > hi: {full[bad].tolist()}")
        self.bounds = full

        # PSD gate: cheap shifted Cholesky first, exact eigenvalue check only
        # on failure.  Indefiniteness beyond -1e-9 is rejected, not repaired.
        scale = max(1.0, float(np.max(np.abs(Q))) if Q.size else 1.0)
        try:
            np.linalg.cholesky(Q + (1e-9 * scale) * np.eye(n))
        except np.linalg.LinAlgError:
            eigmin = float(np.linalg.eigvalsh(Q)[0])
            if eigmin < -1e-9:
                raise ValueError(
                    f"Q is not positive semidefinite: min eigenvalue {eigmin:g}"
                )
        for arr in (self.Q, self.q, self.A_eq, self.b_eq, self.A_in, self.b_in,
                    self.bounds):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.n_real + self.n_bool

    def objective(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise ValueError(f"v has shape {v.shape}, expected ({self.n},)")
        return float(v @ self.Q @ v + self.q @ v + self.c0)

    def to_json(self) -> str:
        def enc(value: float) -> float | None:
            return None if math.isinf(value) else float(value)

        payload = {
            "n_real": self.n_real,
            "n_bool": self.n_bool,
            "Q": self.Q.tolist(),
            "q": self.q.tolist(),
            "c0": self.c0,
            "eq": [[a.tolist(), float(b)] for a, b in self.eq],
            "ineq": [[a.tolist(), float(b)] for a, b in self.ineq],
            "bounds": [[enc(lo), enc(hi)] for lo, hi in self.bounds],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "MiqpProblem":
        payload = json.loads(text)
        bounds = [
            [-np.inf if lo is None else lo, np.inf if hi is None else hi]
            for lo, hi in payload["bounds"]
        ]
        return cls(
            n_real=payload["n_real"],
            n_bool=payload["n_bool"],
            Q=payload["Q"],
            q=payload["q"],
            c0=payload["c0"],
            eq=[(a, b) for a, b in payload["eq"]],
            ineq=[(a, b) for a, b in payload["ineq"]],
            bounds=np.asarray(bounds) if bounds else None,
        )


def check_solution(
    problem: MiqpProblem, v: np.ndarray, tol: float = 1e-6
) -> tuple[bool, list[str]]:
    """Independent feasibility check used to certify solver output."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (problem.n,):
        return False, [f"value vector has shape {v.shape}, expected ({problem.n},)"]
    bad: list[str] = []
    if problem.b_eq.size:
        res = problem.A_eq @ v - problem.b_eq
        for i in np.flatnonzero(np.abs(res) > tol):
            bad.append(f"equality row {i} residual {res[i]:.3e}")
    if problem.b_in.size:
        res = problem.A_in @ v - problem.b_in
        for i in np.flatnonzero(res > tol):
            bad.append(f"inequality row {i} violated by {res[i]:.3e}")
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    for i in np.flatnonzero(v < lo - tol):
        bad.append(f"variable {i} below lower bound: {v[i]:.9g} < {lo[i]:.9g}")
    for i in np.flatnonzero(v > hi + tol):
        bad.append(f"variable {i} above upper bound: {v[i]:.9g} > {hi[i]:.9g}")
    b = v[problem.n_real :]
    for j in np.flatnonzero(np.abs(b - np.round(b)) > tol):
        bad.append(f"boolean {j} not integral: {b[j]:.9g}")
    return not bad, bad


@dataclass
class SolveStats:
    nodes: int = 0
    qp_solves: int = 0
    wall_time: float = 0.0
    pruned_nodes: int = 0
    min_prune_slack: float = math.inf


@dataclass
class MiqpSolution:
    status: SolveStatus
    values: np.ndarray | None
    objective: float
    stats: SolveStats = field(default_factory=SolveStats)


@dataclass
class BnbOptions:
    """Search tolerances.

    ``tol_gap`` is the absolute optimality gap the search proves;
    ``tol_gap_rel`` adds a term proportional to the incumbent objective,
    which real-time callers use to stop proving digits that cannot matter
    behaviorally.  The returned objective is within
    ``tol_gap + tol_gap_rel * |objective|`` of the true optimum.
    """

    tol_int: float = 1e-6
    tol_gap: float = 1e-6
    node_cap: int = 100_000
    max_qp_iter: int = 4000
    tol_gap_rel: float = 0.0


# ---------------------------------------------------------------------------
# convex QP core
# ---------------------------------------------------------------------------

_SIGMA = 1e-6
_ALPHA = 1.6
_RHO0 = 0.1
_RHO_EQ_SCALE = 1e3
_RUIZ_ITERS = 10
_CHECK_EVERY = 25
_TRACE_ADMM = bool(int(os.environ.get("TRACE_ADMM", "0")))


@dataclass
class _QpResult:
    status: SolveStatus
    x: np.ndarray
    y: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float


def _nnls(
    C: np.ndarray, d: np.ndarray, passive0: np.ndarray | None = None
) -> np.ndarray | None:
    """Nonnegative least squares by Lawson-Hanson active-set pivoting.

    Returns the minimizer of ``|C mu - d|`` over ``mu >= 0``, or None if the
    pivoting fails to terminate within its cap (which only a pathological
    conditioning can cause; the classic algorithm terminates finitely).
    ``passive0`` seeds the passive set; a good guess saves most pivots and a
    bad one merely costs the steps needed to walk back out of it.
    """
    n, k = C.shape
    mu = np.zeros(k)
    if k == 0:
        return mu
    # all pivot steps solve on subsets of the same gram system, so it is
    # formed once; cholesky handles the well-posed subsets and the dense
    # qr fallback only runs when a dependent column slips into the set
    G = C.T @ C
    b = C.T @ d
    passive = np.zeros(k, dtype=bool) if passive0 is None else passive0.copy()
    pending = bool(np.any(passive))
    wtol = 1e-12 * max(
        1.0, float(np.max(np.abs(C), initial=0.0)) * float(np.max(np.abs(d), initial=0.0))
    )
    for _ in range(3 * k + 10):
        if not pending:
            w = b - G @ mu
            w[passive] = -np.inf
            j = int(np.argmax(w))
            if w[j] <= wtol:
                return mu
            passive[j] = True
        pending = False
        while True:
            idx = np.flatnonzero(passive)
            try:
                cf = cho_factor(G[np.ix_(idx, idx)], check_finite=False)
                s = cho_solve(cf, b[idx], check_finite=False)
            except (np.linalg.LinAlgError, ValueError):
                try:
                    s = lstsq(
                        C[:, idx], d, check_finite=False, lapack_driver="gelsy"
                    )[0]
                except (np.linalg.LinAlgError, ValueError):
                    return None
            if s.size and float(np.min(s)) > 0.0:
                mu = np.zeros(k)
                mu[idx] = s
                break
            # step toward s only as far as feasibility allows, then retire
            # the columns that hit zero
            cur = mu[idx]
            neg = s <= 0.0
            denom = cur[neg] - s[neg]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0.0, cur[neg] / denom, np.inf)
            alpha = float(np.min(ratios, initial=np.inf))
            if not np.isfinite(alpha):
                return None
            stepped = cur + alpha * (s - cur)
            mu = np.zeros(k)
            mu[idx] = stepped
            passive[idx] = stepped > 1e-14
            if not np.any(passive):
                break
    return None


class _QpWorkspace:
    """ADMM solver for ``min 1/2 x'Px + q'x  s.t.  l <= A_full x <= u``.

    The stacked constraint matrix is [A_eq; A_in; I], so per-node boolean
    fixing only moves l/u entries of the trailing identity block and the
    factorization is shared across the whole branch-and-bound tree.
    """

    def __init__(
        self,
        problem: MiqpProblem,
        max_iter: int = 4000,
        rho_scale: float = _RHO0,
    ) -> None:
        self.problem = problem
        n = problem.n
        self.n = n
        self.max_iter = int(max_iter)
        self._rho_init = float(rho_scale)
        self.A = np.vstack([problem.A_eq, problem.A_in, np.eye(n)])
        self.m = self.A.shape[0]
        me, mi = len(problem.b_eq), len(problem.b_in)
        self.me, self.mi = me, mi
        self.base_l = np.concatenate(
            [problem.b_eq, np.full(mi, -np.inf), problem.bounds[:, 0]]
        )
        self.base_u = np.concatenate(
            [problem.b_eq, problem.b_in, problem.bounds[:, 1]]
        )
        self.bound_row_offset = me + mi
        self.P = 2.0 * problem.Q
        self.q = problem.q

        self._equilibrate()
        # rows pinned to a point (l == u) act as equalities and get a
        # stiffer rho.  The penalty part of K factors as rho_scale * M_rho
        # plus a diagonal bump for per-node pinned bound rows, so a global
        # rho change or a new pin pattern costs one Cholesky and factors are
        # cached per (rho_scale, pinned-variable set)
        # near-point rows act as equalities numerically; classifying them by
        # exact equality would leave them on the soft rho and stall the
        # iteration whenever a presolve hands in collapsed variable boxes
        self.eq_mask = self.base_l == self.base_u
        self.rho_scale = self._rho_init
        weights = np.where(self.eq_mask, _RHO_EQ_SCALE, 1.0)
        self.M_rho = (self.Ab.T * weights) @ self.Ab
        # squared scaled coefficient of each identity bound row, used for
        # diagonal updates when a variable bound is pinned
        bnd = self.bound_row_offset
        self.bound_coef_sq = (self.E[bnd:] * self.D) ** 2
        self._factor_cache: dict[tuple[float, int], object] = {}

    def _equilibrate(self) -> None:
        n, m = self.n, self.m
        Pb = self.P.copy()
        Ab = self.A.copy()
        qb = self.q.copy()
        D = np.ones(n)
        E = np.ones(m)
        cost_scale = 1.0
        for _ in range(_RUIZ_ITERS):
            col = np.maximum(
                np.max(np.abs(Pb), axis=0, initial=0.0),
                np.max(np.abs(Ab), axis=0, initial=0.0),
            )
            row = np.max(np.abs(Ab), axis=1, initial=0.0)
            d = 1.0 / np.sqrt(np.where(col > 0, col, 1.0))
            e = 1.0 / np.sqrt(np.where(row > 0, row, 1.0))
            Pb = Pb * d[:, None] * d[None, :]
            qb = qb * d
            Ab = Ab * e[:, None] * d[None, :]
            D *= d
            E *= e
            pcol = np.max(np.abs(Pb), axis=0, initial=0.0)
            denom = max(float(np.mean(pcol)) if n else 0.0, float(np.max(np.abs(qb), initial=0.0)))
            gamma = 1.0 / denom if denom > 0 else 1.0
            Pb *= gamma
            qb *= gamma
            cost_scale *= gamma
        self.Pb, self.Ab, self.qb = Pb, Ab, qb
        self.D, self.E, self.cost_scale = D, E, cost_scale
        # rho tracks the scaled data's magnitude so defaults stay meaningful
        self.rho_base = 1.0

    def _rho_and_factor(self, l: np.ndarray, u: np.ndarray):
        """Rho vector and cached K factor for this node's pinned rows."""
        pinned = (l == u) & ~self.eq_mask
        bnd = self.bound_row_offset
        pinned_vars = np.flatnonzero(pinned[bnd:])
        if np.any(pinned[:bnd]):
            raise ValueError("only bound rows may be pinned per node")
        scale = self.rho_scale
        rho = np.where(self.eq_mask | pinned, scale * _RHO_EQ_SCALE, scale)
        mask = 0
        for j in pinned_vars:
            mask |= 1 << int(j)
        key = (scale, mask)
        factor = self._factor_cache.get(key)
        if factor is None:
            K = self.Pb + scale * self.M_rho
            K[np.diag_indices_from(K)] += _SIGMA
            extra = scale * (_RHO_EQ_SCALE - 1.0) * self.bound_coef_sq[pinned_vars]
            K[pinned_vars, pinned_vars] += extra
            factor = cho_factor(K, lower=True, check_finite=False)
            if len(self._factor_cache) >= 128:
                self._factor_cache.clear()
            self._factor_cache[key] = factor
        return rho, factor

    # -- direct path ------------------------------------------------------

    def _box_infeasible(self, l: np.ndarray, u: np.ndarray) -> bool:
        """Interval propagation over the variable box; exact when it fires.

        Catches pinned booleans contradicting rows whose state terms folded
        into constants, which is the common way a rounding heuristic dies.
        """
        bnd = self.bound_row_offset
        lo = l[bnd:]
        hi = u[bnd:]
        if np.any(lo > hi):
            return True
        A = self.A[:bnd]
        if A.size == 0:
            return False
        pos = A > 0
        neg = A < 0
        with np.errstate(invalid="ignore"):
            row_min = np.sum(
                np.where(pos, A * lo, 0.0) + np.where(neg, A * hi, 0.0), axis=1
            )
            row_max = np.sum(
                np.where(pos, A * hi, 0.0) + np.where(neg, A * lo, 0.0), axis=1
            )
        lr = l[:bnd]
        ur = u[:bnd]
        tol = 1e-9 * (
            1.0
            + np.maximum(
                np.where(np.isfinite(lr), np.abs(lr), 0.0),
                np.where(np.isfinite(ur), np.abs(ur), 0.0),
            )
        )
        if np.any(np.isfinite(ur) & (row_min > ur + tol)):
            return True
        if np.any(np.isfinite(lr) & (row_max < lr - tol)):
            return True
        return False

    def _interval_state(
        self, l: np.ndarray, u: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None:
        """Per-column interval contributions and row range of the box.

        Returns ``(cmin, cmax, row_min, row_max)`` over the constraint rows,
        or None when a variable box is empty.
        """
        bnd = self.bound_row_offset
        lo = l[bnd:]
        hi = u[bnd:]
        if np.any(lo > hi):
            return None
        return self._interval_state_from_box(lo, hi)

    def _interval_state_from_box(
        self, lo: np.ndarray, hi: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        A = self.A[: self.bound_row_offset]
        pos = A > 0
        neg = A < 0
        with np.errstate(invalid="ignore"):
            cmin = np.where(pos, A * lo, 0.0) + np.where(neg, A * hi, 0.0)
            cmax = np.where(pos, A * hi, 0.0) + np.where(neg, A * lo, 0.0)
        row_min = np.sum(cmin, axis=1)
        row_max = np.sum(cmax, axis=1)
        return cmin, cmax, row_min, row_max

    def _row_tols(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        bnd = self.bound_row_offset
        lr = self.base_l[:bnd]
        ur = self.base_u[:bnd]
        tol = 1e-9 * (
            1.0
            + np.maximum(
                np.where(np.isfinite(lr), np.abs(lr), 0.0),
                np.where(np.isfinite(ur), np.abs(ur), 0.0),
            )
        )
        return lr, ur, tol

    def _pin_conflicts(
        self,
        state: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
        col: int,
        val: float,
        rows: np.ndarray,
        lr: np.ndarray,
        ur: np.ndarray,
        tol: np.ndarray,
    ) -> bool:
        """Whether pinning one finite-bounded column breaks the row ranges."""
        cmin, cmax, row_min, row_max = state
        a = self.A[rows, col] * val
        nmin = row_min[rows] + (a - cmin[rows, col])
        nmax = row_max[rows] + (a - cmax[rows, col])
        bad = (np.isfinite(ur[rows]) & (nmin > ur[rows] + tol[rows])) | (
            np.isfinite(lr[rows]) & (nmax < lr[rows] - tol[rows])
        )
        return bool(np.any(bad))

    def _commit_pin(
        self,
        state: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
        col: int,
        val: float,
        rows: np.ndarray,
    ) -> None:
        cmin, cmax, row_min, row_max = state
        a = self.A[rows, col] * val
        row_min[rows] += a - cmin[rows, col]
        row_max[rows] += a - cmax[rows, col]
        cmin[rows, col] = a
        cmax[rows, col] = a

    def _bool_rows(self, j: int) -> np.ndarray:
        cache = getattr(self, "_bool_rows_cache", None)
        if cache is None:
            bnd = self.bound_row_offset
            cache = [
                np.nonzero(self.A[:bnd, self.problem.n_real + j2])[0]
                for j2 in range(self.problem.n_bool)
            ]
            self._bool_rows_cache = cache
        return cache[j]

    def _tighten_box(
        self, lo: np.ndarray, hi: np.ndarray, rounds: int = 16
    ) -> tuple[np.ndarray, np.ndarray] | None:
        """Interval constraint propagation over the variable box.

        Each round derives per-variable bounds from every row given the
        current box and snaps boolean boxes to their integral hull; chains
        like accumulator recursions need one round per link, so the cap
        covers a full horizon and the loop stops as soon as nothing moves.
        Returns the tightened box or None on proven infeasibility.
        """
        bnd = self.bound_row_offset
        A = self.A[:bnd]
        lo = lo.copy()
        hi = hi.copy()
        if np.any(lo > hi):
            return None
        if A.size == 0:
            return lo, hi
        lr, ur, tol = self._row_tols()
        nr = self.problem.n_real
        pos = A > 0
        neg = A < 0
        Apos = np.where(pos, A, 0.0)
        Aneg = np.where(neg, A, 0.0)
        Adiv = np.where(A != 0, A, 1.0)
        urc = ur[:, None]
        lrc = lr[:, None]
        for _ in range(rounds):
            finite_box = not (
                bool(np.any(np.isinf(lo))) or bool(np.any(np.isinf(hi)))
            )
            with np.errstate(invalid="ignore", divide="ignore"):
                if finite_box:
                    cmin = Apos * lo + Aneg * hi
                    cmax = Apos * hi + Aneg * lo
                    row_min = cmin.sum(axis=1)
                    row_max = cmax.sum(axis=1)
                    if np.any(np.isfinite(ur) & (row_min > ur + tol)):
                        return None
                    if np.any(np.isfinite(lr) & (row_max < lr - tol)):
                        return None
                    rest_min = row_min[:, None] - cmin
                    rest_max = row_max[:, None] - cmax
                else:
                    cmin = np.where(pos, A * lo, 0.0) + np.where(neg, A * hi, 0.0)
                    cmax = np.where(pos, A * hi, 0.0) + np.where(neg, A * lo, 0.0)
                    # a row's activity range needs infinite contributions
                    # counted separately: the rest-of-row range for a variable
                    # is finite exactly when every other contribution is, and
                    # subtracting whole-row sums would turn that case into
                    # inf - inf
                    inf_min = np.isinf(cmin)
                    inf_max = np.isinf(cmax)
                    fin_min = np.where(inf_min, 0.0, cmin)
                    fin_max = np.where(inf_max, 0.0, cmax)
                    n_inf_min = inf_min.sum(axis=1)
                    n_inf_max = inf_max.sum(axis=1)
                    fin_sum_min = fin_min.sum(axis=1)
                    fin_sum_max = fin_max.sum(axis=1)
                    row_min = np.where(n_inf_min > 0, -np.inf, fin_sum_min)
                    row_max = np.where(n_inf_max > 0, np.inf, fin_sum_max)
                    if np.any(np.isfinite(ur) & (row_min > ur + tol)):
                        return None
                    if np.any(np.isfinite(lr) & (row_max < lr - tol)):
                        return None
                    rest_min = np.where(
                        (n_inf_min[:, None] - inf_min) == 0,
                        fin_sum_min[:, None] - fin_min,
                        -np.inf,
                    )
                    rest_max = np.where(
                        (n_inf_max[:, None] - inf_max) == 0,
                        fin_sum_max[:, None] - fin_max,
                        np.inf,
                    )
                cand = (urc - rest_min) / Adiv
                ok = pos & np.isfinite(cand)
                hi_cand = np.where(ok, cand, np.inf).min(axis=0)
                ok = neg & np.isfinite(cand)
                lo_cand = np.where(ok, cand, -np.inf).max(axis=0)
                cand = (lrc - rest_max) / Adiv
                ok = pos & np.isfinite(cand)
                lo_cand = np.maximum(
                    lo_cand, np.where(ok, cand, -np.inf).max(axis=0)
                )
                ok = neg & np.isfinite(cand)
                hi_cand = np.minimum(
                    hi_cand, np.where(ok, cand, np.inf).min(axis=0)
                )
                # outward float margin keeps the cut sound
                hi_cand = hi_cand + 1e-9 * (1.0 + np.abs(hi_cand))
                lo_cand = lo_cand - 1e-9 * (1.0 + np.abs(lo_cand))
                new_hi = np.minimum(hi, hi_cand)
                new_lo = np.maximum(lo, lo_cand)
                # a boolean box that excludes both integers kills the node,
                # one that excludes a single integer pins the other
                bl = new_lo[nr:]
                bh = new_hi[nr:]
                bl = np.where(bl > 1e-6, 1.0, np.maximum(bl, 0.0))
                bh = np.where(bh < 1.0 - 1e-6, 0.0, np.minimum(bh, 1.0))
                new_lo[nr:] = bl
                new_hi[nr:] = bh
                if np.any(new_lo > new_hi + 1e-12 * (1.0 + np.abs(new_hi))):
                    return None
                new_hi = np.maximum(new_hi, new_lo)
                moved = bool(
                    np.any(
                        (new_hi < hi - 1e-12 * (1.0 + np.abs(hi)))
                        | (new_lo > lo + 1e-12 * (1.0 + np.abs(lo)))
                    )
                )
            lo, hi = new_lo, new_hi
            if not moved:
                break
        return lo, hi

    def propagate_bools(
        self,
        l: np.ndarray,
        u: np.ndarray,
        fixes: dict[int, int],
        box: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> tuple[dict[int, int], np.ndarray, np.ndarray] | None:
        """Pin booleans whose opposite value fails interval propagation.

        Alternates box tightening with per-boolean pin tests until neither
        finds anything, so pins discovered late re-tighten the chains they
        feed.  Returns the extended pin set together with the final variable
        box, or None when the box already proves the node infeasible.  The
        test is a necessary condition only, so the node QP still decides
        feasibility of whatever survives.  A caller holding a box tighter
        than the bound rows may pass it as the starting point.
        """
        n_bool = self.problem.n_bool
        bnd = self.bound_row_offset
        nr = self.problem.n_real
        if box is not None:
            lo, hi = box[0].copy(), box[1].copy()
        else:
            lo, hi = l[bnd:].copy(), u[bnd:].copy()
        fixes = dict(fixes)
        for j, val in fixes.items():
            lo[nr + j] = float(val)
            hi[nr + j] = float(val)
        if n_bool == 0 or bnd == 0:
            if np.any(lo > hi):
                return None
            return fixes, lo, hi
        lr, ur, tol = self._row_tols()
        while True:
            tightened = self._tighten_box(lo, hi)
            if tightened is None:
                return None
            lo, hi = tightened
            pinned = lo[nr:] >= hi[nr:]
            for j in np.flatnonzero(pinned):
                fixes.setdefault(int(j), int(round(lo[nr + j])))
            state = self._interval_state_from_box(lo, hi)
            _, _, row_min, row_max = state
            if np.any(np.isfinite(ur) & (row_min > ur + tol)):
                return None
            if np.any(np.isfinite(lr) & (row_max < lr - tol)):
                return None
            new_pins = False
            changed = True
            while changed:
                changed = False
                for j in range(n_bool):
                    if j in fixes:
                        continue
                    rows = self._bool_rows(j)
                    if rows.size == 0:
                        continue
                    col = nr + j
                    bad0 = self._pin_conflicts(
                        state, col, 0.0, rows, lr, ur, tol
                    )
                    bad1 = self._pin_conflicts(
                        state, col, 1.0, rows, lr, ur, tol
                    )
                    if bad0 and bad1:
                        return None
                    if bad0 == bad1:
                        continue
                    val = 0 if bad1 else 1
                    fixes[j] = val
                    lo[col] = float(val)
                    hi[col] = float(val)
                    self._commit_pin(state, col, float(val), rows)
                    changed = True
                    new_pins = True
            if not new_pins:
                return fixes, lo, hi

    def dive_fixes(
        self,
        x: np.ndarray,
        fixes: dict[int, int],
        forced: dict[int, int] | None = None,
    ) -> tuple[dict[int, int], np.ndarray, np.ndarray, list[tuple[int, int, bool]]] | None:
        """Round every free boolean along a relaxed iterate, propagating each.

        Booleans are rounded in index order, which is time order for the
        compiled problems, and a full propagation sweep runs between pins so
        indicators forced by earlier choices are derived instead of rounded.
        Entries in `forced` override the rounding, which lets a caller replay
        the dive with selected decisions flipped.  Returns the assignment,
        the final variable box, and the decision trail as (ordinal, value,
        was_free) triples where was_free marks choices whose flip was not
        already refuted during this dive; None when some boolean conflicts
        both ways.
        """
        n_bool = self.problem.n_bool
        forced = forced or {}
        out = self.propagate_bools(*self.node_bounds(fixes), fixes)
        if out is None:
            return None
        fixes, lo, hi = out
        trail: list[tuple[int, int, bool]] = []
        while len(fixes) < n_bool:
            j = next(k for k in range(n_bool) if k not in fixes)
            if j in forced:
                val = forced[j]
                trial = dict(fixes)
                trial[j] = val
                ext = self.propagate_bools(
                    self.base_l, self.base_u, trial, box=(lo, hi)
                )
                if ext is None:
                    return None
                trail.append((j, val, False))
            else:
                val = int(round(min(max(x[self.problem.n_real + j], 0.0), 1.0)))
                trial = dict(fixes)
                trial[j] = val
                ext = self.propagate_bools(
                    self.base_l, self.base_u, trial, box=(lo, hi)
                )
                if ext is None:
                    val = 1 - val
                    trial = dict(fixes)
                    trial[j] = val
                    ext = self.propagate_bools(
                        self.base_l, self.base_u, trial, box=(lo, hi)
                    )
                    if ext is None:
                        return None
                    trail.append((j, val, False))
                else:
                    trail.append((j, val, True))
            fixes, lo, hi = ext
        return fixes, lo, hi, trail

    def _equality_only(self, l: np.ndarray, u: np.ndarray) -> bool:
        vacuous = np.isinf(l) & np.isinf(u)
        return bool(np.all((l == u) | vacuous))

    def _solve_kkt(
        self,
        A_act: np.ndarray,
        b_act: np.ndarray,
        sigma: float = 0.0,
        x_center: np.ndarray | None = None,
    ) -> tuple[np.ndarray, np.ndarray, bool] | None:
        """Solve the equality KKT system for a guessed active set.

        The final flag reports consistency: False means the rows admit no
        exact solution (an over-determined dependent subset), in which case
        the returned pair is the least-squares point, useful only to steer
        the caller's active-set repair.
        """
        n, k = self.n, A_act.shape[0]
        M = np.zeros((n + k, n + k))
        M[:n, :n] = self.P
        if sigma > 0.0:
            M[:n, :n] += sigma * np.eye(n)
        M[:n, n:] = A_act.T
        M[n:, :n] = A_act
        lin = -self.q
        if sigma > 0.0 and x_center is not None:
            lin = lin + sigma * x_center
        rhs = np.concatenate([lin, b_act])
        reg = np.concatenate([np.full(n, 1e-9), np.full(k, -1e-9)])
        try:
            lu = lu_factor(M + np.diag(reg), check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            return None
        rhs_scale = max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
        s = lu_solve(lu, rhs, check_finite=False)
        for _ in range(3):
            r = rhs - M @ s
            if float(np.max(np.abs(r), initial=0.0)) < 1e-13 * rhs_scale:
                break
            s = s + lu_solve(lu, r, check_finite=False)
        resid = float(np.max(np.abs(rhs - M @ s), initial=0.0))
        ok = True
        if resid > 1e-9 * rhs_scale:
            # dependent active rows make M singular and the regularized LU
            # solution drifts along the null space; the minimum-norm solve
            # stays on it and splits multipliers evenly over duplicate rows
            try:
                s = lstsq(M, rhs, check_finite=False, lapack_driver="gelsy")[0]
            except (np.linalg.LinAlgError, ValueError):
                return None
            ok = (
                float(np.max(np.abs(rhs - M @ s), initial=0.0))
                <= 1e-7 * rhs_scale
            )
        return s[:n], s[n:], ok

    def _try_direct(self, l: np.ndarray, u: np.ndarray) -> _QpResult | None:
        mask = l == u
        A_act = self.A[mask]
        b_act = l[mask]
        out = self._solve_kkt(A_act, b_act)
        if out is None:
            return None
        x, nu, _ = out
        y = np.zeros(self.m)
        y[mask] = nu
        kkt = self._kkt_residual(x, y, l, u)
        if kkt > 1e-8:
            # inconsistent equalities mean the subproblem is infeasible
            if A_act.size:
                xi, res, *_ = np.linalg.lstsq(A_act, b_act, rcond=None)
                gap = float(np.max(np.abs(A_act @ xi - b_act), initial=0.0))
                if gap > 1e-7 * (1.0 + float(np.max(np.abs(b_act), initial=0.0))):
                    return _QpResult(
                        SolveStatus.INFEASIBLE, x, y, math.inf, 0, math.inf
                    )
            return None
        obj = self.problem.objective(x)
        return _QpResult(SolveStatus.OPTIMAL, x, y, obj, 0, kkt)

    # -- residuals / certificates ------------------------------------------

    def _kkt_residual(
        self, x: np.ndarray, y: np.ndarray, l: np.ndarray, u: np.ndarray
    ) -> float:
        z = self.A @ x
        viol = np.maximum(l - z, 0.0) + np.maximum(z - u, 0.0)
        r_prim = float(np.max(viol, initial=0.0))
        r_dual = float(
            np.max(np.abs(self.P @ x + self.q + self.A.T @ y), initial=0.0)
        )
        # complementary slackness: multipliers on strictly inactive rows
        ineq = ~(l == u)
        active_tol = 1e-7 * (1.0 + np.abs(z))
        slack_l = np.where(np.isfinite(l), z - l, np.inf)
        slack_u = np.where(np.isfinite(u), u - z, np.inf)
        loose = (slack_l > active_tol) & (slack_u > active_tol)
        comp_bad = float(np.max(np.where(ineq & loose, np.abs(y), 0.0), initial=0.0))
        return max(r_prim, r_dual, comp_bad)

    def _primal_infeasibility_cert(
        self, dy: np.ndarray, l: np.ndarray, u: np.ndarray
    ) -> bool:
        norm = float(np.max(np.abs(dy), initial=0.0))
        if norm < 1e-14:
            return False
        d = dy / norm
        # sub-threshold mass on an infinite bound would otherwise turn the
        # support sum into inf * tiny
        d = np.where(np.abs(d) > 1e-9, d, 0.0)
        if float(np.max(np.abs(self.A.T @ d), initial=0.0)) > 1e-7:
            return False
        dp = np.maximum(d, 0.0)
        dm = np.minimum(d, 0.0)
        if np.any((dp > 0) & np.isinf(u)) or np.any((dm < 0) & np.isinf(l)):
            return False
        support = float(np.sum(np.where(dp > 0, u, 0.0) * dp)) + float(
            np.sum(np.where(dm < 0, l, 0.0) * dm)
        )
        return support < -1e-9 * max(1.0, norm)

    def _dual_infeasibility_cert(
        self, dx: np.ndarray, l: np.ndarray, u: np.ndarray
    ) -> bool:
        norm = float(np.max(np.abs(dx), initial=0.0))
        if norm < 1e-14:
            return False
        d = dx / norm
        if float(np.max(np.abs(self.P @ d), initial=0.0)) > 1e-7:
            return False
        if float(self.q @ d) > -1e-9:
            return False
        Ad = self.A @ d
        if np.any((Ad > 1e-7) & np.isfinite(u)) or np.any((Ad < -1e-7) & np.isfinite(l)):
            return False
        return True

    # -- polish -------------------------------------------------------------

    def _recover_polish(
        self, x: np.ndarray | None, l: np.ndarray, u: np.ndarray
    ) -> _QpResult | None:
        """Certify a feasible primal point whose multipliers the active-set
        rounds could not settle.

        At a degenerate vertex the active normals are rank-deficient, so any
        unconstrained multiplier solve spreads weight with arbitrary signs
        across dependent rows and sign repairs chase each other in circles.
        Solving the sign-constrained least-squares problem instead makes the
        signs correct by construction; lower rows enter negated and equality
        rows enter as a free +/- pair, so one nonnegative solve covers all
        row kinds.  A zero residual certifies optimality of ``x`` exactly.
        """
        if x is None:
            return None
        z = self.A @ x
        tol_row = 1e-8 * (1.0 + np.maximum(np.abs(l), np.abs(u)))
        tol_row = np.where(np.isfinite(tol_row), tol_row, 1e-8)
        if np.any(z < l - tol_row) or np.any(z > u + tol_row):
            return None
        eq_rows = l == u
        act_tol = 1e-6 * (
            1.0
            + np.maximum(
                np.where(np.isfinite(l), np.abs(l), 0.0),
                np.where(np.isfinite(u), np.abs(u), 0.0),
            )
        )
        act_low = (~eq_rows) & np.isfinite(l) & (z - l <= act_tol)
        act_up = (~eq_rows) & np.isfinite(u) & (u - z <= act_tol) & ~act_low
        qscale = max(1.0, float(np.max(np.abs(self.q), initial=0.0)))
        target = -(self.P @ x + self.q)
        idx_eq = np.flatnonzero(eq_rows)
        idx_up = np.flatnonzero(act_up)
        idx_low = np.flatnonzero(act_low)
        cols = [
            self.A[idx_up].T,
            -self.A[idx_low].T,
            self.A[idx_eq].T,
            -self.A[idx_eq].T,
        ]
        C = np.hstack([c for c in cols if c.size]) if any(
            c.size for c in cols
        ) else np.zeros((self.n, 0))
        mu = _nnls(C, target)
        if mu is None:
            return None
        y_new = np.zeros(self.m)
        k = 0
        y_new[idx_up] = mu[k : k + idx_up.size]
        k += idx_up.size
        y_new[idx_low] = -mu[k : k + idx_low.size]
        k += idx_low.size
        y_new[idx_eq] = mu[k : k + idx_eq.size] - mu[k + idx_eq.size :]
        stat = float(
            np.max(np.abs(self.P @ x + self.q + self.A.T @ y_new), initial=0.0)
        )
        if stat > 1e-8 * qscale:
            return None
        viol = float(
            np.max(
                np.maximum(l - z, 0.0) + np.maximum(z - u, 0.0),
                initial=0.0,
            )
        )
        kkt = max(stat, viol)
        return _QpResult(
            SolveStatus.OPTIMAL,
            x.copy(),
            y_new,
            self.problem.objective(x),
            0,
            kkt,
        )

    def _polish(
        self,
        y: np.ndarray,
        l: np.ndarray,
        u: np.ndarray,
        x_ref: np.ndarray | None = None,
        resid: float | None = None,
    ) -> _QpResult | None:
        eq_rows = l == u
        ytol = 1e-10 * max(1.0, float(np.max(np.abs(y), initial=0.0)))
        low = (~eq_rows) & (y < -ytol) & np.isfinite(l)
        up = (~eq_rows) & (y > ytol) & np.isfinite(u)
        sign_low = low.copy()
        sign_up = up.copy()
        if x_ref is not None and resid is not None:
            # near convergence the primal slacks identify weakly active rows
            # whose multipliers are still indistinguishable from zero; the
            # cap keeps a stalled iterate from flooding the set
            z_ref = self.A @ x_ref
            stol = min(max(1e-7, 10.0 * resid), 1e-3) * (
                1.0
                + np.maximum(
                    np.where(np.isfinite(l), np.abs(l), 0.0),
                    np.where(np.isfinite(u), np.abs(u), 0.0),
                )
            )
            low = low | ((~eq_rows) & np.isfinite(l) & (z_ref - l <= stol))
            up = (up | ((~eq_rows) & np.isfinite(u) & (u - z_ref <= stol))) & ~low
        tol_row = 1e-8 * (1.0 + np.maximum(np.abs(l), np.abs(u)))
        tol_row = np.where(np.isfinite(tol_row), tol_row, 1e-8)
        x = None
        y_new = None
        # overlapping big-M rows and bounds make the guessed active set
        # degenerate, so multipliers come out sign-wrong on redundant rows;
        # drop those rows and add violated ones for a few rounds.  The cost
        # is flat along unused inputs, so the equality-pinned solve needs a
        # proximal anchor to keep those directions from drifting
        sigma = 1e-6 if x_ref is not None else 0.0
        seen: set[bytes] = set()
        can_strip = True
        for _ in range(10):
            active = eq_rows | low | up
            mask = np.packbits(active).tobytes()
            if mask in seen:
                # the drop/add trajectory revisited a configuration, so it is
                # orbiting a degenerate face and will never settle
                return self._recover_polish(x, l, u)
            seen.add(mask)
            b_act = np.where(low, l, np.where(up, u, l))[active]
            out = self._solve_kkt(self.A[active], b_act, sigma=sigma, x_center=x_ref)
            if out is None:
                return None
            x, nu, consistent = out
            if not consistent:
                # the slack-augmented rows are speculative and flooding them
                # in can over-determine the system; retry once on the sign
                # evidence alone before giving up
                if can_strip and (
                    bool(np.any(low & ~sign_low)) or bool(np.any(up & ~sign_up))
                ):
                    can_strip = False
                    low = low & sign_low
                    up = up & sign_up
                    x = None
                    continue
                return None
            y_new = np.zeros(self.m)
            y_new[active] = nu
            z = self.A @ x
            # a violation far beyond the box scale means the active-set guess
            # lost independence; further rounds only refactor in circles
            worst = float(
                np.max(
                    np.maximum(l - z, 0.0)
                    + np.maximum(np.where(np.isfinite(u), z - u, 0.0), 0.0),
                    initial=0.0,
                )
            )
            if worst > 10.0 * (1.0 + float(np.max(np.abs(x), initial=0.0))):
                return None
            drop_low = low & (y_new > 1e-8)
            drop_up = up & (y_new < -1e-8)
            add_low = (~eq_rows) & ~low & np.isfinite(l) & (z < l - tol_row)
            add_up = (~eq_rows) & ~up & np.isfinite(u) & (z > u + tol_row)
            if not (
                np.any(drop_low) or np.any(drop_up) or np.any(add_low) or np.any(add_up)
            ):
                break
            if (np.any(drop_low) or np.any(drop_up)) and not bool(
                np.any((z < l - tol_row) | (z > u + tol_row))
            ):
                # a feasible point with sign-wrong multipliers on dependent
                # rows is the degenerate-vertex signature; sign-constrained
                # recovery settles it in one shot where dropping would cycle
                certified = self._recover_polish(x, l, u)
                if certified is not None:
                    return certified
            low = (low & ~drop_low) | add_low
            up = (up & ~drop_up) | add_up
        else:
            return self._recover_polish(x, l, u)
        qscale = max(1.0, float(np.max(np.abs(self.q), initial=0.0)))
        if sigma > 0.0:
            # the proximal anchor biases stationarity by sigma*(x - x_ref);
            # re-centering on the fresh solution contracts that bias away
            active = eq_rows | low | up
            b_act = np.where(low, l, np.where(up, u, l))[active]
            for _ in range(3):
                stat = float(
                    np.max(
                        np.abs(self.P @ x + self.q + self.A.T @ y_new), initial=0.0
                    )
                )
                if stat <= 1e-9 * qscale:
                    break
                out = self._solve_kkt(self.A[active], b_act, sigma=sigma, x_center=x)
                if out is None or not out[2]:
                    break
                x, nu = out[0], out[1]
                y_new = np.zeros(self.m)
                y_new[active] = nu
        z = self.A @ x
        if np.any(z < l - tol_row) or np.any(z > u + tol_row):
            return None
        if np.any(y_new[low] > 1e-8) or np.any(y_new[up] < -1e-8):
            return self._recover_polish(x, l, u)
        stat = float(
            np.max(np.abs(self.P @ x + self.q + self.A.T @ y_new), initial=0.0)
        )
        if stat > 1e-8 * qscale:
            return self._recover_polish(x, l, u)
        kkt = max(
            stat,
            float(np.max(np.maximum(l - z, 0.0) + np.maximum(z - u, 0.0), initial=0.0)),
        )
        if kkt > 1e-8 * qscale:
            return None
        obj = self.problem.objective(x)
        return _QpResult(SolveStatus.OPTIMAL, x, y_new, obj, 0, kkt)

    # -- main ADMM loop ------------------------------------------------------

    def solve(
        self,
        l: np.ndarray | None = None,
        u: np.ndarray | None = None,
        warm: tuple[np.ndarray, np.ndarray] | None = None,
        max_iter: int | None = None,
    ) -> _QpResult:
        l = self.base_l if l is None else l
        u = self.base_u if u is None else u
        cap = self.max_iter if max_iter is None else int(max_iter)

        if self._box_infeasible(l, u):
            return _QpResult(
                SolveStatus.INFEASIBLE,
                np.zeros(self.n),
                np.zeros(self.m),
                math.inf,
                0,
                math.inf,
            )

        if self._equality_only(l, u):
            direct = self._try_direct(l, u)
            if direct is not None:
                return direct

        if warm is not None:
            # tree children differ from their parent by one pinned bound, so
            # the parent's active set usually certifies the child outright
            guess = self._polish(warm[1], l, u, x_ref=warm[0], resid=1e-6)
            if guess is not None:
                return guess

        ls = self.E * l
        us = self.E * u
        if warm is not None:
            x = warm[0] / self.D
            y = (self.cost_scale * warm[1]) / self.E
        else:
            x = np.zeros(self.n)
            y = np.zeros(self.m)
        z = np.clip(self.Ab @ x, ls, us)

        rho, K_factor = self._rho_and_factor(l, u)
        best: tuple[float, np.ndarray, np.ndarray] | None = None
        it = 0
        converged_eps = 1e-7
        x_mark = x.copy()
        y_mark = y.copy()
        last_failed_sig: bytes | None = None
        prev_sig: bytes | None = None
        # failed polish attempts cost a dense factorization each, so after
        # each miss the next try is pushed out geometrically and held until
        # the iterate has made an order of magnitude of progress
        next_polish_it = 0
        polish_gap = _CHECK_EVERY
        fail_score = math.inf
        while it < cap:
            it += 1
            rhs = _SIGMA * x - self.qb + self.Ab.T @ (rho * z - y)
            xt = cho_solve(K_factor, rhs, check_finite=False)
            zt = self.Ab @ xt
            x_new = _ALPHA * xt + (1.0 - _ALPHA) * x
            w = _ALPHA * zt + (1.0 - _ALPHA) * z
            z_new = np.clip(w + y / rho, ls, us)
            y_new = y + rho * (w - z_new)
            x, z, y = x_new, z_new, y_new

            if it % _CHECK_EVERY == 0 or it == cap:
                # certificate deltas span the whole check window, which
                # averages out iterate oscillation
                dx = x - x_mark
                dy = y - y_mark
                x_mark = x.copy()
                y_mark = y.copy()
                xu = self.D * x
                yu = (self.E * y) / self.cost_scale
                zu = z / self.E
                Ax = self.A @ xu
                r_prim = float(np.max(np.abs(Ax - zu), initial=0.0))
                r_dual = float(
                    np.max(np.abs(self.P @ xu + self.q + self.A.T @ yu), initial=0.0)
                )
                p_ref = max(
                    float(np.max(np.abs(Ax), initial=0.0)),
                    float(np.max(np.abs(zu), initial=0.0)),
                    1.0,
                )
                d_ref = max(
                    float(np.max(np.abs(self.P @ xu), initial=0.0)),
                    float(np.max(np.abs(self.A.T @ yu), initial=0.0)),
                    float(np.max(np.abs(self.q), initial=0.0)),
                    1.0,
                )
                score = max(r_prim / p_ref, r_dual / d_ref)
                if _TRACE_ADMM and it % 200 == 0:
                    print(
                        f"    it={it} rp={r_prim:.2e}/{p_ref:.1e} "
                        f"rd={r_dual:.2e}/{d_ref:.1e} rho={self.rho_scale:.3g} "
                        f"eps={converged_eps:.1e}"
                    )
                if best is None or score < best[0]:
                    best = (score, xu.copy(), yu.copy(), r_prim)

                # polish infers the active set from multiplier signs, so a
                # retry is pointless until that sign pattern changes
                ytol = 1e-10 * max(1.0, float(np.max(np.abs(yu), initial=0.0)))
                sig = np.where(yu > ytol, 1, np.where(yu < -ytol, -1, 0)).astype(
                    np.int8
                ).tobytes()

                if r_prim <= converged_eps * p_ref and r_dual <= converged_eps * d_ref:
                    polished = self._polish(yu, l, u, x_ref=xu, resid=r_prim)
                    if polished is not None:
                        return _QpResult(
                            polished.status,
                            polished.x,
                            polished.y,
                            polished.objective,
                            it,
                            polished.kkt_residual,
                        )
                    last_failed_sig = sig
                    next_polish_it = it + polish_gap
                    polish_gap = min(polish_gap * 2, 400)
                    kkt = max(r_prim, r_dual)
                    if kkt <= 1e-8:
                        return _QpResult(
                            SolveStatus.OPTIMAL,
                            xu,
                            yu,
                            self.problem.objective(xu),
                            it,
                            kkt,
                        )
                    converged_eps = max(converged_eps / 10.0, 1e-12)
                elif (
                    score < 5e-2
                    and score < 0.1 * fail_score
                    and (
                        score < 5e-3
                        or sig == prev_sig
                        or it % (20 * _CHECK_EVERY) == 0
                    )
                    and sig != last_failed_sig
                    and it >= next_polish_it
                ):
                    # the active set usually settles well before the iterates
                    # do; a multiplier sign pattern that held across a whole
                    # check window is treated as settled, and polish validates
                    # itself, so attempts are safe
                    polished = self._polish(yu, l, u, x_ref=xu, resid=r_prim)
                    if polished is not None:
                        return _QpResult(
                            polished.status,
                            polished.x,
                            polished.y,
                            polished.objective,
                            it,
                            polished.kkt_residual,
                        )
                    last_failed_sig = sig
                    next_polish_it = it + polish_gap
                    polish_gap = min(polish_gap * 2, 400)
                    fail_score = score
                prev_sig = sig

                dyu = (self.E * dy) / self.cost_scale
                if self._primal_infeasibility_cert(dyu, l, u):
                    return _QpResult(
                        SolveStatus.INFEASIBLE,
                        self.D * x,
                        yu,
                        math.inf,
                        it,
                        math.inf,
                    )
                dxu = self.D * dx
                if self._dual_infeasibility_cert(dxu, l, u):
                    raise ValueError(
                        "objective appears unbounded below on the relaxation"
                    )

                # adaptive global rho re-balancing; the new scale sticks to
                # the workspace so later tree nodes start balanced, and the
                # certificates stay valid because the windowed marks reset at
                # every check, keeping each delta inside one rho regime
                if it % 100 == 0 and it < cap and r_prim > 0.0 and r_dual > 0.0:
                    ratio = math.sqrt((r_prim / p_ref) / (r_dual / d_ref))
                    ratio = min(max(ratio, 1e-3), 1e3)
                    if ratio > 2.0 or ratio < 0.5:
                        new_scale = min(max(self.rho_scale * ratio, 1e-6), 1e4)
                        if new_scale != self.rho_scale:
                            self.rho_scale = new_scale
                            rho, K_factor = self._rho_and_factor(l, u)

        assert best is not None
        _, xu, yu, best_resid = best
        polished = self._polish(yu, l, u, x_ref=xu, resid=best_resid)
        if polished is not None:
            return _QpResult(
                polished.status,
                polished.x,
                polished.y,
                polished.objective,
                cap,
                polished.kkt_residual,
            )
        return _QpResult(
            SolveStatus.ITERATION_LIMIT,
            xu,
            yu,
            self.problem.objective(xu),
            cap,
            best[0],
        )

    def node_bounds(
        self, fixes: dict[int, int]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Bounds vectors with the given boolean ordinals pinned to 0/1."""
        l = self.base_l.copy()
        u = self.base_u.copy()
        off = self.bound_row_offset + self.problem.n_real
        for j, val in fixes.items():
            l[off + j] = float(val)
            u[off + j] = float(val)
        return l, u


# ---------------------------------------------------------------------------
# pinned-boolean substitution
# ---------------------------------------------------------------------------


@dataclass
class _SubProblem:
    """Bare problem container for reduced tree nodes; skips validation."""

    n_real: int
    n_bool: int
    Q: np.ndarray
    q: np.ndarray
    c0: float
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_in: np.ndarray
    b_in: np.ndarray
    bounds: np.ndarray

    @property
    def n(self) -> int:
        return self.n_real + self.n_bool

    def objective(self, v: np.ndarray) -> float:
        return float(v @ self.Q @ v + self.q @ v + self.c0)


@dataclass
class _Reduction:
    """Index maps between a full problem and its pinned-boolean reduction."""

    sub: _SubProblem
    keep_cols: np.ndarray
    bool_map: np.ndarray
    keep_eq: np.ndarray
    keep_in: np.ndarray
    x_pins: np.ndarray
    me: int
    mi: int
    n: int

    def restrict_warm(
        self, warm: tuple[np.ndarray, np.ndarray]
    ) -> tuple[np.ndarray, np.ndarray]:
        x, y = warm
        xr = x[self.keep_cols]
        yr = np.concatenate(
            [
                y[self.keep_eq],
                y[self.me + self.keep_in],
                y[self.me + self.mi + self.keep_cols],
            ]
        )
        return xr, yr

    def lift(self, res: _QpResult) -> _QpResult:
        x = self.x_pins.copy()
        x[self.keep_cols] = res.x
        y = np.zeros(self.me + self.mi + self.n)
        ke = len(self.keep_eq)
        ki = len(self.keep_in)
        y[self.keep_eq] = res.y[:ke]
        y[self.me + self.keep_in] = res.y[ke : ke + ki]
        y[self.me + self.mi + self.keep_cols] = res.y[ke + ki :]
        return _QpResult(
            res.status, x, y, res.objective, res.iterations, res.kkt_residual
        )


def _reduce_problem(
    problem: MiqpProblem,
    fixes: dict[int, int],
    box: tuple[np.ndarray, np.ndarray] | None = None,
) -> _Reduction | None:
    """Substitute pinned booleans out of the problem as constants.

    Rows whose remaining support is empty are checked and dropped, rows with
    a single remaining real variable fold into that variable's bounds, and
    inequality rows satisfied everywhere on the variable box are dropped.
    An optional propagated box narrows the kept columns' bounds, which both
    trims more redundant rows and speeds up the subproblem solve.  Returns
    None when a fold proves the node infeasible.  Substitution keeps the
    solver off the degenerate corners that pinned big-M rows create.
    """
    n = problem.n
    nr = problem.n_real
    pin_mask = np.zeros(n, dtype=bool)
    x_pins = np.zeros(n)
    for j, val in fixes.items():
        pin_mask[nr + j] = True
        x_pins[nr + j] = float(val)
    keep_cols = np.flatnonzero(~pin_mask)
    pin_cols = np.flatnonzero(pin_mask)
    bool_map = np.array(
        [j for j in range(problem.n_bool) if j not in fixes], dtype=np.intp
    )

    Q = problem.Q
    Q_red = Q[np.ix_(keep_cols, keep_cols)]
    pv = x_pins[pin_cols]
    q_red = problem.q[keep_cols] + 2.0 * (Q[np.ix_(keep_cols, pin_cols)] @ pv)
    c0_red = problem.c0 + float(pv @ Q[np.ix_(pin_cols, pin_cols)] @ pv) + float(
        problem.q[pin_cols] @ pv
    )
    bounds = problem.bounds[keep_cols].copy()
    lo = bounds[:, 0]
    hi = bounds[:, 1]
    if box is not None:
        np.maximum(lo, box[0][keep_cols], out=lo)
        np.minimum(hi, box[1][keep_cols], out=hi)
        if np.any(lo > hi):
            return None

    def shifted(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if not len(b):
            return A[:, keep_cols], b
        return A[:, keep_cols], b - A[:, pin_cols] @ pv

    Ae, be = shifted(problem.A_eq, problem.b_eq)
    Ai, bi = shifted(problem.A_in, problem.b_in)

    def row_tol(b: np.ndarray) -> np.ndarray:
        return 1e-9 * (1.0 + np.abs(b))

    # empty rows are pure constants after substitution
    if len(be):
        nnz_e = np.count_nonzero(Ae, axis=1)
        bad = (nnz_e == 0) & (np.abs(be) > row_tol(be))
        if np.any(bad):
            return None
    else:
        nnz_e = np.zeros(0, dtype=np.intp)
    if len(bi):
        nnz_i = np.count_nonzero(Ai, axis=1)
        bad = (nnz_i == 0) & (bi < -row_tol(bi))
        if np.any(bad):
            return None
    else:
        nnz_i = np.zeros(0, dtype=np.intp)

    drop_eq = nnz_e == 0
    drop_in = nnz_i == 0

    # singleton rows over a real variable become bounds; booleans keep their
    # rows since node propagation already extracted any forced value
    for r in np.flatnonzero(nnz_e == 1):
        c = int(np.flatnonzero(Ae[r])[0])
        if c >= nr:
            continue
        val = be[r] / Ae[r, c]
        tol = 1e-9 * (1.0 + abs(val))
        if val > hi[c] + tol or val < lo[c] - tol:
            return None
        lo[c] = max(lo[c], min(val, hi[c]))
        hi[c] = min(hi[c], max(val, lo[c]))
        drop_eq[r] = True
    for r in np.flatnonzero(nnz_i == 1):
        c = int(np.flatnonzero(Ai[r])[0])
        if c >= nr:
            continue
        a = Ai[r, c]
        val = bi[r] / a
        tol = 1e-9 * (1.0 + abs(val))
        if a > 0:
            if val < lo[c] - tol:
                return None
            hi[c] = min(hi[c], max(val, lo[c]))
        else:
            if val > hi[c] + tol:
                return None
            lo[c] = max(lo[c], min(val, hi[c]))
        drop_in[r] = True

    if np.any(lo > hi):
        return None

    # inequality rows satisfied over the whole box add nothing
    live = np.flatnonzero(~drop_in)
    if live.size:
        Al = Ai[live]
        with np.errstate(invalid="ignore"):
            row_max = np.sum(
                np.where(Al > 0, Al * hi, 0.0) + np.where(Al < 0, Al * lo, 0.0),
                axis=1,
            )
        slack = row_max <= bi[live] + row_tol(bi[live])
        drop_in[live[slack]] = True

    keep_eq = np.flatnonzero(~drop_eq)
    keep_in = np.flatnonzero(~drop_in)
    sub = _SubProblem(
        n_real=nr,
        n_bool=len(bool_map),
        Q=Q_red,
        q=q_red,
        c0=c0_red,
        A_eq=Ae[keep_eq],
        b_eq=be[keep_eq],
        A_in=Ai[keep_in],
        b_in=bi[keep_in],
        bounds=bounds,
    )
    return _Reduction(
        sub=sub,
        keep_cols=keep_cols,
        bool_map=bool_map,
        keep_eq=keep_eq,
        keep_in=keep_in,
        x_pins=x_pins,
        me=len(problem.b_eq),
        mi=len(problem.b_in),
        n=n,
    )


# ---------------------------------------------------------------------------
# public solvers
# ---------------------------------------------------------------------------


def _validate_fixed(problem: MiqpProblem, fixed: dict[int, int] | None) -> dict[int, int]:
    out: dict[int, int] = {}
    if not fixed:
        return out
    for j, val in fixed.items():
        j = int(j)
        if not 0 <= j < problem.n_bool:
            raise ValueError(
                f"fixed boolean index {j} out of range [0, {problem.n_bool})"
            )
        if val not in (0, 1):
            raise ValueError(f"fixed boolean {j} must be 0 or 1, got {val!r}")
        out[j] = int(val)
    return out


def solve_qp_relaxation(
    problem: MiqpProblem,
    fixed: dict[int, int] | None = None,
    max_iter: int = 4000,
) -> MiqpSolution:
    """Solve the convex relaxation; booleans not in ``fixed`` live in [0, 1]."""
    t0 = time.perf_counter()
    fixes = _validate_fixed(problem, fixed)
    ws = _QpWorkspace(problem, max_iter=max_iter)
    l, u = ws.node_bounds(fixes)
    res = ws.solve(l, u)
    stats = SolveStats(nodes=0, qp_solves=1, wall_time=time.perf_counter() - t0)
    if res.status == SolveStatus.INFEASIBLE:
        return MiqpSolution(SolveStatus.INFEASIBLE, None, math.inf, stats)
    return MiqpSolution(res.status, res.x, res.objective, stats)


def solve_oracle(
    problem: MiqpProblem,
    enumeration_cap: int = 20,
    max_qp_iter: int = 4000,
) -> MiqpSolution:
    """Enumerate every boolean assignment and take the best leaf QP."""
    t0 = time.perf_counter()
    k = problem.n_bool
    if k > enumeration_cap:
        raise ValueError(
            f"n_bool={k} exceeds the enumeration cap {enumeration_cap}"
        )
    ws = _QpWorkspace(problem, max_iter=max_qp_iter)
    stats = SolveStats()
    best_obj = math.inf
    best_values: np.ndarray | None = None
    limit_hit = False
    warm: tuple[np.ndarray, np.ndarray] | None = None
    for assignment in range(2**k):
        fixes = {j: (assignment >> j) & 1 for j in range(k)}
        l, u = ws.node_bounds(fixes)
        res = ws.solve(l, u, warm=warm)
        stats.qp_solves += 1
        if res.status == SolveStatus.ITERATION_LIMIT:
            limit_hit = True
            continue
        if res.status == SolveStatus.INFEASIBLE:
            continue
        warm = (res.x, res.y)
        if res.objective < best_obj - 0.0:
            values = res.x.copy()
            for j, val in fixes.items():
                values[problem.n_real + j] = float(val)
            best_obj = res.objective
            best_values = values
    stats.wall_time = time.perf_counter() - t0
    if limit_hit:
        return MiqpSolution(SolveStatus.ITERATION_LIMIT, best_values, best_obj, stats)
    if best_values is None:
        return MiqpSolution(SolveStatus.INFEASIBLE, None, math.inf, stats)
    return MiqpSolution(SolveStatus.OPTIMAL, best_values, best_obj, stats)


def solve_bnb(
    problem: MiqpProblem,
    options: BnbOptions | None = None,
) -> MiqpSolution:
    """Best-first branch and bound over the boolean variables.

    Nodes are keyed by their parent's relaxation objective (a valid lower
    bound) and solved lazily on pop; branching picks the most fractional
    boolean with lowest-index tie-breaking.  Every Optimal result is
    re-checked by :func:`check_solution` before it is returned.
    """
    opts = options or BnbOptions()
    t0 = time.perf_counter()
    stats = SolveStats()
    ws = _QpWorkspace(problem, max_iter=opts.max_qp_iter)
    prune_margin = 0.1 * opts.tol_gap

    incumbent_obj = math.inf
    incumbent: np.ndarray | None = None
    # a leaf the solver could neither certify nor refute breaks the search
    # tree's coverage; interior iteration caps do not, since both children
    # of a capped node are queued
    abandoned = False

    rho_carry = [float(ws.rho_scale)]

    def leaf_solve(
        fixes: dict[int, int],
        warm: tuple[np.ndarray, np.ndarray] | None,
        box: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> _QpResult:
        stats.qp_solves += 1
        if not fixes:
            res = ws.solve(warm=warm)
            rho_carry[0] = float(ws.rho_scale)
            return res
        # substituting the pins out keeps the subproblem off the degenerate
        # big-M corners that make the full-space iteration crawl
        red = _reduce_problem(problem, fixes, box)
        if red is None:
            return _QpResult(
                SolveStatus.INFEASIBLE,
                np.zeros(problem.n),
                np.zeros(ws.m),
                math.inf,
                0,
                math.inf,
            )
        # the balanced rho found by one node is the best starting guess for
        # the next, so the adapted scale rides along the whole tree
        sub_ws = _QpWorkspace(
            red.sub, max_iter=opts.max_qp_iter, rho_scale=rho_carry[0]
        )
        sub_warm = red.restrict_warm(warm) if warm is not None else None
        res = red.lift(sub_ws.solve(warm=sub_warm))
        rho_carry[0] = float(sub_ws.rho_scale)
        return res

    def try_incumbent(values: np.ndarray, objective: float) -> None:
        nonlocal incumbent_obj, incumbent
        if objective < incumbent_obj:
            incumbent_obj = objective
            incumbent = values

    def certify_leaf(
        fixes: dict[int, int],
        res: _QpResult,
    ) -> None:
        nonlocal abandoned
        values = res.x.copy()
        snap_ok = res.status == SolveStatus.OPTIMAL
        for j in range(problem.n_bool):
            idx = problem.n_real + j
            target = fixes.get(j)
            if target is None:
                target = int(round(values[idx]))
            if abs(values[idx] - target) > 1e-12:
                snap_ok = False
            values[idx] = float(target)
        if not snap_ok:
            if res.status != SolveStatus.OPTIMAL and len(fixes) == problem.n_bool:
                # the unconverged solve already had every boolean pinned, so
                # re-solving the identical QP proves nothing about this leaf
                abandoned = True
                return
            # re-solve with every boolean pinned so the certified objective
            # is exactly the leaf QP's optimum
            full = {
                j: int(round(res.x[problem.n_real + j]))
                for j in range(problem.n_bool)
            }
            full.update(fixes)
            leaf = leaf_solve(full, warm=(res.x, res.y))
            if leaf.status == SolveStatus.ITERATION_LIMIT:
                abandoned = True
                return
            if leaf.status != SolveStatus.OPTIMAL:
                return
            values = leaf.x.copy()
            for j, val in full.items():
                values[problem.n_real + j] = float(val)
            try_incumbent(values, leaf.objective)
            return
        try_incumbent(values, problem.objective(values))

    # root presolve: interval propagation pins booleans that only have one
    # viable value, which covers indicators determined by the folded initial
    # state before any branching happens
    presolved = ws.propagate_bools(ws.base_l, ws.base_u, {})
    if presolved is None:
        stats.wall_time = time.perf_counter() - t0
        return MiqpSolution(SolveStatus.INFEASIBLE, None, math.inf, stats)
    root_fixes, root_lo, root_hi = presolved
    root_box = (root_lo, root_hi)

    root = leaf_solve(root_fixes, None)
    stats.nodes += 1
    if root.status == SolveStatus.INFEASIBLE:
        stats.wall_time = time.perf_counter() - t0
        return MiqpSolution(SolveStatus.INFEASIBLE, None, math.inf, stats)
    if problem.n_bool == 0:
        stats.wall_time = time.perf_counter() - t0
        status = (
            SolveStatus.ITERATION_LIMIT
            if root.status == SolveStatus.ITERATION_LIMIT
            else SolveStatus.OPTIMAL
        )
        return MiqpSolution(status, root.x, root.objective, stats)

    # dive heuristic at the root for an early incumbent: round along the
    # relaxed trajectory in time order and box-check every pin; a dive that
    # passed every interval check can still be disproved by the leaf QP, in
    # which case the dive is replayed with the deepest decision that was a
    # genuinely free choice flipped and locked
    forced: dict[int, int] = {}
    for _ in range(6):
        dived = ws.dive_fixes(root.x, root_fixes, forced)
        if dived is None:
            break
        dfix, dlo, dhi, trail = dived
        heur = leaf_solve(dfix, warm=(root.x, root.y))
        if heur.status == SolveStatus.OPTIMAL:
            values = heur.x.copy()
            for j, val in dfix.items():
                values[problem.n_real + j] = float(val)
            try_incumbent(values, heur.objective)
            break
        if heur.status != SolveStatus.INFEASIBLE:
            break
        flip = next(
            (
                (j, v)
                for j, v, free in reversed(trail)
                if free and j not in forced
            ),
            None,
        )
        if flip is None:
            break
        forced[flip[0]] = 1 - flip[1]

    def prune_cut() -> float:
        # bounds at or above this cannot improve the incumbent by more than
        # the configured gap, absolute plus relative
        return (
            incumbent_obj
            - prune_margin
            - opts.tol_gap_rel * abs(incumbent_obj)
        )

    def record_prune(bound: float) -> None:
        stats.pruned_nodes += 1
        slack = bound - (
            incumbent_obj
            - opts.tol_gap
            - opts.tol_gap_rel * abs(incumbent_obj)
        )
        if slack < stats.min_prune_slack:
            stats.min_prune_slack = slack

    def frac_index(x: np.ndarray, fixes: dict[int, int]) -> int | None:
        b = np.clip(x[problem.n_real :], 0.0, 1.0)
        frac = np.abs(b - np.round(b))
        if fixes:
            frac[list(fixes)] = 0.0
        cand = np.nonzero(frac > opts.tol_int)[0]
        if cand.size == 0:
            return None
        # prefer the earliest clearly ambiguous boolean; index order is time
        # order, so this settles early decisions the rest of the horizon
        # hinges on instead of chasing the most fractional entry around
        strong = cand[frac[cand] > 0.1]
        return int(strong[0]) if strong.size else int(cand[0])

    seq = 0
    Box = tuple[np.ndarray, np.ndarray]
    Node = tuple[float, int, dict[int, int], tuple[np.ndarray, np.ndarray], Box]
    heap: list[Node] = []
    pending: tuple[float, dict[int, int], tuple[np.ndarray, np.ndarray], Box] | None
    pending = None

    def branch(
        res: _QpResult, fixes: dict[int, int], bound: float, box: Box
    ) -> None:
        # push the rounding-disfavored child, plunge into the favored one
        nonlocal seq, pending
        j = frac_index(res.x, fixes)
        if j is None:
            certify_leaf(fixes, res)
            return
        pref = int(round(min(max(res.x[problem.n_real + j], 0.0), 1.0)))
        other = dict(fixes)
        other[j] = 1 - pref
        heapq.heappush(heap, (bound, seq, other, (res.x, res.y), box))
        seq += 1
        plunged = dict(fixes)
        plunged[j] = pref
        pending = (bound, plunged, (res.x, res.y), box)

    if root.status == SolveStatus.OPTIMAL:
        branch(root, root_fixes, root.objective, root_box)
    else:
        # unresolved root: branch on its best iterate with an uninformative bound
        j = frac_index(root.x, root_fixes)
        if j is None:
            certify_leaf(root_fixes, root)
        else:
            for val in (0, 1):
                child = dict(root_fixes)
                child[j] = val
                heapq.heappush(
                    heap, (-math.inf, seq, child, (root.x, root.y), root_box)
                )
                seq += 1

    capped = False
    while heap or pending is not None:
        if pending is not None:
            bound, fixes, warm, pbox = pending
            pending = None
            if bound >= prune_cut():
                record_prune(bound)
                continue
        else:
            bound, _, fixes, warm, pbox = heapq.heappop(heap)
            if bound >= prune_cut():
                # best-first order means every remaining heap entry is
                # dominated too; a pruned plunge node proves nothing
                record_prune(bound)
                while heap:
                    b = heapq.heappop(heap)[0]
                    record_prune(b)
                continue
        if stats.nodes >= opts.node_cap:
            capped = True
            break
        # the parent's propagated box is valid for the child and already
        # tight, so propagation starts from it instead of the raw bounds
        extended = ws.propagate_bools(ws.base_l, ws.base_u, fixes, box=pbox)
        if extended is None:
            continue
        fixes, nlo, nhi = extended
        nbox = (nlo, nhi)
        res = leaf_solve(fixes, warm)
        stats.nodes += 1
        if res.status == SolveStatus.INFEASIBLE:
            continue
        if res.status == SolveStatus.ITERATION_LIMIT:
            # the unconverged objective is no bound and its iterate makes a
            # poor guide, so both children queue up with the parent's bound
            # instead of plunging after a mirage; coverage stays complete,
            # so this alone does not degrade the final status
            jf = frac_index(res.x, fixes)
            if jf is None:
                certify_leaf(fixes, res)
                continue
            for val in (0, 1):
                child = dict(fixes)
                child[jf] = val
                heapq.heappush(heap, (bound, seq, child, (res.x, res.y), nbox))
                seq += 1
            continue
        if res.objective >= prune_cut():
            record_prune(res.objective)
            continue
        branch(res, fixes, res.objective, nbox)

    stats.wall_time = time.perf_counter() - t0
    if incumbent is None:
        if abandoned or capped:
            return MiqpSolution(SolveStatus.ITERATION_LIMIT, None, math.inf, stats)
        return MiqpSolution(SolveStatus.INFEASIBLE, None, math.inf, stats)
    ok, violations = check_solution(problem, incumbent, tol=1e-6)
    if not ok:
        raise ValueError(
            "branch-and-bound produced an infeasible incumbent: "
            + "; ".join(violations[:5])
        )
    status = SolveStatus.OPTIMAL
    if abandoned or capped:
        status = SolveStatus.ITERATION_LIMIT
    return MiqpSolution(status, incumbent, incumbent_obj, stats)
