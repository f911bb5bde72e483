"""Equality-constrained l1 minimization and exact recovery checks.

``l1_minimize`` solves ``min ||z||_1 s.t. Az = y`` through the
split-variable linear program ``z = u - v, u, v >= 0`` handed to HiGHS
(dual simplex, deterministic for fixed inputs), followed by a
support-restricted least-squares polish.  ``l1_oracle`` is the
independent desk-scale ground truth: it enumerates every basic solution
of the same program and keeps the feasible minimum, so the two routes
share nothing but the problem statement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .ensembles import MeasurementMatrix, SparseSignal
from .errors import DimensionError, InputError, NumericalError, SizeCapError

ORACLE_MAX_N = 12
ORACLE_MAX_M = 10

# Ties in the oracle: objectives within _TIE_RTOL*max(1, best) count as
# tied, solutions within _DEDUP_ATOL in the sup norm count as identical.
_TIE_RTOL = 1e-9
_DEDUP_ATOL = 1e-9


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of one l1 minimization."""

    solution: np.ndarray = field(repr=False)
    objective: float
    feasibility_residual: float
    iterations: int
    status: str  # "optimal" | "max_iter" | "infeasible"


@dataclass(frozen=True)
class OracleResult(RecoveryResult):
    """Recovery result plus the deduplicated set of tied optima."""

    tied_solutions: tuple = field(default=(), repr=False)

    @property
    def is_unique(self) -> bool:
        return len(self.tied_solutions) == 1


def _entries(matrix) -> np.ndarray:
    if isinstance(matrix, MeasurementMatrix):
        return matrix.entries
    a = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if a.ndim != 2:
        raise DimensionError("matrix must be 2-d")
    return a


def default_feas_tol(y: np.ndarray) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(y), initial=0.0)))


def _residual_inf(entries: np.ndarray, z: np.ndarray, y: np.ndarray) -> float:
    return float(np.max(np.abs(entries @ z - y), initial=0.0))


def _polish(entries: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Re-solve on the detected support by least squares.

    Accepted only if it does not worsen feasibility and does not increase
    the objective; this removes simplex-level rounding from exact-recovery
    comparisons without changing which solution was found.
    """
    thresh = 1e-9 * max(1.0, float(np.max(np.abs(z), initial=0.0)))
    supp = np.nonzero(np.abs(z) > thresh)[0]
    if supp.size == 0 or supp.size > entries.shape[0]:
        return z
    zs, *_ = np.linalg.lstsq(entries[:, supp], y, rcond=None)
    polished = np.zeros_like(z)
    polished[supp] = zs
    obj_old = np.abs(z).sum()
    if (_residual_inf(entries, polished, y) <= _residual_inf(entries, z, y) + 1e-15
            and np.abs(polished).sum() <= obj_old + 1e-12 * max(1.0, obj_old)):
        return polished
    return z


def l1_minimize(matrix, y, feas_tol: float | None = None, opt_tol: float = 1e-8,
                max_iter: int | None = None) -> RecoveryResult:
    """Solve min ||z||_1 subject to Az = y.

    Parameters
    ----------
    matrix : MeasurementMatrix or array_like
    y : array_like, length m
    feas_tol : float, optional
        Feasibility threshold on ||Az - y||_inf; defaults to
        ``1e-9 * (1 + ||y||_inf)``.
    opt_tol : float
        Relative optimality slack the result is contracted to satisfy
        (validated against the oracle at desk scale).
    max_iter : int, optional
        Simplex iteration cap; hitting it yields status ``max_iter``.

    Returns
    -------
    RecoveryResult
        status ``optimal`` guarantees ``feasibility_residual <= feas_tol``;
        ``y`` outside the column span (beyond feas_tol) gives status
        ``infeasible``.
    """
    entries = _entries(matrix)
    y = np.asarray(y, dtype=np.float64).ravel()
    m, n = entries.shape
    if y.size != m:
        raise DimensionError(f"y has length {y.size}, expected {m}")
    if not np.isfinite(entries).all() or not np.isfinite(y).all():
        raise InputError("matrix and y must be finite")
    if feas_tol is None:
        feas_tol = default_feas_tol(y)
    if feas_tol <= 0 or opt_tol <= 0:
        raise InputError("tolerances must be positive")

    # Project y onto range(A): keeps the equality LP exactly feasible and
    # decides infeasibility up front.
    z_ls, *_ = np.linalg.lstsq(entries, y, rcond=None)
    y_span = entries @ z_ls
    if np.max(np.abs(y_span - y), initial=0.0) > feas_tol:
        zero = np.zeros(n)
        return RecoveryResult(zero, 0.0, _residual_inf(entries, zero, y), 0, "infeasible")

    cost = np.ones(2 * n)
    a_eq = np.hstack([entries, -entries])
    options = {"presolve": True}
    if max_iter is not None:
        options["maxiter"] = int(max_iter)
    res = linprog(cost, A_eq=a_eq, b_eq=y_span, bounds=(0, None),
                  method="highs-ds", options=options)

    if res.status == 1:
        z = res.x[:n] - res.x[n:] if res.x is not None else np.zeros(n)
        return RecoveryResult(z, float(np.abs(z).sum()),
                              _residual_inf(entries, z, y), int(res.nit), "max_iter")
    if res.status == 2:
        zero = np.zeros(n)
        return RecoveryResult(zero, 0.0, _residual_inf(entries, zero, y),
                              int(res.nit), "infeasible")
    if res.status != 0:
        raise NumericalError(f"LP solver failed: {res.message}")

    z = _polish(entries, y, res.x[:n] - res.x[n:])
    residual = _residual_inf(entries, z, y)
    if residual > feas_tol:
        raise NumericalError(
            f"optimal LP solution violates feasibility tolerance ({residual:.3e})")
    return RecoveryResult(z, float(np.abs(z).sum()), residual, int(res.nit), "optimal")


def l1_oracle(matrix, y, feas_tol: float | None = None) -> OracleResult:
    """Exact l1 optimum by enumerating basic solutions (desk scale only).

    Every vertex of ``{(u, v) >= 0 : A(u - v) = y}`` is supported on a set
    of linearly independent columns of A extendable to rank(A) columns, so
    enumerating all rank-sized column subsets, solving each square-ish
    system, and keeping the feasible minimum is exhaustive.  Ties are
    reported; the returned solution is the lexicographically smallest.
    """
    entries = _entries(matrix)
    y = np.asarray(y, dtype=np.float64).ravel()
    m, n = entries.shape
    if n > ORACLE_MAX_N or m > ORACLE_MAX_M:
        raise SizeCapError(f"oracle caps are n <= {ORACLE_MAX_N}, m <= {ORACLE_MAX_M}")
    if y.size != m:
        raise DimensionError(f"y has length {y.size}, expected {m}")
    if feas_tol is None:
        feas_tol = default_feas_tol(y)

    rank = int(np.linalg.matrix_rank(entries))
    candidates = []
    if rank == 0:
        if np.max(np.abs(y), initial=0.0) <= feas_tol:
            candidates.append(np.zeros(n))
    else:
        for subset in combinations(range(n), rank):
            cols = entries[:, subset]
            sol, _, col_rank, _ = np.linalg.lstsq(cols, y, rcond=None)
            if col_rank < rank:
                continue
            if np.max(np.abs(cols @ sol - y), initial=0.0) <= feas_tol:
                z = np.zeros(n)
                z[list(subset)] = sol
                candidates.append(z)

    if not candidates:
        zero = np.zeros(n)
        return OracleResult(zero, 0.0, _residual_inf(entries, zero, y), 0,
                            "infeasible", ())

    objectives = np.array([np.abs(z).sum() for z in candidates])
    best = objectives.min()
    tied = [z for z, o in zip(candidates, objectives)
            if o <= best + _TIE_RTOL * max(1.0, best)]
    distinct: list[np.ndarray] = []
    for z in tied:
        if not any(np.max(np.abs(z - w)) <= _DEDUP_ATOL for w in distinct):
            distinct.append(z)
    distinct.sort(key=lambda z: tuple(z))
    winner = distinct[0]
    return OracleResult(winner, float(np.abs(winner).sum()),
                        _residual_inf(entries, winner, y), len(candidates),
                        "optimal", tuple(distinct))


def check_exact_recovery(result: RecoveryResult, signal: SparseSignal,
                         rec_tol: float = 1e-6) -> bool:
    """True iff the solve reproduced the signal: ||z - x||_2 <= rec_tol * max(1, ||x||_2)."""
    x = signal.dense()
    if result.solution.shape != x.shape:
        raise DimensionError("solution and signal dimensions differ")
    return float(np.linalg.norm(result.solution - x)) <= rec_tol * max(
        1.0, float(np.linalg.norm(x)))
