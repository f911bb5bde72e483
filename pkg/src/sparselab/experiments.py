"""Monte Carlo experiments: concentration of ||Ax||_1 and recovery phase
diagrams with threshold-law fitting.

Per-trial randomness is drawn from streams keyed by
``(master_seed, tag, cell..., trial)``, so results are bit-reproducible
and independent of scheduling order.  No constants are asserted from
theory: experiments report empirical means/rates and fitted coefficients.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ensembles import (EntryDistribution, measure, sample_matrix,
                        sample_sparse_signal)
from .errors import InputError, ParameterError, UnderdeterminedError
from .rng import TAG_CONCENTRATION, TAG_PHASE, derive_seed
from .solver import check_exact_recovery, l1_minimize


@dataclass(frozen=True)
class ConcentrationReport:
    """Distribution of ||Ax||_1 for a fixed unit probe across matrix draws.

    ``exceedance[i, j]`` is the fraction of trials at ``m_values[i]``
    falling outside ``[lower_ref - delta_values[j], 1 + delta_values[j]]``,
    where ``lower_ref = 1 / (16 * c3**2)`` from the probe law's moment
    constant.
    """

    dist: EntryDistribution
    probe: np.ndarray = field(repr=False)
    m_values: tuple
    delta_values: tuple
    trials: int
    seed: int
    means: np.ndarray
    stds: np.ndarray
    mins: np.ndarray
    maxs: np.ndarray
    exceedance: np.ndarray = field(repr=False)
    lower_ref: float


def concentration_experiment(probe, dist: EntryDistribution, m_values,
                             delta_values, trials: int, seed: int,
                             ) -> ConcentrationReport:
    """Sample ||Ax||_1 statistics for each m in ``m_values``.

    The probe must be a unit vector (to 1e-12); each trial draws a fresh
    matrix from its own stream ``(seed, m, trial)``.
    """
    probe = np.asarray(probe, dtype=np.float64).ravel()
    if abs(float(np.linalg.norm(probe)) - 1.0) > 1e-12:
        raise InputError("probe must have unit l2 norm")
    if trials < 100:
        raise ParameterError("need at least 100 trials")
    m_values = tuple(int(m) for m in m_values)
    delta_values = tuple(float(d) for d in delta_values)
    if any(m < 1 for m in m_values):
        raise ParameterError("m values must be positive")
    n = probe.size
    lower_ref = 1.0 / (16.0 * dist.moment_constant_c3 ** 2)

    means, stds, mins, maxs = [], [], [], []
    exceedance = np.zeros((len(m_values), len(delta_values)))
    for i, m in enumerate(m_values):
        norms = np.empty(trials)
        for t in range(trials):
            child = derive_seed(seed, TAG_CONCENTRATION, m, t)
            matrix = sample_matrix(m, n, dist, child)
            norms[t] = float(np.abs(matrix.entries @ probe).sum())
        means.append(norms.mean())
        stds.append(norms.std(ddof=1))
        mins.append(norms.min())
        maxs.append(norms.max())
        for j, delta in enumerate(delta_values):
            outside = (norms < lower_ref - delta) | (norms > 1.0 + delta)
            exceedance[i, j] = outside.mean()
    return ConcentrationReport(
        dist=dist, probe=probe, m_values=m_values, delta_values=delta_values,
        trials=trials, seed=int(seed), means=np.array(means),
        stds=np.array(stds), mins=np.array(mins), maxs=np.array(maxs),
        exceedance=exceedance, lower_ref=lower_ref)


def std_scaling_check(report: ConcentrationReport) -> bool:
    """True iff std(m) tracks m**(-1/2) within a factor of 2 between
    consecutive m values (for a quadrupling, ratio in [0.25, 1.0] with
    target 0.5)."""
    m = report.m_values
    if len(m) < 3 or max(m) < 8 * min(m):
        raise ParameterError("need >= 3 m values spanning at least an 8x range")
    if (report.stds <= 0).any() or not np.isfinite(report.stds).all():
        raise InputError("degenerate (zero or non-finite) std values")
    for i in range(len(m) - 1):
        expected = math.sqrt(m[i] / m[i + 1])
        ratio = report.stds[i + 1] / report.stds[i]
        if not expected / 2.0 <= ratio <= expected * 2.0:
            return False
    return True


@dataclass(frozen=True)
class PhaseDiagram:
    """Empirical recovery probabilities over an (s, m) grid."""

    n: int
    s_grid: tuple
    m_grid: tuple
    success: np.ndarray = field(repr=False)
    trials_per_cell: int
    dist: EntryDistribution
    value_law: str
    master_seed: int


def _phase_cell(n, s, m, dist, value_law, trials, master_seed, rec_tol):
    hits = 0
    for t in range(trials):
        mat_seed = derive_seed(master_seed, TAG_PHASE, s, m, t, 0)
        sig_seed = derive_seed(master_seed, TAG_PHASE, s, m, t, 1)
        matrix = sample_matrix(m, n, dist, mat_seed)
        signal = sample_sparse_signal(n, s, value_law, sig_seed)
        result = l1_minimize(matrix, measure(matrix, signal))
        if result.status == "optimal" and check_exact_recovery(result, signal, rec_tol):
            hits += 1
    return hits / trials


def phase_diagram(n: int, s_grid, m_grid, dist: EntryDistribution,
                  value_law: str, trials_per_cell: int, master_seed: int,
                  rec_tol: float = 1e-6, threads: int | None = None,
                  ) -> PhaseDiagram:
    """Fraction of exact recoveries per (s, m) cell.

    Each trial draws an independent (matrix, signal) pair from streams
    keyed by ``(master_seed, s, m, trial)``; the success matrix does not
    depend on evaluation order, so cells may run on ``threads`` workers
    (default from SPARSELAB_THREADS, else serial).
    """
    s_grid = tuple(int(s) for s in s_grid)
    m_grid = tuple(int(m) for m in m_grid)
    if not s_grid or not m_grid:
        raise ParameterError("grids must be nonempty")
    if any(np.diff(s_grid) <= 0) or any(np.diff(m_grid) <= 0):
        raise ParameterError("grids must be strictly ascending")
    if trials_per_cell < 1:
        raise ParameterError("trials_per_cell must be positive")
    if threads is None:
        threads = int(os.environ.get("SPARSELAB_THREADS", "1"))

    success = np.zeros((len(s_grid), len(m_grid)))
    cells = [(i, j) for i in range(len(s_grid)) for j in range(len(m_grid))]

    def work(cell):
        i, j = cell
        return i, j, _phase_cell(n, s_grid[i], m_grid[j], dist, value_law,
                                 trials_per_cell, master_seed, rec_tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, j, rate in pool.map(work, cells):
                success[i, j] = rate
    else:
        for cell in cells:
            i, j, rate = work(cell)
            success[i, j] = rate
    return PhaseDiagram(n=n, s_grid=s_grid, m_grid=m_grid, success=success,
                        trials_per_cell=trials_per_cell, dist=dist,
                        value_law=value_law, master_seed=int(master_seed))


@dataclass(frozen=True)
class ThresholdFit:
    """Least-squares fit of m*(s) = a * s * ln(b * n / s)."""

    a: float
    b: float
    contour_level: float
    residual: float
    s_points_used: tuple
    m_star: tuple

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and math.isfinite(self.residual)):
            raise ParameterError("fit must have a > 0, b > 0, finite residual")


def contour_crossings(diagram: PhaseDiagram, contour_level: float = 0.5):
    """Per-s first upward crossing of the success contour, linearly
    interpolated in m.  Rows that never reach the level (or start above
    it, so the crossing lies left of the grid) are dropped."""
    if not 0.0 < contour_level < 1.0:
        raise ParameterError("contour level must lie in (0, 1)")
    s_used, m_star = [], []
    m = np.asarray(diagram.m_grid, dtype=np.float64)
    for i, s in enumerate(diagram.s_grid):
        row = diagram.success[i]
        if row[0] >= contour_level:
            continue
        above = np.nonzero(row >= contour_level)[0]
        if above.size == 0:
            continue
        j = int(above[0])
        frac = (contour_level - row[j - 1]) / (row[j] - row[j - 1])
        s_used.append(s)
        m_star.append(float(m[j - 1] + frac * (m[j] - m[j - 1])))
    return s_used, m_star


def _fit_a_for_b(s, m_star, n, b):
    g = s * np.log(b * n / s)
    a = float((m_star * g).sum() / (g * g).sum())
    resid = float(np.sqrt(((m_star - a * g) ** 2).mean()))
    return a, resid


def fit_threshold(diagram: PhaseDiagram, contour_level: float = 0.5) -> ThresholdFit:
    """Fit m*(s) = a * s * ln(b * n / s) to the interpolated contour.

    One-dimensional search over b (log-spaced scan plus golden-section
    refinement) with the closed-form least-squares a at each b.
    """
    s_used, m_star = contour_crossings(diagram, contour_level)
    if len(s_used) < 2:
        raise UnderdeterminedError(
            f"only {len(s_used)} usable sparsity values cross the contour")
    s = np.asarray(s_used, dtype=np.float64)
    m_vals = np.asarray(m_star, dtype=np.float64)
    n = diagram.n

    # b below s_max/n would make the log factor nonpositive at s_max
    b_lo = max(s) / n * (1.0 + 1e-6)
    b_grid = np.geomspace(b_lo, 1e4, 512)
    resids = np.array([_fit_a_for_b(s, m_vals, n, b)[1] for b in b_grid])
    k = int(np.argmin(resids))
    lo = b_grid[max(k - 1, 0)]
    hi = b_grid[min(k + 1, b_grid.size - 1)]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1 = _fit_a_for_b(s, m_vals, n, x1)[1]
    f2 = _fit_a_for_b(s, m_vals, n, x2)[1]
    for _ in range(80):
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = _fit_a_for_b(s, m_vals, n, x1)[1]
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = _fit_a_for_b(s, m_vals, n, x2)[1]
    b = float((lo + hi) / 2.0)
    a, residual = _fit_a_for_b(s, m_vals, n, b)
    return ThresholdFit(a=a, b=b, contour_level=contour_level,
                        residual=residual, s_points_used=tuple(s_used),
                        m_star=tuple(m_star))


def scaling_exponent(diagram: PhaseDiagram, contour_level: float = 0.5) -> float:
    """Slope of ln m*(s) against ln s: near 1 supports an s*log threshold
    law, near 2 an s**2 law."""
    s_used, m_star = contour_crossings(diagram, contour_level)
    if len(s_used) < 3 or max(s_used) < 4 * min(s_used):
        raise UnderdeterminedError(
            "need >= 3 contour crossings spanning at least a 4x sparsity range")
    slope, _ = np.polyfit(np.log(s_used), np.log(m_star), 1)
    return float(slope)
