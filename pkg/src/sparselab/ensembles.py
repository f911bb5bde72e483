"""Measurement ensembles: entry laws, matrices, and sparse test signals.

Every built-in entry law is zero mean with unit variance, so a sampled
matrix ``A`` holds entries ``xi_ij / m`` with variance ``1/m**2``.  The
heavy-tailed laws (``laplace``, ``symmetrized_exponential``,
``custom_mixture``) are sub-exponential but not sub-Gaussian; ``gaussian``
and ``rademacher`` are the sub-Gaussian baselines used for comparison.

Per-law metadata:

==========================  ==========  ============  =================
kind                        scale       psi1_scale    moment_constant_c3
==========================  ==========  ============  =================
laplace                     1/sqrt(2)   sqrt(2)       1/sqrt(2)
symmetrized_exponential     1/sqrt(2)   sqrt(2)       1/sqrt(2)
gaussian                    1           1.3724949920  sqrt(2/pi)
rademacher                  1           1/ln(2)       1
custom_mixture              1           1.3956366916  0.7524956710
==========================  ==========  ============  =================

``psi1_scale`` is the Orlicz psi_1 norm, i.e. the smallest K with
``E exp(|xi|/K) <= 2``; closed form for laplace (2*scale) and rademacher
(1/ln 2), solved numerically from the defining equality for the gaussian
and the mixture.  ``moment_constant_c3`` is the smallest C with
``(E|xi|^p)^(1/p) <= C*p`` for all p >= 1; for each built-in law the
supremum sits at p = 1, so C equals the absolute first moment.
``custom_mixture`` draws from a standard gaussian or a unit-variance
Laplace with probability 1/2 each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionError, InputError, ParameterError
from .rng import substream

LAPLACE_SCALE = 1.0 / math.sqrt(2.0)

KINDS = (
    "laplace",
    "symmetrized_exponential",
    "gaussian",
    "rademacher",
    "custom_mixture",
)

VALUE_LAWS = ("gaussian", "rademacher", "unit")


def _phi(z: float) -> float:
    """Standard normal CDF."""
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def _mgf_abs_gaussian(k: float) -> float:
    """E exp(|G|/k) for a standard gaussian G."""
    return 2.0 * math.exp(1.0 / (2.0 * k * k)) * _phi(1.0 / k)


def _mgf_abs_laplace(k: float) -> float:
    """E exp(|L|/k) for L ~ Laplace(LAPLACE_SCALE); |L| is Exp(1/scale)."""
    return 1.0 / (1.0 - LAPLACE_SCALE / k)


def _psi1_numeric(mgf, lo: float) -> float:
    return brentq(lambda k: mgf(k) - 2.0, lo, 64.0, xtol=1e-12)


@dataclass(frozen=True)
class EntryDistribution:
    """A zero-mean unit-variance entry law with its tail metadata."""

    kind: str
    scale: float
    psi1_scale: float
    moment_constant_c3: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown entry law {self.kind!r}")
        for name in ("scale", "psi1_scale", "moment_constant_c3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and positive")


def entry_distribution(kind: str) -> EntryDistribution:
    """Built-in law by name, with analytically/numerically fixed metadata."""
    if kind in ("laplace", "symmetrized_exponential"):
        return EntryDistribution(kind, LAPLACE_SCALE, 2.0 * LAPLACE_SCALE, LAPLACE_SCALE)
    if kind == "gaussian":
        return EntryDistribution(
            kind, 1.0, _psi1_numeric(_mgf_abs_gaussian, 0.25), math.sqrt(2.0 / math.pi)
        )
    if kind == "rademacher":
        return EntryDistribution(kind, 1.0, 1.0 / math.log(2.0), 1.0)
    if kind == "custom_mixture":
        psi1 = _psi1_numeric(
            lambda k: 0.5 * _mgf_abs_gaussian(k) + 0.5 * _mgf_abs_laplace(k),
            LAPLACE_SCALE * (1 + 1e-9),
        )
        c3 = 0.5 * math.sqrt(2.0 / math.pi) + 0.5 * LAPLACE_SCALE
        return EntryDistribution(kind, 1.0, psi1, c3)
    raise ParameterError(f"unknown entry law {kind!r}")


def draw_raw(dist: EntryDistribution, rng: np.random.Generator, size) -> np.ndarray:
    """Raw (un-normalized by m) entries, C-order fill.

    Draw order per law is part of the determinism contract:
    symmetrized_exponential draws the magnitude array first, then the
    sign array; custom_mixture draws the component selector, then the
    gaussian array, then the laplace array.
    """
    kind = dist.kind
    if kind == "laplace":
        return rng.laplace(0.0, dist.scale, size)
    if kind == "symmetrized_exponential":
        mag = rng.standard_exponential(size)
        sign = 2.0 * rng.integers(0, 2, size) - 1.0
        return dist.scale * sign * mag
    if kind == "gaussian":
        return rng.standard_normal(size)
    if kind == "rademacher":
        return (2.0 * rng.integers(0, 2, size) - 1.0).astype(np.float64)
    if kind == "custom_mixture":
        pick = rng.integers(0, 2, size)
        gauss = rng.standard_normal(size)
        lap = rng.laplace(0.0, LAPLACE_SCALE, size)
        return np.where(pick == 1, gauss, lap)
    raise ParameterError(f"unknown entry law {kind!r}")


@dataclass(frozen=True)
class MeasurementMatrix:
    """Dense m x n measurement matrix with provenance.

    ``entries`` stores the already-normalized values ``xi_ij / m``.
    ``dist`` is None for hand-built fixtures and file imports without
    ensemble provenance.
    """

    m: int
    n: int
    entries: np.ndarray = field(repr=False)
    dist: EntryDistribution | None
    seed: int

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.shape != (self.m, self.n):
            raise DimensionError(f"entries shape {e.shape} != ({self.m}, {self.n})")
        if not np.isfinite(e).all():
            raise InputError("matrix entries must be finite")
        object.__setattr__(self, "entries", e)


def matrix_from_entries(entries, dist: EntryDistribution | None = None,
                        seed: int = 0) -> MeasurementMatrix:
    """Wrap an explicit array (fixture or file import) as a MeasurementMatrix."""
    e = np.atleast_2d(np.asarray(entries, dtype=np.float64))
    return MeasurementMatrix(m=e.shape[0], n=e.shape[1], entries=e, dist=dist, seed=seed)


def sample_matrix(m: int, n: int, dist: EntryDistribution, seed: int) -> MeasurementMatrix:
    """Sample A = (xi_ij / m) with i.i.d. entries from ``dist``.

    Entries are drawn row-major in a single vectorized pass; equal
    ``(m, n, dist, seed)`` give bit-identical matrices.
    """
    if m < 1 or n < 1:
        raise DimensionError(f"matrix dimensions must be positive, got m={m}, n={n}")
    rng = substream(seed)
    raw = draw_raw(dist, rng, (m, n))
    return MeasurementMatrix(m=m, n=n, entries=raw / m, dist=dist, seed=int(seed))


@dataclass(frozen=True)
class SparseSignal:
    """An s-sparse vector stored as (support, values) over dimension n."""

    n: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if sup.shape != val.shape or sup.ndim != 1:
            raise DimensionError("support and values must be 1-d arrays of equal length")
        if sup.size:
            if not (np.diff(sup) > 0).all():
                raise InputError("support indices must be strictly increasing")
            if sup[0] < 0 or sup[-1] >= self.n:
                raise InputError("support indices must lie in [0, n)")
            if (val == 0.0).any():
                raise InputError("sparse values must be nonzero")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "values", val)

    @property
    def s(self) -> int:
        return int(self.support.size)

    def dense(self) -> np.ndarray:
        x = np.zeros(self.n)
        x[self.support] = self.values
        return x


def sample_sparse_signal(n: int, s: int, value_law: str, seed: int) -> SparseSignal:
    """Uniform random support, i.i.d. values from ``value_law``.

    ``gaussian`` values are re-drawn if exactly zero; ``rademacher`` gives
    +/-1 and ``unit`` all ones.  Deterministic in the seed (support drawn
    first, then values).
    """
    if not 0 <= s <= n:
        raise DimensionError(f"need 0 <= s <= n, got s={s}, n={n}")
    if value_law not in VALUE_LAWS:
        raise ParameterError(f"unknown value law {value_law!r}")
    rng = substream(seed)
    support = np.sort(rng.choice(n, size=s, replace=False)) if s else np.empty(0, np.int64)
    if value_law == "gaussian":
        values = rng.standard_normal(s)
        while (values == 0.0).any():
            redo = values == 0.0
            values[redo] = rng.standard_normal(int(redo.sum()))
    elif value_law == "rademacher":
        values = (2.0 * rng.integers(0, 2, s) - 1.0).astype(np.float64)
    else:
        values = np.ones(s)
    return SparseSignal(n=n, support=support, values=values)


def measure(matrix: MeasurementMatrix, signal: SparseSignal) -> np.ndarray:
    """y = A x in full double precision."""
    if signal.n != matrix.n:
        raise DimensionError(f"signal dimension {signal.n} != matrix columns {matrix.n}")
    if signal.s == 0:
        return np.zeros(matrix.m)
    return matrix.entries[:, signal.support] @ signal.values
