"""Restricted uniform boundedness: constants, certificate, proof machinery.

A matrix has the RUB at sparsity k with constants (C1, C2) when
``C1*||x||_2 <= ||Ax||_1 <= C2*||x||_2`` for every k-sparse x.  The upper
constant restricted to a support is computed exactly by sign enumeration
(the piecewise-linear objective is maximized at a sign vector:
``max ||Bx||_1 = max_sigma ||B^T sigma||_2``).  The lower constant is a
certified branch-and-bound minimum over the sphere using the Lipschitz
bound ``| ||Bx||_1 - ||By||_1 | <= L*||x - y||_2`` with L the exact upper
constant; the reported value is a true lower bound, so the recovery
certificate evaluated on it is conservative.

The recovery certificate itself: exact recovery of every s-sparse signal
follows once the RUB holds at level ``s + ceil(lambda*s)`` with
``lambda > (C2/C1)**2`` strictly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.linalg import null_space

from .ensembles import SparseSignal
from .errors import (DegenerateRubError, DimensionError, ParameterError,
                     SizeCapError)
from .rng import TAG_NSP, TAG_RUB_MC, substream
from .solver import _entries

OPNORM_MAX_ROWS = 16
SPHERE_CERT_MAX_K = 3
_BNB_ATOL = 1e-9
_BNB_RTOL = 1e-7
_BNB_MAX_PATCHES = 200_000
_HEURISTIC_SEED = 0x5BADD1CE


# ---------------------------------------------------------------------------
# extremes of ||Bx||_1 over the unit sphere
# ---------------------------------------------------------------------------


@lru_cache(maxsize=8)
def _sign_cube(m: int) -> np.ndarray:
    # half the sign cube suffices: ||B^T sigma|| = ||B^T (-sigma)||
    count = 1 << (m - 1)
    bits = (np.arange(count)[:, None] >> np.arange(m)[None, :]) & 1
    return 2.0 * bits - 1.0


def opnorm_l2_to_l1_exact(block) -> float:
    """Exact max of ||Bx||_1 over unit l2 vectors, by sign enumeration."""
    b = np.atleast_2d(np.asarray(block, dtype=np.float64))
    m = b.shape[0]
    if m > OPNORM_MAX_ROWS:
        raise SizeCapError(f"sign enumeration capped at m <= {OPNORM_MAX_ROWS}")
    return float(np.sqrt(((_sign_cube(m) @ b) ** 2).sum(axis=1)).max())


def _l1_values(b: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.abs(points @ b.T).sum(axis=1)


def _lipschitz(b: np.ndarray) -> float:
    if b.shape[0] <= OPNORM_MAX_ROWS:
        return opnorm_l2_to_l1_exact(b)
    return math.sqrt(b.shape[0]) * float(np.linalg.svd(b, compute_uv=False)[0])


def _min_circle_certified(b, grid_density, refine_iters, rtol=_BNB_RTOL,
                          stop_above=None):
    """(best value, certified lower bound) of ||Bx||_1 on the unit circle.

    ``stop_above`` aborts refinement once the certified bound exceeds it
    (used when a caller only needs the minimum across many blocks).
    """
    lip = _lipschitz(b)
    width = math.pi / grid_density  # arc half-width
    centers = (2.0 * np.arange(grid_density) + 1.0) * width
    values = _l1_values(b, np.column_stack([np.cos(centers), np.sin(centers)]))
    best = float(values.min())
    floor = math.inf
    for _ in range(refine_iters):
        chord = 2.0 * math.sin(min(width, math.pi) / 2.0)
        bounds = values - lip * chord
        cert = min(floor, float(bounds.min()))
        if best - cert <= max(_BNB_ATOL, rtol * best):
            break
        if stop_above is not None and cert >= stop_above:
            return best, max(cert, 0.0)
        keep = bounds < best
        if not keep.any() or keep.sum() * 2 > _BNB_MAX_PATCHES:
            break
        if (~keep).any():
            floor = min(floor, float(bounds[~keep].min()))
        width /= 2.0
        centers = np.concatenate([centers[keep] - width, centers[keep] + width])
        values = _l1_values(b, np.column_stack([np.cos(centers), np.sin(centers)]))
        best = min(best, float(values.min()))
    chord = 2.0 * math.sin(min(width, math.pi) / 2.0)
    cert = min(floor, float((values - lip * chord).min()))
    return best, max(cert, 0.0)


def _cube_values(b, faces, u, v):
    """||B p||_1 at sphere points addressed by cube-face coordinates.

    Face f in 0..5 fixes axis f//2 at sign (-1)**(f%2); (u, v) fill the
    remaining two axes in index order; the point is the projection of that
    cube-surface point onto the sphere.  Every unit vector is covered
    through its largest-magnitude coordinate.
    """
    points = np.empty((faces.size, 3))
    for face in range(6):
        mask = faces == face
        if not mask.any():
            continue
        axis = face // 2
        others = [a for a in range(3) if a != axis]
        points[mask, axis] = 1.0 if face % 2 == 0 else -1.0
        points[mask, others[0]] = u[mask]
        points[mask, others[1]] = v[mask]
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    return _l1_values(b, points)


def _min_sphere_certified(b, grid_density, refine_iters, rtol=_BNB_RTOL,
                          stop_above=None):
    """(best value, certified lower bound) of ||Bx||_1 on the unit 2-sphere.

    Patches are rectangles on the six cube faces projected to the sphere.
    For pre-projection points p, q with norms >= 1 the projected chord
    obeys ||p/|p| - q/|q||| <= 2*||p - q||, so a patch with half-widths
    (wu, wv) stays within chord 2*sqrt(wu**2 + wv**2) of its center.  The
    cube parametrization has no polar degeneracy, which keeps the active
    set small around isolated minima.
    """
    lip = _lipschitz(b)
    half = 1.0 / grid_density
    centers_1d = -1.0 + (2.0 * np.arange(grid_density) + 1.0) * half
    grid_u, grid_v = np.meshgrid(centers_1d, centers_1d, indexing="ij")
    faces = np.repeat(np.arange(6), grid_density ** 2)
    u = np.tile(grid_u.ravel(), 6)
    v = np.tile(grid_v.ravel(), 6)
    width = half
    values = _cube_values(b, faces, u, v)
    best = float(values.min())
    floor = math.inf
    for _ in range(refine_iters):
        chord = 2.0 * math.sqrt(2.0) * width
        bounds = values - lip * chord
        cert = min(floor, float(bounds.min()))
        if best - cert <= max(_BNB_ATOL, rtol * best):
            break
        if stop_above is not None and cert >= stop_above:
            return best, max(cert, 0.0)
        keep = bounds < best
        if not keep.any() or keep.sum() * 4 > _BNB_MAX_PATCHES:
            break
        if (~keep).any():
            floor = min(floor, float(bounds[~keep].min()))
        faces, u, v = faces[keep], u[keep], v[keep]
        width /= 2.0
        faces = np.tile(faces, 4)
        u = np.concatenate([u - width, u - width, u + width, u + width])
        v = np.concatenate([v - width, v + width, v - width, v + width])
        values = _cube_values(b, faces, u, v)
        best = min(best, float(values.min()))
    chord = 2.0 * math.sqrt(2.0) * width
    cert = min(floor, float((values - lip * chord).min()))
    return best, max(cert, 0.0)


@lru_cache(maxsize=8)
def _probe_directions(k: int) -> np.ndarray:
    """Fixed cheap probe set used to rank supports before refinement."""
    rng = substream(_HEURISTIC_SEED, 1, k)
    probes = rng.standard_normal((32, k))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    return np.vstack([np.eye(k), probes])


def _min_sphere_heuristic(b, iters=400):
    """Multi-start projected subgradient descent; value only, not certified."""
    k = b.shape[1]
    rng = substream(_HEURISTIC_SEED, k)
    starts = [np.eye(k)[i] for i in range(k)]
    starts += list(rng.standard_normal((8 + 2 * k, k)))
    best = math.inf
    for x0 in starts:
        x = x0 / np.linalg.norm(x0)
        value = float(np.abs(b @ x).sum())
        best = min(best, value)
        step = 0.5 * max(value, 1e-12)
        for _ in range(iters):
            grad = b.T @ np.sign(b @ x)
            tangent = grad - (grad @ x) * x
            norm = np.linalg.norm(tangent)
            if norm < 1e-14:
                break
            x = x - (step / norm) * tangent
            x /= np.linalg.norm(x)
            value = float(np.abs(b @ x).sum())
            best = min(best, value)
            step *= 0.985
    return best


def sphere_min_l1(block, grid_density: int = 64, refine_iters: int = 48) -> float:
    """Min of ||Bx||_1 over unit l2 vectors.

    Certified (grid + Lipschitz refinement) for k <= 3 columns, heuristic
    multi-start subgradient descent beyond that.
    """
    b = np.atleast_2d(np.asarray(block, dtype=np.float64))
    if grid_density < 1:
        raise ParameterError("grid_density must be positive")
    k = b.shape[1]
    if k == 1:
        return float(np.abs(b[:, 0]).sum())
    if k == 2:
        return _min_circle_certified(b, grid_density, refine_iters)[0]
    if k == 3:
        return _min_sphere_certified(b, grid_density, refine_iters)[0]
    return _min_sphere_heuristic(b)


def _sphere_min_lower_bound(b, grid_density=64, refine_iters=48,
                            rtol=_BNB_RTOL, stop_above=None):
    """Certified lower bound on the sphere minimum (k <= 3 only)."""
    k = b.shape[1]
    if k == 1:
        v = float(np.abs(b[:, 0]).sum())
        return v, v
    if k == 2:
        return _min_circle_certified(b, grid_density, refine_iters, rtol, stop_above)
    if k == 3:
        return _min_sphere_certified(b, grid_density, refine_iters, rtol, stop_above)
    raise SizeCapError(f"certified sphere minimum capped at k <= {SPHERE_CERT_MAX_K}")


# ---------------------------------------------------------------------------
# RUB constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RubEstimate:
    """Two-sided bounds on ||Ax||_1 over k-sparse unit vectors.

    For ``exact_tiny`` the lower value is a certified lower bound of the
    true minimum and the upper value is exact, so both certainty flags are
    set.  For ``monte_carlo`` the sampled extremes sit inside the true
    range (lower over-estimates the minimum, upper under-estimates the
    maximum) and neither flag is set.
    """

    sparsity_level: int
    lower: float
    upper: float
    method: str
    samples_or_supports: int
    lower_is_certified: bool
    upper_is_certified: bool
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.lower <= self.upper + 1e-12:
            raise ParameterError(f"need 0 <= lower <= upper, got {self.lower}, {self.upper}")
        if self.method not in ("exact_tiny", "monte_carlo"):
            raise ParameterError(f"unknown method {self.method!r}")
        if self.method == "exact_tiny" and not (self.lower_is_certified
                                                and self.upper_is_certified):
            raise ParameterError("exact_tiny results must be certified")


def rub_constants(matrix, k: int, method: str = "exact_tiny",
                  budget: int = 200_000, seed: int = 0) -> RubEstimate:
    """Estimate the RUB constants of A at sparsity level k.

    ``exact_tiny`` enumerates all C(n, k) supports (requires m <= 16,
    k <= 3, and C(n, k) <= budget); ``monte_carlo`` takes the extremes of
    ||Ax||_1 over ``budget`` seeded random k-sparse unit vectors.
    """
    entries = _entries(matrix)
    m, n = entries.shape
    if not 1 <= k <= n:
        raise ParameterError(f"need 1 <= k <= n, got k={k}")
    if method == "exact_tiny":
        if m > OPNORM_MAX_ROWS or k > SPHERE_CERT_MAX_K:
            raise SizeCapError(
                f"exact_tiny caps: m <= {OPNORM_MAX_ROWS}, k <= {SPHERE_CERT_MAX_K}")
        n_supports = math.comb(n, k)
        if n_supports > budget:
            raise SizeCapError(
                f"{n_supports} supports exceed the enumeration budget {budget}")
        upper = 0.0
        blocks = []
        probes = _probe_directions(k)
        for subset in combinations(range(n), k):
            sub = entries[:, subset]
            upper = max(upper, opnorm_l2_to_l1_exact(sub))
            blocks.append((float(_l1_values(sub, probes).min()), sub))
        # visit likely-minimal supports first so the rest abort early
        blocks.sort(key=lambda item: item[0])
        lower = math.inf
        for _, sub in blocks:
            _, cert = _sphere_min_lower_bound(sub, grid_density=12,
                                              rtol=1e-5, stop_above=lower)
            lower = min(lower, cert)
        return RubEstimate(k, lower, upper, "exact_tiny", n_supports,
                           True, True, int(seed))
    if method == "monte_carlo":
        if budget < 1:
            raise ParameterError("monte_carlo budget must be positive")
        rng = substream(seed, TAG_RUB_MC)
        lower, upper = math.inf, 0.0
        remaining = budget
        while remaining > 0:
            chunk = min(remaining, 4096)
            supports = np.argsort(rng.random((chunk, n)), axis=1)[:, :k]
            vals = rng.standard_normal((chunk, k))
            vals /= np.linalg.norm(vals, axis=1, keepdims=True)
            cols = entries[:, supports]          # m x chunk x k
            images = np.einsum("mck,ck->cm", cols, vals)
            norms = np.abs(images).sum(axis=1)
            lower = min(lower, float(norms.min()))
            upper = max(upper, float(norms.max()))
            remaining -= chunk
        return RubEstimate(k, lower, upper, "monte_carlo", budget,
                           False, False, int(seed))
    raise ParameterError(f"unknown method {method!r}")


def recovery_certificate(c1: float, c2: float, lam: float) -> bool:
    """Strict recovery certificate: lambda > (C2/C1)**2."""
    if c1 <= 0:
        raise DegenerateRubError("lower RUB constant is not positive")
    if c2 < c1:
        raise ParameterError("need c2 >= c1")
    if lam <= 0:
        raise ParameterError("lambda must be positive")
    return lam > (c2 / c1) ** 2


def certificate_level(s: int, lam: float) -> int:
    """Sparsity level the certificate needs: s + ceil(lambda*s)."""
    if s < 1 or lam <= 0:
        raise ParameterError("need s >= 1 and lambda > 0")
    return s + math.ceil(lam * s)


# ---------------------------------------------------------------------------
# proof machinery: block decomposition, cone constraint, null space property
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockDecomposition:
    """Partition of the off-support indices into magnitude-ordered blocks."""

    i0: np.ndarray
    blocks: tuple
    block_size: int

    def all_indices(self) -> np.ndarray:
        parts = [self.i0, *self.blocks]
        return np.sort(np.concatenate([np.asarray(p, dtype=np.int64) for p in parts]))

    def check_invariants(self, h: np.ndarray) -> None:
        """Assert the partition, size, and magnitude-ordering invariants."""
        n = len(h)
        joined = self.all_indices()
        assert joined.size == n and (joined == np.arange(n)).all(), "not a partition"
        for block in self.blocks[:-1]:
            assert len(block) == self.block_size, "non-final block has wrong size"
        mags = np.abs(h)
        for first, second in zip(self.blocks, self.blocks[1:]):
            assert mags[first].min() >= mags[second].max() - 1e-15, \
                "blocks out of magnitude order"


def block_decompose(h, i0, block_size: int) -> BlockDecomposition:
    """Greedy magnitude-ordered blocks over the complement of i0.

    Off-support indices are ranked by decreasing |h_j| (ties broken by
    ascending index) and chunked into blocks of ``block_size``; the last
    block may be short.  Blocks are stored with indices sorted ascending.
    """
    h = np.asarray(h, dtype=np.float64).ravel()
    n = h.size
    if block_size < 1:
        raise ParameterError("block_size must be >= 1")
    i0 = np.unique(np.asarray(list(i0), dtype=np.int64))
    if i0.size and (i0[0] < 0 or i0[-1] >= n):
        raise DimensionError("i0 indices must lie in [0, n)")
    complement = np.setdiff1d(np.arange(n), i0)
    order = complement[np.lexsort((complement, -np.abs(h[complement])))]
    blocks = tuple(np.sort(order[i:i + block_size])
                   for i in range(0, order.size, block_size))
    return BlockDecomposition(i0=i0, blocks=blocks, block_size=block_size)


def cone_constraint_holds(signal: SparseSignal, z_hat, tol: float = 1e-12) -> bool:
    """With h = z_hat - x: is ||h off-support||_1 <= ||h on-support||_1 (+tol)?

    Every l1 minimizer satisfies this, which is what drives the recovery
    proof; the default slack absorbs double-precision noise only.
    """
    z_hat = np.asarray(z_hat, dtype=np.float64).ravel()
    if z_hat.size != signal.n:
        raise DimensionError("z_hat dimension differs from the signal's")
    h = z_hat - signal.dense()
    on = np.zeros(signal.n, dtype=bool)
    on[signal.support] = True
    return float(np.abs(h[~on]).sum()) <= float(np.abs(h[on]).sum()) + tol


def _top_abs_sum(h: np.ndarray, s: int) -> float:
    mags = np.abs(h)
    if s >= mags.size:
        return float(mags.sum())
    return float(np.partition(mags, mags.size - s)[-s:].sum())


@dataclass(frozen=True)
class NspResult:
    """Outcome of a null-space-property check."""

    status: str  # "holds_certified" | "holds_sampled" | "fails"
    witness: np.ndarray | None = field(default=None, repr=False)
    margin: float = math.inf
    kernel_dim: int = 0
    samples: int = 0

    @property
    def holds(self) -> bool:
        return self.status != "fails"


def _nsp_margins(kernel: np.ndarray, coords: np.ndarray, s: int) -> np.ndarray:
    vectors = coords @ kernel.T          # rows are kernel vectors h
    mags = np.abs(vectors)
    l1 = mags.sum(axis=1)
    top = np.sort(mags, axis=1)[:, -s:].sum(axis=1)
    return l1 - 2.0 * top


def nsp_oracle(matrix, s: int, sample_budget: int = 20_000,
               seed: int = 0) -> NspResult:
    """Check that every nonzero kernel vector carries less than half of its
    l1 mass on any s coordinates (equivalent to uniform s-sparse recovery).

    Certified for kernel dimension d <= 2 (exact for d = 1, dense circle
    grid with Lipschitz error control for d = 2); sampled over
    ``sample_budget`` unit kernel vectors for d >= 3.  A violating vector
    is returned as witness.
    """
    entries = _entries(matrix)
    n = entries.shape[1]
    if not 1 <= s <= n:
        raise ParameterError(f"need 1 <= s <= n, got s={s}")
    kernel = null_space(entries)
    d = kernel.shape[1]
    if d == 0:
        return NspResult("holds_certified", None, math.inf, 0, 0)

    zero_tol = 1e-12
    if d == 1:
        h = kernel[:, 0]
        margin = float(np.abs(h).sum() - 2.0 * _top_abs_sum(h, s))
        if margin <= zero_tol:
            return NspResult("fails", h, margin, 1, 0)
        return NspResult("holds_certified", None, margin, 1, 0)

    if d == 2:
        lip = math.sqrt(n) + 2.0 * math.sqrt(s)
        width = math.pi / 256.0
        centers = (2.0 * np.arange(256) + 1.0) * width
        best_margin = math.inf
        for _ in range(64):
            coords = np.column_stack([np.cos(centers), np.sin(centers)])
            margins = _nsp_margins(kernel, coords, s)
            best_margin = min(best_margin, float(margins.min()))
            hit = margins <= zero_tol
            if hit.any():
                i = int(np.argmin(margins))
                return NspResult("fails", kernel @ coords[i], float(margins[i]), 2, 0)
            chord = 2.0 * math.sin(width / 2.0)
            active = margins - lip * chord <= 0.0
            if not active.any():
                return NspResult("holds_certified", None, best_margin, 2, 0)
            if active.sum() * 2 > _BNB_MAX_PATCHES:
                break
            width /= 2.0
            centers = np.concatenate([centers[active] - width, centers[active] + width])
        return NspResult("holds_sampled", None, best_margin, 2, int(centers.size))

    rng = substream(seed, TAG_NSP)
    best_margin = math.inf
    remaining = sample_budget
    while remaining > 0:
        chunk = min(remaining, 4096)
        coords = rng.standard_normal((chunk, d))
        coords /= np.linalg.norm(coords, axis=1, keepdims=True)
        margins = _nsp_margins(kernel, coords, s)
        i = int(np.argmin(margins))
        best_margin = min(best_margin, float(margins[i]))
        if margins[i] <= zero_tol:
            return NspResult("fails", kernel @ coords[i], float(margins[i]), d,
                             sample_budget - remaining + chunk)
        remaining -= chunk
    return NspResult("holds_sampled", None, best_margin, d, sample_budget)
