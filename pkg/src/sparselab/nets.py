"""Epsilon-nets of the sparse unit sphere T = {x : ||x||_2 = 1, ||x||_0 <= s}.

Per support, the net is a greedy maximal eps-separated point set on the
unit sphere of the support coordinates: the separation invariant makes
the packing bound ``(1 + 2/eps)**s <= (3/eps)**s`` hold deterministically,
while the covering property (every point of T within eps of the net)
holds with high probability and is verified statistically; a failed
verification is repaired by a densification pass that inserts the
offending probes.  One support net is built per (s, eps, seed) and
embedded into every size-s support, in lexicographic support order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .ensembles import SparseSignal
from .errors import ParameterError, SizeCapError
from .rng import TAG_NET, TAG_PROBE, substream

# Stop the greedy pass after this many consecutive rejections (scaled by
# the packing cap); at that point the set is maximal with high probability.
REJECTION_STREAK_FACTOR = 200
_MAX_REJECTIONS_CAP = 2_000_000
_BUILD_BUDGET = 10_000_000


def packing_cap(s: int, epsilon: float) -> int:
    """Deterministic ceiling (1 + 2/eps)**s on any eps-separated set size."""
    return int(math.floor((1.0 + 2.0 / epsilon) ** s + 1e-9))


def cardinality_bound(n: int, s: int, epsilon: float) -> float:
    """The (e*n / (eps*s))**s cardinality bound on the full sparse net."""
    return (math.e * n / (epsilon * s)) ** s


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon <= 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1], got {epsilon}")


def build_support_net(k: int, epsilon: float, seed: int,
                      max_rejections: int | None = None) -> np.ndarray:
    """Greedy maximal eps-separated set on the unit sphere in k dimensions.

    Candidates are uniform sphere points; one is admitted when it is more
    than eps from every admitted point, and the pass stops after
    ``max_rejections`` consecutive rejections (default
    ``200 * (3/eps)**k``, capped).  Returns an array of unit rows.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    _check_epsilon(epsilon)
    if k == 1:
        # the 0-sphere is {+1, -1}; separation 2 > eps always
        return np.array([[1.0], [-1.0]])
    if max_rejections is None:
        max_rejections = min(
            int(REJECTION_STREAK_FACTOR * (3.0 / epsilon) ** k), _MAX_REJECTIONS_CAP)
    rng = substream(seed, TAG_NET, k)
    cap = packing_cap(k, epsilon)
    points = np.empty((0, k))
    streak = 0
    eps_sq = epsilon * epsilon
    while streak < max_rejections and len(points) < cap:
        batch = rng.standard_normal((256, k))
        norms = np.linalg.norm(batch, axis=1)
        for cand, norm in zip(batch, norms):
            if norm == 0.0 or (cand == 0.0).any():
                continue  # zero coordinates would break sparse embedding
            cand = cand / norm
            if len(points) == 0 or (((points - cand) ** 2).sum(axis=1) > eps_sq).all():
                points = np.vstack([points, cand])
                streak = 0
                if len(points) >= cap:
                    break
            else:
                streak += 1
                if streak >= max_rejections:
                    break
    assert len(points) <= cap, "packing bound violated"
    return points


@dataclass
class EpsilonNet:
    """Union of per-support nets over all size-s supports of [0, n)."""

    n: int
    s: int
    epsilon: float
    points: list = field(repr=False)
    per_support_sizes: dict = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.points)

    def grouped(self) -> dict:
        """support tuple -> stacked value rows, for distance queries."""
        groups: dict[tuple, list] = {}
        for p in self.points:
            groups.setdefault(tuple(p.support.tolist()), []).append(p.values)
        return {k: np.vstack(v) for k, v in groups.items()}


def build_sparse_net(n: int, s: int, epsilon: float, seed: int) -> EpsilonNet:
    """Net for the s-sparse unit sphere in dimension n.

    One support net is embedded into every support, concatenated in
    lexicographic support order.  The deterministic per-support packing
    bound is asserted; the stated total cardinality bound
    ``(e*n/(eps*s))**s`` is exposed via :func:`cardinality_bound` and
    checked by the test suite in the eps <= 1/2 regime it is used in.
    """
    if not 1 <= s <= n:
        raise ParameterError(f"need 1 <= s <= n, got s={s}, n={n}")
    _check_epsilon(epsilon)
    if math.comb(n, s) * (3.0 / epsilon) ** s > _BUILD_BUDGET:
        raise SizeCapError("net size budget exceeded")
    base = build_support_net(s, epsilon, seed)
    points = []
    sizes = {}
    for support in combinations(range(n), s):
        sup = np.array(support, dtype=np.int64)
        for row in base:
            points.append(SparseSignal(n=n, support=sup, values=row))
        sizes[support] = base.shape[0]
    return EpsilonNet(n=n, s=s, epsilon=epsilon, points=points,
                      per_support_sizes=sizes)


def _sample_probe(rng: np.random.Generator, n: int, s: int):
    support = np.sort(rng.choice(n, size=s, replace=False))
    values = rng.standard_normal(s)
    while (values == 0.0).any():
        redo = values == 0.0
        values[redo] = rng.standard_normal(int(redo.sum()))
    values /= np.linalg.norm(values)
    return support, values


def verify_covering(net: EpsilonNet, probes: int, seed: int) -> float:
    """Max distance from ``probes`` random points of T to the net.

    Probes have uniform support and uniform sphere values; each is matched
    against the net points built for its own support (the only size-s
    superset of a full-support probe).  The covering check passes when the
    returned value is <= eps.
    """
    if probes < 1:
        raise ParameterError("probes must be >= 1")
    rng = substream(seed, TAG_PROBE)
    groups = net.grouped()
    worst = 0.0
    for _ in range(probes):
        support, values = _sample_probe(rng, net.n, net.s)
        candidates = groups[tuple(support.tolist())]
        dist = float(np.sqrt(((candidates - values) ** 2).sum(axis=1)).min())
        worst = max(worst, dist)
    return worst


def densify_net(net: EpsilonNet, probes: int, seed: int) -> EpsilonNet:
    """Insert probe points left uncovered (distance > eps) into the net.

    Inserted points keep the per-support separation invariant: a probe is
    only added when it is more than eps from every point sharing its
    support, including points added earlier in the same pass.
    """
    if probes < 1:
        raise ParameterError("probes must be >= 1")
    rng = substream(seed, TAG_PROBE)
    groups = net.grouped()
    points = list(net.points)
    sizes = dict(net.per_support_sizes)
    for _ in range(probes):
        support, values = _sample_probe(rng, net.n, net.s)
        key = tuple(support.tolist())
        candidates = groups[key]
        dist = float(np.sqrt(((candidates - values) ** 2).sum(axis=1)).min())
        if dist > net.epsilon:
            points.append(SparseSignal(n=net.n, support=support, values=values))
            groups[key] = np.vstack([candidates, values])
            sizes[key] = sizes[key] + 1
    return EpsilonNet(n=net.n, s=net.s, epsilon=net.epsilon, points=points,
                      per_support_sizes=sizes)
