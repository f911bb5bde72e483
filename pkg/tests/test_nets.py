import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparselab.errors import ParameterError, SizeCapError
from sparselab.nets import (EpsilonNet, build_sparse_net, build_support_net,
                            densify_net, cardinality_bound, packing_cap,
                            verify_covering)


def pairwise_min_distance(points: np.ndarray) -> float:
    diffs = points[:, None, :] - points[None, :, :]
    dists = np.sqrt((diffs ** 2).sum(-1))
    np.fill_diagonal(dists, np.inf)
    return float(dists.min())


def test_k1_net_is_exactly_pm_one():
    net = build_support_net(1, 0.5, 0)
    assert net.tolist() == [[1.0], [-1.0]]


def test_circle_net_size_and_separation():
    net = build_support_net(2, 0.5, 0)
    # packing upper bound (3/eps)^2 = 36; circle packing floor from
    # floor(2*pi / (2*asin(eps/2))) = 12 attainable points, >= 8 observed
    assert 8 <= len(net) <= 36
    assert pairwise_min_distance(net) > 0.5
    assert np.allclose(np.linalg.norm(net, axis=1), 1.0, atol=1e-12)


def test_epsilon_range_validation():
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ParameterError):
            build_support_net(2, bad, 0)
    with pytest.raises(ParameterError):
        build_sparse_net(10, 2, 1.5, 0)


def test_sparse_net_s1_is_signed_basis():
    net = build_sparse_net(7, 1, 0.5, 0)
    assert net.size == 14
    dense = sorted(tuple(p.dense()) for p in net.points)
    expected = []
    for j in range(7):
        for sign in (1.0, -1.0):
            e = np.zeros(7)
            e[j] = sign
            expected.append(tuple(e))
    assert dense == sorted(expected)
    # bound e*n/eps >= 2n holds for eps <= e/2
    assert net.size <= cardinality_bound(7, 1, 0.5)


def test_sparse_net_bounds_n10_s2():
    net = build_sparse_net(10, 2, 0.5, 0)
    bound = cardinality_bound(10, 2, 0.5)
    assert bound == pytest.approx((10 * math.e) ** 2)
    assert net.size <= bound
    cap = packing_cap(2, 0.5)
    assert cap == 25
    assert all(size <= cap for size in net.per_support_sizes.values())
    for point in net.points:
        assert point.s <= 2
        assert np.linalg.norm(point.values) == pytest.approx(1.0, abs=1e-12)


def test_per_support_separation():
    net = build_sparse_net(6, 2, 0.5, 3)
    for _, rows in net.grouped().items():
        assert pairwise_min_distance(rows) > 0.5


def test_probe_at_net_point_has_zero_distance():
    net = build_sparse_net(8, 2, 0.5, 1)
    groups = net.grouped()
    point = net.points[10]
    rows = groups[tuple(point.support.tolist())]
    dist = np.sqrt(((rows - point.values) ** 2).sum(axis=1)).min()
    assert dist == 0.0


def test_covering_check_passes():
    net = build_sparse_net(10, 2, 0.5, 0)
    worst = verify_covering(net, 2000, 17)
    assert worst <= 0.5


def test_covering_failure_triggers_densification_then_passes():
    base = build_sparse_net(9, 2, 0.5, 2)
    # keep two points per support: separation still holds, covering breaks
    thinned = []
    seen: dict = {}
    for p in base.points:
        key = tuple(p.support.tolist())
        if seen.get(key, 0) < 2:
            thinned.append(p)
            seen[key] = seen.get(key, 0) + 1
    thin_net = EpsilonNet(n=9, s=2, epsilon=0.5, points=thinned,
                          per_support_sizes=seen)
    worst = verify_covering(thin_net, 1500, 5)
    assert worst > 0.5
    repaired = densify_net(thin_net, 1500, 5)
    assert verify_covering(repaired, 1500, 5) <= 0.5
    for _, rows in repaired.grouped().items():
        assert pairwise_min_distance(rows) > 0.5


def test_cardinality_grows_like_n_choose_s():
    sizes = {n: build_sparse_net(n, 2, 0.5, 4).size for n in (6, 8, 10)}
    per_support = sizes[6] / math.comb(6, 2)
    for n in (8, 10):
        assert sizes[n] == per_support * math.comb(n, 2)


def test_build_budget_cap():
    with pytest.raises(SizeCapError):
        build_sparse_net(60, 5, 0.1, 0)


@settings(max_examples=20, deadline=None, derandomize=True)
@given(k=st.integers(2, 3), eps=st.floats(0.35, 1.0), seed=st.integers(0, 500))
def test_support_net_invariants(k, eps, seed):
    net = build_support_net(k, eps, seed)
    assert len(net) <= packing_cap(k, eps)
    assert pairwise_min_distance(net) > eps
    assert np.allclose(np.linalg.norm(net, axis=1), 1.0, atol=1e-12)
    again = build_support_net(k, eps, seed)
    assert np.array_equal(net, again)
