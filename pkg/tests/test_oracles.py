import numpy as np
import pytest
from scipy.sparse.csgraph import minimum_spanning_tree

from onlinemetric.hst import HstTree, random_hst_lca
from onlinemetric.oracles import (OracleError, l2_sq_quadrature, mst_cost, mwpm_bruteforce,
                                  mwpm_line, mwpm_prefix_costs, mwpm_ultrametric,
                                  shortest_paths)


def test_line_and_bruteforce_agree():
    g = np.random.default_rng(0)
    for _ in range(20):
        xs = g.random(2 * int(g.integers(1, 7)))
        D = np.abs(xs[:, None] - xs[None, :])
        assert mwpm_line(xs).cost == pytest.approx(mwpm_bruteforce(D).cost)


def test_prefix_costs_match_separate_runs():
    g = np.random.default_rng(1)
    P = g.random((10, 2))
    D = np.linalg.norm(P[:, None] - P[None, :], axis=2)
    pre = mwpm_prefix_costs(D)
    for k, c in zip(range(2, 11, 2), pre):
        assert c == pytest.approx(mwpm_bruteforce(D[:k, :k]).cost)


def test_ultrametric_matches_bruteforce():
    for seed in range(20):
        g = np.random.default_rng(seed)
        n = 2 * int(g.integers(1, 8))
        f, _ = random_hst_lca(g, n)
        t = HstTree()
        for x in range(1, n + 1):
            t.insert(x, f)
        D = np.array([[t.distance(a, b) for b in range(1, n + 1)] for a in range(1, n + 1)])
        assert mwpm_ultrametric(t, range(1, n + 1)).cost == pytest.approx(mwpm_bruteforce(D).cost)


def test_mst_matches_scipy():
    g = np.random.default_rng(2)
    P = g.random((30, 2))
    D = np.linalg.norm(P[:, None] - P[None, :], axis=2)
    assert mst_cost(D) == pytest.approx(minimum_spanning_tree(D).sum())


def test_errors():
    with pytest.raises(OracleError):
        mwpm_bruteforce(np.zeros((3, 3)))
    with pytest.raises(OracleError):
        mwpm_bruteforce(np.zeros((22, 22)))
    with pytest.raises(OracleError):
        mwpm_line([1.0, 2.0, 3.0])


def test_shortest_paths_on_a_path():
    D = shortest_paths(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5)])
    assert D[0, 3] == 3.5 and D[3, 1] == 2.5


def test_quadrature_two_points():
    # two points at distance 1: the second point's coordinate at scale i is
    # nonzero only when its own cluster center is active, which never happens
    # for x_1's cluster, so the expectation is 0 unless x_2 is a center
    D = np.array([[0.0, 1.0], [1.0, 0.0]])
    v = l2_sq_quadrature(D, [np.inf, 0.0], [4.0, 4.0], 1, 2, grid=50)
    assert v >= 0
