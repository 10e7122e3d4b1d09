import numpy as np
import pytest

from onlinemetric.lightmatch import EulerTourForest, LightMatching, TourError
from onlinemetric.linematch import LineCollection
from onlinemetric.metric import euclidean_from
from onlinemetric.oracles import mst_cost


@pytest.mark.parametrize("strategy", ["greedy", "swap"])
def test_random_instances_verify(strategy):
    for seed in range(25):
        g = np.random.default_rng(seed)
        n = 2 * int(g.integers(1, 25))
        m = euclidean_from(g.random((n, 2)))
        a = LightMatching(m, strategy, seed=seed, verify=True)
        for x in range(1, n + 1, 2):
            a.insert_pair(x, x + 1)
        assert 2 * len(a.matching) == n
        assert a.forest.max_splices <= 8
        assert a.path_cost() <= 2 * a.tree_cost() + 1e-9


def test_swap_tree_is_no_heavier_than_greedy():
    g = np.random.default_rng(3)
    m = euclidean_from(g.random((60, 2)))
    w = {}
    for s in ("greedy", "swap"):
        a = LightMatching(m, s)
        for x in range(1, 61, 2):
            a.insert_pair(x, x + 1)
        w[s] = a.tree_cost()
    assert w["swap"] <= w["greedy"] + 1e-9
    assert w["swap"] >= mst_cost(m.matrix()) - 1e-9


def test_forest_link_and_cut():
    f = EulerTourForest(LineCollection(seed=0), seed=0)
    adj = {v: set() for v in range(1, 7)}
    for v in adj:
        f.add_vertex(v)
    for a, b in [(1, 2), (2, 3), (2, 4), (5, 6), (4, 5)]:
        f.link(a, b)
        adj[a].add(b)
        adj[b].add(a)
        assert f.check(adj) == []
    with pytest.raises(TourError):
        f.link(1, 6)
    f.cut(2, 4)
    adj[2].discard(4)
    adj[4].discard(2)
    assert f.check(adj) == []
    assert not f.connected(1, 5)
    with pytest.raises(TourError):
        f.cut(1, 3)


def test_points_must_arrive_in_order():
    a = LightMatching(euclidean_from([[0.0], [1.0]]))
    with pytest.raises(ValueError):
        a.insert(2)
