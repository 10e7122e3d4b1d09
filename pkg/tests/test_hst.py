import numpy as np
import pytest

from onlinemetric.hst import HstEmbedding, HstTree, morton_lca_exp, random_hst_lca
from onlinemetric.metric import PointStream, euclidean_from


def _tree(seed, n=30):
    g = np.random.default_rng(seed)
    f, _ = random_hst_lca(g, n, max_depth=5)
    t = HstTree()
    for x in range(1, n + 1):
        t.insert(x, f)
    return t, f


def test_tree_distance_is_the_lca_label():
    t, f = _tree(0)
    for a in range(1, 31):
        for b in range(a + 1, 31):
            e = f(a, b)
            assert t.distance(a, b) == (0.0 if e is None else 2.0 ** e)
    assert t.check() == []


def test_export_roundtrip():
    t, _ = _tree(1)
    u = HstTree.parse(t.export())
    assert u.same_shape(t)
    assert u.check() == []


def test_insert_events_reach_listeners():
    t = HstTree()
    seen = []
    t.listeners.append(seen.append)
    f = morton_lca_exp(np.array([0, 5, 9, 200]), 4)
    for x in range(1, 5):
        t.insert(x, f)
    assert [ev.leaf.point for ev in seen] == [1, 2, 3, 4]


@pytest.mark.parametrize("variant", ["doubling", "euclidean"])
def test_embedding_dominates_and_is_online(variant):
    pts = np.random.default_rng(2).random((40, 2))
    st = PointStream(euclidean_from(pts[:20]))
    emb = HstEmbedding(st, 7, variant)
    early = {(a, b): emb.distance(a, b) for a in range(1, 21) for b in range(a + 1, 21)}
    for p in pts[20:]:
        emb.add(p)
    assert emb.tree.check() == []
    for (a, b), d in early.items():
        assert emb.distance(a, b) == d
    for a in range(1, 41):
        for b in range(a + 1, 41):
            assert emb.distance(a, b) >= st.metric.distance(a, b)


def test_same_seed_same_tree():
    pts = np.random.default_rng(3).random((30, 2))
    a = HstEmbedding(PointStream(euclidean_from(pts)), 11)
    b = HstEmbedding(PointStream(euclidean_from(pts)), 11)
    assert a.tree.export() == b.tree.export()
