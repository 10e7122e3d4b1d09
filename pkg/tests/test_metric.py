import math

import numpy as np
import pytest

from onlinemetric.metric import (Metric, MetricError, PointStream, euclidean_from,
                                 explicit_from, load_metric)


def test_euclidean_distances_and_growth():
    pts = np.random.default_rng(0).random((40, 3))
    m = euclidean_from(pts)
    assert len(m) == 40
    assert m.distance(3, 17) == pytest.approx(np.linalg.norm(pts[2] - pts[16]))
    assert m.row(10, 9).shape == (9,)
    D = m.matrix()
    assert np.allclose(D, D.T)


def test_explicit_rows():
    D = np.array([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]])
    m = explicit_from(D)
    assert m.distance(1, 3) == 2
    assert m.distance(3, 2) == 1.5
    with pytest.raises(MetricError):
        m.append([1.0])


def test_bad_payloads():
    m = Metric("euclidean", dim=2)
    with pytest.raises(MetricError):
        m.append([1.0, 2.0, 3.0])
    with pytest.raises(MetricError):
        m.append([math.nan, 0.0])
    e = Metric("explicit")
    e.append([])
    with pytest.raises(MetricError):
        e.append([-1.0])


def test_prefix_stats_match_recomputation():
    m = euclidean_from(np.random.default_rng(1).random((25, 2)))
    st = m.recompute_stats()
    assert m.stats.diameter == pytest.approx(st.diameter)
    assert m.stats.min_dist == pytest.approx(st.min_dist)
    assert m.stats.aspect_ratio >= 1


def test_load_formats():
    m = load_metric("id,x,y\n1,0,0\n2,3,4\n", "csv")
    assert m.distance(1, 2) == 5
    t = load_metric("-\n1\n2 1.5\n", "matrix")
    assert t.distance(3, 1) == 2
    assert load_metric("1\n2 1.5\n", "matrix").distance(3, 2) == 1.5


def test_ddim_estimate_is_monotone_and_small_on_a_line():
    st = PointStream(euclidean_from(np.random.default_rng(2).random((60, 1))))
    h = [st.estimate_ddim(k) for k in range(1, 61)]
    assert h == sorted(h)
    assert 1 <= h[-1] <= 3


def test_duplicates_are_allowed():
    st = PointStream(euclidean_from([[0.0], [1.0], [1.0], [0.0]]))
    assert st.metric.distance(2, 3) == 0
    assert st.nets.top(3) == -math.inf
