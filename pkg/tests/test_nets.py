import math

import numpy as np

from onlinemetric.metric import PointStream, euclidean_from
from onlinemetric.nets import check_nets


def test_nets_are_valid_on_random_sets():
    for seed in range(10):
        pts = np.random.default_rng(seed).random((60, 2)) * 10.0 ** (seed % 3)
        st = PointStream(euclidean_from(pts))
        assert check_nets(st.nets) == []


def test_first_point_is_everywhere():
    st = PointStream(euclidean_from(np.random.default_rng(0).random((10, 2))))
    assert st.nets.top(1) == math.inf
    lo, hi = st.nets.window()
    for i in range(lo, hi + 1):
        assert 1 in st.nets.net_at(i)


def test_nearest_net_point_is_within_covering_radius():
    st = PointStream(euclidean_from(np.random.default_rng(3).random((50, 2))))
    for x in range(1, 51):
        for i in range(-5, 2):
            _, d = st.nets.nearest_net_point(x, i)
            assert d < 2.0 ** (i + 1)
