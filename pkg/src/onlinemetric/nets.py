"""Online nested nets.

Point x belongs to N_i for every i <= top(x).  When x arrives, top(x) is
the largest t such that d(x, N_i) > 2^i for every i <= t, where N_i is the
net before x was added.  x_1 belongs to every net, and a point at distance 0
from an earlier point joins none.
"""
from __future__ import annotations

import math

import numpy as np

INF = math.inf


class NetHierarchy:
    def __init__(self, metric):
        self.metric = metric
        self._tops = np.zeros(16)
        self.n = 0

    def tops_array(self, upto: int | None = None) -> np.ndarray:
        """Top levels of points 1..upto as floats (+inf for x_1, -inf for duplicates)."""
        return self._tops[: self.n if upto is None else upto]

    def top(self, x: int) -> float:
        if not 1 <= x <= self.n:
            raise KeyError(x)
        return float(self._tops[x - 1])

    def insert(self, x: int) -> float:
        if x != self.n + 1:
            raise ValueError("points must be inserted in arrival order")
        if self.n == self._tops.size:
            t = np.zeros(2 * self._tops.size)
            t[: self.n] = self._tops[: self.n]
            self._tops = t
        if x == 1:
            top = INF
        else:
            row = self.metric.row(x, x - 1)
            md = float(row.min())
            if md == 0.0:
                top = -INF
            else:
                tops = self._tops[: x - 1]
                i = math.floor(math.log2(md)) - 1
                # below i every level already satisfies d(x, N_i) >= md > 2^i
                while float(row[tops >= i].min()) > 2.0 ** i:
                    i += 1
                top = float(i - 1)
        self._tops[x - 1] = top
        self.n = x
        return top

    def window(self) -> tuple[int, int]:
        """Levels where the nets are nontrivial: [i_lo, i_hi]."""
        st = self.metric.stats
        if st.n < 2 or math.isinf(st.min_dist):
            return (0, 0)
        return (math.floor(math.log2(st.min_dist)) - 1, math.ceil(math.log2(st.diameter)) + 3)

    def net_at(self, i: float) -> list[int]:
        return [int(v) + 1 for v in np.nonzero(self._tops[: self.n] >= i)[0]]

    def nearest_net_point(self, x: int, i: float) -> tuple[int, float]:
        """Closest point of N_i to x (ties toward the smaller index)."""
        row = self.metric.row(x, self.n)
        mask = self._tops[: self.n] >= i
        d = np.where(mask, row, INF)
        k = int(np.argmin(d))
        return k + 1, float(d[k])


def check_nets(nets: NetHierarchy, levels=None) -> list[str]:
    """Exhaustive separation/covering/nesting check; returns violations found."""
    errs = []
    n = nets.n
    if n == 0:
        return errs
    mat = nets.metric.matrix(range(1, n + 1))
    tops = nets.tops_array()
    if levels is None:
        lo, hi = nets.window()
        levels = range(lo, hi + 1)
    for i in levels:
        mem = np.nonzero(tops >= i)[0]
        sub = mat[np.ix_(mem, mem)]
        off = sub[~np.eye(mem.size, dtype=bool)]
        if off.size and float(off.min()) <= 2.0 ** i:
            errs.append(f"separation violated at level {i}")
        cover = mat[:, mem].min(axis=1)
        if float(cover.max()) >= 2.0 ** (i + 1):
            errs.append(f"covering violated at level {i}")
        if not set(np.nonzero(tops >= i + 1)[0]) <= set(mem):
            errs.append(f"nesting violated at level {i}")
    return errs
