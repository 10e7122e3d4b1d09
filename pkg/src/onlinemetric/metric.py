"""Append-only metric point sequences.

Points are numbered 1, 2, ... in arrival order.  Two storage modes exist:
coordinates in R^d (distances computed on demand) and an explicit distance
matrix filled one lower-triangular row per arriving point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .nets import NetHierarchy


class MetricError(ValueError):
    pass


@dataclass
class PrefixStats:
    n: int = 0
    diameter: float = 0.0
    min_dist: float = math.inf

    @property
    def aspect_ratio(self) -> float:
        if self.n < 2 or math.isinf(self.min_dist):
            return 1.0
        return self.diameter / self.min_dist


class Metric:
    """Distance oracle over an append-only point sequence."""

    def __init__(self, mode: str = "euclidean", dim: int | None = None, verify: bool = False):
        if mode not in ("euclidean", "explicit"):
            raise MetricError(f"unknown mode {mode!r}")
        self.mode = mode
        self.dim = dim
        self.verify = verify
        self.n = 0
        self.stats = PrefixStats()
        self._cap = 16
        if mode == "euclidean":
            self._coords = np.zeros((self._cap, dim or 1))
        else:
            self._mat = np.zeros((self._cap, self._cap))

    def __len__(self) -> int:
        return self.n

    # -- growth -----------------------------------------------------------
    def _grow(self) -> None:
        cap = self._cap * 2
        if self.mode == "euclidean":
            c = np.zeros((cap, self._coords.shape[1]))
            c[: self.n] = self._coords[: self.n]
            self._coords = c
        else:
            m = np.zeros((cap, cap))
            m[: self.n, : self.n] = self._mat[: self.n, : self.n]
            self._mat = m
        self._cap = cap

    def append(self, payload: Sequence[float] | np.ndarray) -> int:
        """Add a point given by coordinates or by its distances to all earlier points."""
        arr = np.asarray(payload, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise MetricError("payload must be finite")
        if self.mode == "euclidean":
            if self.dim is None:
                self.dim = arr.size
                self._coords = np.zeros((self._cap, self.dim))
            if arr.size != self.dim:
                raise MetricError(f"expected {self.dim} coordinates, got {arr.size}")
        else:
            if arr.size != self.n:
                raise MetricError(f"expected a distance row of length {self.n}, got {arr.size}")
            if np.any(arr < 0):
                raise MetricError("negative distance")
        if self.n == self._cap:
            self._grow()
        k = self.n
        if self.mode == "euclidean":
            self._coords[k] = arr
        else:
            self._mat[k, :k] = arr
            self._mat[:k, k] = arr
        self.n += 1
        pid = self.n
        row = self.row(pid, pid - 1)
        if self.verify and self.mode == "explicit":
            self._check_triangles(row)
        st = self.stats
        st.n = self.n
        if row.size:
            st.diameter = max(st.diameter, float(row.max()))
            pos = row[row > 0]
            if pos.size:
                st.min_dist = min(st.min_dist, float(pos.min()))
        return pid

    def _check_triangles(self, row: np.ndarray) -> None:
        k = row.size
        if k < 2:
            return
        old = self._mat[:k, :k]
        tol = 1e-9 * max(1.0, float(row.max()), float(old.max()))
        # d(i,j) <= d(i,new) + d(new,j) and d(i,new) <= d(i,j) + d(j,new)
        if np.any(old > row[:, None] + row[None, :] + tol):
            raise MetricError("triangle inequality violated")
        if np.any(row[:, None] > old + row[None, :] + tol):
            raise MetricError("triangle inequality violated")

    # -- access ----------------------------------------------------------
    def _check_id(self, a: int) -> None:
        if not 1 <= a <= self.n:
            raise MetricError(f"unknown point id {a}")

    def distance(self, a: int, b: int) -> float:
        self._check_id(a)
        self._check_id(b)
        if a == b:
            return 0.0
        if self.mode == "euclidean":
            diff = self._coords[a - 1] - self._coords[b - 1]
            return float(math.sqrt(float(diff @ diff)))
        return float(self._mat[a - 1, b - 1])

    def row(self, x: int, upto: int | None = None) -> np.ndarray:
        """Distances from x to points 1..upto (default: all points)."""
        self._check_id(x)
        if upto is None:
            upto = self.n
        if self.mode == "euclidean":
            if self.dim == 1:
                return np.abs(self._coords[:upto, 0] - self._coords[x - 1, 0])
            diff = self._coords[:upto] - self._coords[x - 1]
            return np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return self._mat[x - 1, :upto].copy()

    def coords(self, x: int) -> np.ndarray:
        if self.mode != "euclidean":
            raise MetricError("coordinates only exist in euclidean mode")
        self._check_id(x)
        return self._coords[x - 1].copy()

    def matrix(self, ids: Iterable[int] | None = None) -> np.ndarray:
        """Dense distance matrix over the given ids (default: all points)."""
        idx = np.arange(self.n) if ids is None else np.asarray(list(ids), dtype=int) - 1
        if self.mode == "euclidean":
            c = self._coords[idx]
            diff = c[:, None, :] - c[None, :, :]
            return np.sqrt((diff ** 2).sum(-1))
        return self._mat[np.ix_(idx, idx)].copy()

    def recompute_stats(self) -> PrefixStats:
        """Stats from scratch, for checking the incremental ones."""
        st = PrefixStats(n=self.n)
        if self.n >= 2:
            m = self.matrix()
            st.diameter = float(m.max())
            pos = m[m > 0]
            if pos.size:
                st.min_dist = float(pos.min())
        return st


class DdimEstimator:
    """Net-based doubling dimension estimate.

    For every net level i the largest number of N_i points inside a ball of
    radius 2^(i+2) around an N_i point is tracked.  The estimate is
    ceil(log2(max count) * slack / 2), at least 1, as a running maximum.
    With the default slack 2 this is ceil(log2(max count)).
    """

    def __init__(self, nets: NetHierarchy, slack: float = 2.0):
        self.nets = nets
        self.slack = slack
        self.counts: dict[int, np.ndarray] = {}
        self.max_count = 1
        self.history: list[int] = []

    def _estimate(self) -> int:
        if self.max_count <= 1:
            return 1
        return max(1, math.ceil(math.log2(self.max_count) * self.slack / 2.0))

    def update(self, x: int) -> int:
        nets = self.nets
        top = nets.top(x)
        if x > 1 and top != -math.inf:
            row = nets.metric.row(x, x - 1)
            tops = nets.tops_array(x - 1)
            lo = math.floor(math.log2(float(row.min()))) - 3
            for i in range(lo, int(top) + 1):
                cnt = self.counts.get(i)
                if cnt is None:
                    # any pair within 2^(i+2) inside N_i would have opened the
                    # level at the later point's arrival, so all counts are 1
                    cnt = np.ones(16, dtype=np.int64)
                    self.counts[i] = cnt
                if cnt.size < x:
                    grown = np.ones(max(x, 2 * cnt.size), dtype=np.int64)
                    grown[: cnt.size] = cnt
                    cnt = grown
                    self.counts[i] = cnt
                nbr = np.nonzero((tops >= i) & (row <= 2.0 ** (i + 2)))[0]
                cnt[nbr] += 1
                cnt[x - 1] = 1 + nbr.size
                m = int(cnt[x - 1])
                if nbr.size:
                    m = max(m, int(cnt[nbr].max()))
                self.max_count = max(self.max_count, m)
        est = self._estimate()
        if self.history:
            est = max(est, self.history[-1])
        self.history.append(est)
        return est


class PointStream:
    """A metric together with its online nets and ddim estimates."""

    def __init__(self, metric: Metric, slack: float = 2.0):
        self.metric = metric
        self.nets = NetHierarchy(metric)
        self.ddim = DdimEstimator(self.nets, slack)
        for x in range(1, len(metric) + 1):
            self.nets.insert(x)
            self.ddim.update(x)

    def __len__(self) -> int:
        return len(self.metric)

    def append(self, payload) -> int:
        x = self.metric.append(payload)
        self.nets.insert(x)
        self.ddim.update(x)
        return x

    def estimate_ddim(self, prefix: int) -> int:
        if not 1 <= prefix <= len(self.ddim.history):
            raise MetricError(f"prefix {prefix} out of range")
        return self.ddim.history[prefix - 1]


def euclidean_from(points: Iterable[Sequence[float]], verify: bool = False) -> Metric:
    pts = [np.asarray(p, dtype=float).reshape(-1) for p in points]
    m = Metric("euclidean", dim=pts[0].size if pts else None, verify=verify)
    for p in pts:
        m.append(p)
    return m


def explicit_from(matrix: np.ndarray, verify: bool = False) -> Metric:
    mat = np.asarray(matrix, dtype=float)
    if mat.shape[0] != mat.shape[1]:
        raise MetricError("distance matrix must be square")
    if not np.allclose(mat, mat.T):
        raise MetricError("distance matrix must be symmetric")
    m = Metric("explicit", verify=verify)
    for k in range(mat.shape[0]):
        m.append(mat[k, :k])
    return m


def read_csv_points(text: str) -> list[list[float]]:
    """Parse `id,x1,...,xd` rows (a header row is skipped if present)."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            if not rows:
                continue
            raise
        rows.append(vals)
    return rows


def read_matrix_rows(text: str) -> list[list[float]]:
    """Parse a lower-triangular matrix, one row per point.

    Row k holds d(k,1), ..., d(k,k-1).  The first point's row is empty; it
    may be written as a line containing only "-" or left out entirely.
    Blank lines and lines starting with # are ignored.
    """
    rows = []
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if s == "-":
            rows.append([])
            continue
        rows.append([float(v) for v in s.replace(",", " ").split()])
    if rows and len(rows[0]) == 1:
        rows.insert(0, [])
    return rows


def load_metric(text: str, fmt: str, verify: bool = False) -> Metric:
    if fmt == "csv":
        return euclidean_from(read_csv_points(text), verify=verify)
    if fmt == "matrix":
        m = Metric("explicit", verify=verify)
        for row in read_matrix_rows(text):
            m.append(row)
        return m
    raise MetricError(f"unknown format {fmt!r}")
