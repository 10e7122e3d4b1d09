"""Online low-diameter decompositions.

Doubling metrics: at scale i (cluster diameter 2^i) every point q of the
net level i-3 owns the ball of radius 2^i/4 * r_q, minus the balls of
earlier net points.  The radius r_q ~ Texp[1,2](lambda_q) is drawn once per
point and shared by all scales.

Euclidean space: at scale i a ball around x_1 of radius uniform in
[2^i/4, 2^i/2] forms one cluster; the rest of space is carved by balls of
radius 2^i/2 around the points of a Poisson space-time process, each point
joining the earliest ball that contains it.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from . import rng as rngmod

# net level used for scale i is i + NET_SHIFT (separation 2^i/8, covering < 2^i/4)
NET_SHIFT = -3


# -- truncated exponential ----------------------------------------------------
def texp_pdf(y, lam: float, lo: float = 1.0, hi: float = 2.0):
    y = np.asarray(y, dtype=float)
    z = -math.expm1(-lam * (hi - lo))
    p = lam * np.exp(-lam * (y - lo)) / z
    return np.where((y >= lo) & (y <= hi), p, 0.0)


def texp_cdf(y, lam: float, lo: float = 1.0, hi: float = 2.0):
    y = np.clip(np.asarray(y, dtype=float), lo, hi)
    z = -math.expm1(-lam * (hi - lo))
    return -np.expm1(-lam * (y - lo)) / z


def texp_ppf(u, lam: float, lo: float = 1.0, hi: float = 2.0):
    u = np.asarray(u, dtype=float)
    z = -math.expm1(-lam * (hi - lo))
    return np.minimum(lo - np.log1p(-u * z) / lam, hi)


def texp_mean(lam: float, lo: float = 1.0, hi: float = 2.0) -> float:
    w = hi - lo
    return lo + 1.0 / lam - w * math.exp(-lam * w) / (-math.expm1(-lam * w))


# -- per-point radii ----------------------------------------------------------
@dataclass(frozen=True)
class RadiusSample:
    point: int
    r: float
    lam: float
    alpha: int


def sample_radius(x: int, lam: float, seed: int) -> RadiusSample:
    g = rngmod.spawn(seed, rngmod.RADIUS, x)
    u, b = g.random(2)
    alpha = 0 if x == 1 else int(b < 0.5)
    return RadiusSample(x, float(texp_ppf(u, lam)), float(lam), alpha)


class RadiusTable:
    """One radius sample per point, lambda = 4 * ddim estimate at arrival."""

    def __init__(self, seed: int):
        self.seed = seed
        self.samples: list[RadiusSample] = []
        self._r = np.zeros(16)

    def __len__(self) -> int:
        return len(self.samples)

    def add(self, x: int, ddim: int) -> RadiusSample:
        if x != len(self.samples) + 1:
            raise ValueError("radii must be sampled in arrival order")
        s = sample_radius(x, 4.0 * ddim, self.seed)
        self.samples.append(s)
        if self._r.size < x:
            r = np.zeros(2 * self._r.size)
            r[: self._r.size] = self._r
            self._r = r
        self._r[x - 1] = s.r
        return s

    def r_array(self, upto: int) -> np.ndarray:
        return self._r[:upto]

    def __getitem__(self, x: int) -> RadiusSample:
        return self.samples[x - 1]


@dataclass(frozen=True)
class ClusterAssignment:
    point: int
    scale: int
    center: Hashable
    permanent: bool = True


class DoublingDecomposition:
    """Ball-growing decomposition of a PointStream, all scales at once."""

    def __init__(self, stream, seed: int):
        self.stream = stream
        self.radii = RadiusTable(seed)
        self._memo: dict[tuple[int, int], int] = {}
        self.sync()

    def sync(self) -> None:
        """Draw radii for points appended to the stream since the last call."""
        for x in range(len(self.radii) + 1, len(self.stream) + 1):
            self.radii.add(x, self.stream.estimate_ddim(x))

    def center(self, x: int, i: int) -> int:
        key = (x, i)
        c = self._memo.get(key)
        if c is not None:
            return c
        tops = self.stream.nets.tops_array(x)
        row = self.stream.metric.row(x, x)
        r = self.radii.r_array(x)
        ok = (tops >= i + NET_SHIFT) & (row <= (2.0 ** i / 4.0) * r)
        k = int(np.argmax(ok))
        if not ok[k]:
            raise RuntimeError(f"no cluster center for point {x} at scale {i}")
        c = k + 1
        self._memo[key] = c
        return c

    def cluster_of(self, x: int, i: int) -> ClusterAssignment:
        return ClusterAssignment(x, i, self.center(x, i))

    def top_scale(self, x: int, y: int) -> int:
        """A scale at which x and y are certainly both in x_1's cluster."""
        m = self.stream.metric
        far = max(m.distance(1, x), m.distance(1, y))
        return math.ceil(math.log2(4.0 * far)) if far > 0 else 0


def _ball_volume(dim: int, radius: float) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius ** dim


class EuclideanDecomposition:
    """Lazy carving decomposition of R^d, consistent for a fixed seed.

    Space is tiled by boxes of side 4*2^i.  Each (scale, layer, box) holds a
    Poisson number of centers with uniform positions and arrival times in
    [layer, layer+1); the rate gives about `mean_centers` centers per carving
    ball and layer.  A point joins the earliest center within 2^i/2.
    """

    BALL = ("x1-ball",)

    def __init__(self, metric, seed: int, mean_centers: float = 8.0):
        if metric.mode != "euclidean":
            raise ValueError("euclidean decomposition needs coordinates")
        self.metric = metric
        self.seed = seed
        self.mean_centers = mean_centers
        self._ball: dict[int, float] = {}
        self._boxes: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
        self._memo: dict[tuple[int, int], Hashable] = {}

    def sync(self) -> None:
        pass

    def ball_radius(self, i: int) -> float:
        rb = self._ball.get(i)
        if rb is None:
            g = rngmod.spawn(self.seed, rngmod.EUCLID_BALL, i)
            delta = 2.0 ** i
            rb = float(g.uniform(delta / 4.0, delta / 2.0))
            self._ball[i] = rb
        return rb

    def _box(self, i: int, layer: int, idx: tuple[int, ...]):
        key = (i, layer, idx)
        got = self._boxes.get(key)
        if got is None:
            d = len(idx)
            side = 4.0 * 2.0 ** i
            rate = self.mean_centers * side ** d / _ball_volume(d, 2.0 ** i / 2.0)
            g = rngmod.spawn(self.seed, rngmod.EUCLID_CARVE, i, layer, *idx)
            cnt = int(g.poisson(rate))
            pos = (np.asarray(idx, dtype=float) + g.random((cnt, d))) * side
            times = layer + g.random(cnt)
            got = (pos, times)
            self._boxes[key] = got
        return got

    def center(self, x: int, i: int) -> Hashable:
        key = (x, i)
        c = self._memo.get(key)
        if c is not None:
            return c
        m = self.metric
        if m.distance(1, x) <= self.ball_radius(i):
            c = self.BALL
        else:
            p = m.coords(x)
            rad = 2.0 ** i / 2.0
            side = 4.0 * 2.0 ** i
            lo = np.floor((p - rad) / side).astype(int)
            hi = np.floor((p + rad) / side).astype(int)
            ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
            layer = 0
            c = None
            while c is None:
                best_t = math.inf
                for idx in itertools.product(*ranges):
                    pos, times = self._box(i, layer, idx)
                    if not times.size:
                        continue
                    dd = np.sqrt(((pos - p) ** 2).sum(1))
                    hit = np.nonzero(dd <= rad)[0]
                    if hit.size:
                        j = hit[np.argmin(times[hit])]
                        if times[j] < best_t:
                            best_t = float(times[j])
                            c = (layer, idx, int(j))
                layer += 1
        self._memo[key] = c
        return c

    def cluster_of(self, x: int, i: int) -> ClusterAssignment:
        return ClusterAssignment(x, i, self.center(x, i))

    def top_scale(self, x: int, y: int) -> int:
        m = self.metric
        far = max(m.distance(1, x), m.distance(1, y))
        return math.ceil(math.log2(4.0 * far)) if far > 0 else 0


def center_label(c: Hashable) -> str:
    if isinstance(c, (int, np.integer)):
        return str(int(c))
    if c == EuclideanDecomposition.BALL:
        return "x1"
    layer, idx, j = c
    return "c" + str(layer) + ":" + "/".join(str(v) for v in idx) + ":" + str(j)
