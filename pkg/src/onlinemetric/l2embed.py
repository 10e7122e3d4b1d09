"""Online embedding into Euclidean space.

A random map f sends x to the vector of its coordinates f_i(x), one per
scale i.  At scale i, x joins the cluster of the first net point q (net
level i-3) with d(q, x) <= 2^i/4 * r_q; its paddedness is

    pad_i(x) = min over net points k <= q of |r_k 2^i/4 - d(k, x)|,

and f_i(x) = alpha_{q,i} * pad_i(x), where alpha_{q,i} is q's random bit on
the three scales top(q)+1 .. top(q)+3 and 0 elsewhere (always 0 for x_1).

The deterministic embedding realizes D[j, q] = E ||f(x_j) - f(x_q)||^2.
The alpha bits are integrated out exactly; the radii are sampled, with
one random stream per point so that all pairs share the same draws and a
new point never changes an earlier estimate.  Vectors are then placed one
at a time by Gram-Schmidt; earlier vectors never move.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng as rngmod
from .decomp import NET_SHIFT, RadiusTable, texp_ppf
from .metric import PointStream

PIVOT_TOL = 1e-9


class RealizationError(RuntimeError):
    pass


def _lam(stream: PointStream, k: int) -> float:
    return 4.0 * stream.estimate_ddim(k)


def scale_window(stream: PointStream, x: int) -> tuple[int, int]:
    """Scales outside [lo, hi] have f_i(x) = 0 for every draw."""
    m = stream.metric
    d1 = m.distance(1, x)
    if x == 1 or d1 == 0:
        return (0, -1)
    md = math.inf
    for k in range(2, x + 1):
        row = m.row(k, k - 1)
        pos = row[row > 0]
        if pos.size:
            md = min(md, float(pos.min()))
    lo = math.floor(math.log2(md)) - 3
    hi = math.ceil(math.log2(4.0 * d1)) + 1
    return lo, hi


def _scale_terms(stream: PointStream, x: int, i: int, radii: np.ndarray):
    """Centers, paddedness and alpha weights of x at scale i for a batch of
    radius vectors (rows of `radii`, columns = points 1..x)."""
    tops = stream.nets.tops_array(x)
    net = np.nonzero(tops >= i + NET_SHIFT)[0]
    d = stream.metric.row(x, x)[net]
    reach = radii[:, net] * (2.0 ** i / 4.0)
    cap = d[None, :] <= reach
    ci = np.argmax(cap, axis=1)
    if not cap[np.arange(cap.shape[0]), ci].all():
        raise RuntimeError(f"point {x} has no center at scale {i}")
    gap = np.abs(reach - d[None, :])
    later = np.arange(net.size)[None, :] > ci[:, None]
    pad = np.where(later, np.inf, gap).min(axis=1)
    centers = net[ci] + 1
    ctop = tops[centers - 1]
    active = (centers != 1) & (i >= ctop + 1)
    return centers, pad, active


@dataclass
class PointCoords:
    """Per-scale data of one point across all radius draws."""
    scales: dict  # i -> (centers, pads, active)


class L2Embedding:
    def __init__(self, stream: PointStream, seed: int, budget: int = 2000,
                 tol: float = 0.05, strict: bool = False):
        if budget <= 0:
            raise ValueError("budget must be positive")
        self.stream = stream
        self.seed = seed
        self.budget = budget
        self._R = np.zeros((budget, 0))
        self.coords: list[PointCoords] = []
        self.D = np.zeros((0, 0))
        self.stderr = np.zeros((0, 0))
        self.gram = GramState(tol=tol, strict=strict)
        for x in range(1, len(stream) + 1):
            self._extend(x)

    def __len__(self) -> int:
        return len(self.coords)

    # -- sampling -----------------------------------------------------------------
    def _radius_column(self, k: int) -> np.ndarray:
        u = rngmod.spawn(self.seed, rngmod.L2_SAMPLES, k).random(self.budget)
        return texp_ppf(u, _lam(self.stream, k))

    def _extend(self, x: int) -> np.ndarray:
        self._R = np.concatenate([self._R, self._radius_column(x)[:, None]], axis=1)
        lo, hi = scale_window(self.stream, x)
        scales = {}
        for i in range(lo, hi + 1):
            c, p, a = _scale_terms(self.stream, x, i, self._R[:, :x])
            if a.any():
                scales[i] = (c, p, a)
        self.coords.append(PointCoords(scales))
        n = x
        D = np.zeros((n, n))
        S = np.zeros((n, n))
        D[: n - 1, : n - 1] = self.D
        S[: n - 1, : n - 1] = self.stderr
        for j in range(1, n):
            m, s = self.expected_sq_distance(j, n)
            D[j - 1, n - 1] = D[n - 1, j - 1] = m
            S[j - 1, n - 1] = S[n - 1, j - 1] = s
        self.D, self.stderr = D, S
        return self.gram.realize_next(D[n - 1, : n - 1])

    def add(self, payload) -> int:
        x = self.stream.append(payload)
        self._extend(x)
        return x

    def _samples(self, j: int, q: int) -> np.ndarray:
        a = self.coords[j - 1].scales
        b = self.coords[q - 1].scales
        tot = np.zeros(self.budget)
        for i in set(a) | set(b):
            pa = pb = 0.0
            if i in a:
                ca, da, aa = a[i]
                pa = np.where(aa, 0.5, 0.0)
            if i in b:
                cb, db, ab = b[i]
                pb = np.where(ab, 0.5, 0.0)
            if i in a and i in b:
                same = ca == cb
                diff = pa * da * da + pb * db * db - 2.0 * pa * pb * da * db
                tot += np.where(same, pa * (da - db) ** 2, diff)
            elif i in a:
                tot += pa * da * da
            else:
                tot += pb * db * db
        return tot

    def expected_sq_distance(self, j: int, q: int) -> tuple[float, float]:
        """Monte-Carlo estimate of E||f(x_j) - f(x_q)||^2 and its standard error."""
        if j == q:
            return 0.0, 0.0
        s = self._samples(j, q)
        err = float(s.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0
        return float(s.mean()), err

    # -- outputs ------------------------------------------------------------------
    def vectors(self) -> list[np.ndarray]:
        return self.gram.vectors()

    def distortion(self) -> tuple[float, float, float]:
        """(distortion, max expansion, max contraction) of the realized vectors."""
        Y = self.gram.matrix()
        n = Y.shape[0]
        exp, con = 0.0, 0.0
        for a in range(n):
            for b in range(a + 1, n):
                d = self.stream.metric.distance(a + 1, b + 1)
                if d == 0:
                    continue
                e = float(np.linalg.norm(Y[a] - Y[b])) / d
                exp = max(exp, e)
                con = max(con, math.inf if e == 0 else 1.0 / e)
        return exp * con, exp, con


# -- one concrete draw -------------------------------------------------------------
def paddedness(stream: PointStream, x: int, i: int, r: np.ndarray) -> float:
    _, p, _ = _scale_terms(stream, x, i, np.asarray(r, dtype=float)[None, :x])
    return float(p[0])


def coordinate(stream: PointStream, x: int, i: int, r: np.ndarray, alpha: np.ndarray) -> float:
    c, p, a = _scale_terms(stream, x, i, np.asarray(r, dtype=float)[None, :x])
    return float(p[0]) if a[0] and alpha[c[0] - 1] else 0.0


def single_sample_embed(stream: PointStream, seed: int) -> dict[int, dict[int, float]]:
    """One draw of f: point -> {scale: nonzero coordinate}."""
    table = RadiusTable(seed)
    for k in range(1, len(stream) + 1):
        table.add(k, stream.estimate_ddim(k))
    n = len(stream)
    r = table.r_array(n)[None, :].copy()
    alpha = np.array([table[k].alpha for k in range(1, n + 1)])
    out: dict[int, dict[int, float]] = {}
    for x in range(1, n + 1):
        lo, hi = scale_window(stream, x)
        vec = {}
        for i in range(lo, hi + 1):
            c, p, a = _scale_terms(stream, x, i, r[:, :x])
            v = float(p[0]) if a[0] and alpha[c[0] - 1] else 0.0
            if v != 0.0:
                vec[i] = v
        out[x] = vec
    return out


def sparse_sq_distance(u: dict[int, float], v: dict[int, float]) -> float:
    return float(sum((u.get(i, 0.0) - v.get(i, 0.0)) ** 2 for i in set(u) | set(v)))


# -- online Gram-Schmidt ---------------------------------------------------------------
class GramState:
    """Places y_1 = 0, y_2, ... one at a time from squared distances to the
    earlier points.  Each point adds at most one new direction; a negative
    residual (D not Euclidean up to noise) is clipped to zero."""

    def __init__(self, tol: float = 0.05, strict: bool = False):
        self.tol = tol
        self.strict = strict
        self._Y: list[np.ndarray] = []
        self.dim = 0
        self.corrections: list[float] = []

    def __len__(self) -> int:
        return len(self._Y)

    def matrix(self) -> np.ndarray:
        Y = np.zeros((len(self._Y), self.dim))
        for k, y in enumerate(self._Y):
            Y[k, : y.size] = y
        return Y

    def vectors(self) -> list[np.ndarray]:
        return [y.copy() for y in self._Y]

    def realize_next(self, drow) -> np.ndarray:
        drow = np.asarray(drow, dtype=float)
        n = len(self._Y) + 1
        if drow.size != n - 1:
            raise ValueError(f"need {n - 1} squared distances, got {drow.size}")
        if n == 1:
            y = np.zeros(0)
            self._Y.append(y)
            self.corrections.append(0.0)
            return y.copy()
        Y = self.matrix()
        norms = (Y * Y).sum(axis=1)
        r2 = drow[0]
        g = (norms + r2 - drow) / 2.0
        if self.dim:
            c, *_ = np.linalg.lstsq(Y[1:], g[1:], rcond=None)
        else:
            c = np.zeros(0)
        res = r2 - float(c @ c)
        if res > PIVOT_TOL * max(r2, 1e-300):
            y = np.concatenate([c, [math.sqrt(res)]])
            self.dim += 1
        else:
            y = c
        self._Y.append(y)
        full = self.matrix()
        got = ((full[:-1] - full[-1]) ** 2).sum(axis=1)
        rel = np.abs(got - drow) / np.maximum(drow, 1e-300)
        corr = float(rel.max()) if rel.size else 0.0
        self.corrections.append(corr)
        if self.strict and corr > self.tol:
            raise RealizationError(f"point {n}: squared distances moved by {corr:.3g} (relative)")
        return y.copy()
