"""Exact offline answers for small instances.

Minimum-weight perfect matching by subset dynamic programming, on the line
by sorting, on ultrametrics bottom-up; MST by Prim; all-pairs shortest
paths.  These serve as ground truth for the online algorithms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import floyd_warshall

MAX_DP = 20


class OracleError(ValueError):
    pass


@dataclass
class OracleResult:
    cost: float
    edges: list = field(default_factory=list)
    method: str = ""


def _subset_dp(dist: np.ndarray) -> np.ndarray:
    """f[mask] = min perfect matching cost of the points in mask (even masks)."""
    n = dist.shape[0]
    size = 1 << n
    f = np.full(size, np.inf)
    f[0] = 0.0
    if n < 2:
        return f
    masks = np.arange(size, dtype=np.int64)
    pc = np.bitwise_count(masks)
    low = masks & -masks
    lowidx = np.zeros(size, dtype=np.int64)
    lowidx[1:] = np.log2(low[1:]).astype(np.int64)
    for k in range(2, n + 1, 2):
        sel = masks[pc == k]
        li = lowidx[sel]
        rest = sel ^ (np.int64(1) << li)
        best = np.full(sel.size, np.inf)
        for j in range(n):
            bit = np.int64(1) << j
            has = (rest & bit) != 0
            if not has.any():
                continue
            r = rest[has]
            cand = dist[li[has], j] + f[r ^ bit]
            best[has] = np.minimum(best[has], cand)
        f[sel] = best
    return f


def _reconstruct(dist: np.ndarray, f: np.ndarray, mask: int) -> list[tuple[int, int]]:
    edges = []
    n = dist.shape[0]
    while mask:
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        target = f[mask]
        best_j, best_v = -1, np.inf
        for j in range(n):
            if rest >> j & 1:
                v = dist[i, j] + f[rest ^ (1 << j)]
                if v < best_v:
                    best_j, best_v = j, v
        if not np.isclose(best_v, target, rtol=1e-12, atol=0.0) and best_v != target:
            raise OracleError("inconsistent dynamic program")
        edges.append((i, best_j))
        mask = rest ^ (1 << best_j)
    return edges


def _as_dist(dist) -> np.ndarray:
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise OracleError("need a square distance matrix")
    return d


def mwpm_bruteforce(dist) -> OracleResult:
    """Exact minimum-weight perfect matching of at most 20 points.

    Edges are index pairs into the matrix."""
    d = _as_dist(dist)
    n = d.shape[0]
    if n % 2:
        raise OracleError("odd number of points")
    if n > MAX_DP:
        raise OracleError(f"at most {MAX_DP} points")
    f = _subset_dp(d)
    full = (1 << n) - 1
    edges = _reconstruct(d, f, full)
    cost = float(sum(d[a, b] for a, b in edges))
    return OracleResult(cost, edges, "subset-dp")


def mwpm_prefix_costs(dist) -> list[float]:
    """Optimal cost of every even prefix 2, 4, ... in one dynamic program."""
    d = _as_dist(dist)
    n = d.shape[0]
    if n > MAX_DP:
        raise OracleError(f"at most {MAX_DP} points")
    f = _subset_dp(d)
    return [float(f[(1 << k) - 1]) for k in range(2, n + 1, 2)]


def mwpm_line(xs) -> OracleResult:
    """Points on the real line: sort and pair neighbours."""
    x = np.asarray(xs, dtype=float).reshape(-1)
    if x.size % 2:
        raise OracleError("odd number of points")
    order = np.argsort(x, kind="stable")
    edges = [(int(order[k]), int(order[k + 1])) for k in range(0, x.size, 2)]
    cost = float(sum(abs(x[a] - x[b]) for a, b in edges))
    return OracleResult(cost, edges, "line-sort")


def mwpm_ultrametric(tree, active) -> OracleResult:
    """Bottom-up optimum on an HST: each node pairs the unmatched points
    coming up from its children at the cost of its own label."""
    act = set(active)
    if len(act) % 2:
        raise OracleError("odd number of points")
    if not act:
        return OracleResult(0.0, [], "ultrametric")
    up: dict[int, int | None] = {}
    edges = []
    cost = 0.0
    order = list(tree.preorder())
    for u in reversed(order):
        if u.is_leaf:
            up[u.id] = u.point if u.point in act else None
            continue
        loose = [up[c.id] for c in u.children if up[c.id] is not None]
        while len(loose) >= 2:
            a, b = loose.pop(), loose.pop()
            edges.append((a, b))
            cost += u.label
        up[u.id] = loose[0] if loose else None
    return OracleResult(cost, edges, "ultrametric")


def mst_cost(dist) -> float:
    """Prim's algorithm on a dense distance matrix."""
    d = _as_dist(dist)
    n = d.shape[0]
    if n == 0:
        raise OracleError("empty point set")
    inside = np.zeros(n, dtype=bool)
    inside[0] = True
    best = d[0].copy()
    total = 0.0
    for _ in range(n - 1):
        cand = np.where(inside, np.inf, best)
        j = int(np.argmin(cand))
        total += float(cand[j])
        inside[j] = True
        best = np.minimum(best, d[j])
    return total


def shortest_paths(n: int, edges) -> np.ndarray:
    """All-pairs shortest path lengths of an undirected weighted graph."""
    rows, cols, w = [], [], []
    for a, b, c in edges:
        rows += [a, b]
        cols += [b, a]
        w += [c, c]
    g = csr_matrix((w, (rows, cols)), shape=(n, n))
    return floyd_warshall(g, directed=False)


def _texp_cell_weights(edges: np.ndarray, lam: float) -> np.ndarray:
    """Probability of each cell [edges[g], edges[g+1]] under Texp[1,2](lam)."""
    z = 1.0 - np.exp(-lam)
    cdf = (1.0 - np.exp(-lam * (edges - 1.0))) / z
    return np.diff(cdf)


def l2_sq_quadrature(dist, tops, lams, j: int, q: int, grid: int = 1000,
                     max_vars: int = 3, max_cells: int = 4_000_000) -> float:
    """E||f(x_j) - f(x_q)||^2 by brute-force integration.

    The radii of the net points that can matter at a scale are put on a
    midpoint grid (`grid` cells per variable, fewer when the tensor grid
    would exceed `max_cells`) and the alpha bits of the two clusters are
    enumerated.  Scales are summed, since the expectation of a
    sum of coordinates is the sum of expectations.  Raises OracleError when
    a scale has more than `max_vars` relevant radii.

    dist is the distance matrix of points 1..n, tops[k-1] the highest net
    level of point k (inf for the first point) and lams[k-1] its radius rate.
    """
    d = _as_dist(dist)
    tops = np.asarray(tops, dtype=float)
    if j == q:
        return 0.0
    upto = max(j, q)
    pos = d[:upto, :upto][d[:upto, :upto] > 0]
    far = max(d[0, j - 1], d[0, q - 1])
    if far == 0:
        return 0.0
    lo = int(np.floor(np.log2(pos.min()))) - 3
    hi = int(np.ceil(np.log2(4.0 * far))) + 1
    total = 0.0
    for i in range(lo, hi + 1):
        delta = 2.0 ** i
        net = [k for k in range(1, upto + 1) if tops[k - 1] >= i - 3]
        rel: list[int] = []
        for x in (j, q):
            for k in net:
                if d[k - 1, x - 1] < delta and k not in rel:
                    rel.append(k)
                if d[k - 1, x - 1] <= delta / 4.0:
                    break
        rel.sort()
        if len(rel) > max_vars:
            raise OracleError(f"scale {i} has {len(rel)} relevant radii")
        g = grid
        while rel and g ** len(rel) > max_cells:
            g -= 1
        edges = np.linspace(1.0, 2.0, g + 1)
        mids = (edges[:-1] + edges[1:]) / 2.0
        axes = [mids] * len(rel)
        wts = [_texp_cell_weights(edges, lams[k - 1]) for k in rel]
        if rel:
            mesh = np.meshgrid(*axes, indexing="ij")
            wmesh = np.meshgrid(*wts, indexing="ij")
            w = np.prod(np.stack([m.ravel() for m in wmesh]), axis=0)
            rad = {k: mesh[t].ravel() for t, k in enumerate(rel)}
        else:
            w = np.ones(1)
            rad = {}
        size = w.size

        def cluster(x):
            center = np.zeros(size, dtype=np.int64)
            pad = np.full(size, np.inf)
            done = np.zeros(size, dtype=bool)
            for k in net:
                r = rad.get(k, np.full(size, 1.5))
                reach = r * delta / 4.0
                dk = d[k - 1, x - 1]
                live = ~done
                pad = np.where(live, np.minimum(pad, np.abs(reach - dk)), pad)
                hit = live & (dk <= reach)
                center[hit] = k
                done |= hit
            if not done.all():
                raise OracleError(f"point {x} uncovered at scale {i}")
            return center, pad

        cj, pj = cluster(j)
        cq, pq = cluster(q)

        def alpha_on(c):
            # alpha_{c,i} is a fair bit on the three highest scales where c
            # is a center candidate, zero below and for the first point
            itil = tops[c - 1] + 3
            return (c != 1) & (i >= itil - 2)

        oj, oq = alpha_on(cj), alpha_on(cq)
        val = np.zeros(size)
        for a in (0, 1):
            for b in (0, 1):
                same = cj == cq
                p = np.where(same, 0.5 if a == b else 0.0, 0.25)
                fj = a * oj * pj
                fq = np.where(same, a, b) * oq * pq
                val += p * (fj - fq) ** 2
        total += float((w * val).sum())
    return total
