"""Lower-bound instances for online matching and online embedding.

- prop_one_sequence: eight points on the line that defeat any algorithm
  allowed one deletion per arriving pair.
- AdaptiveAdversary / oblivious_lb_sequence: the multiples-of-q^i rounds
  that force weight Omega(diam log n / (r log r)) under recourse r.
- fig1_sequences: the no-recourse and non-monotonicity examples.
- Laakso-type graphs H_k where a single random edge is refined per level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng as rngmod
from .oracles import shortest_paths

# Calibrated floor for weight / (diam * ln n / (r ln r)) against the
# adaptive adversary: half the smallest ratio seen over k = 2 runs
# (n = 400, r = 2, every shipped algorithm, seeds 0..4).
C_HAT_ADAPTIVE = 0.1096  # smallest calibration ratio was 0.2192

# Same floor for the mean weight over uniform random bits of the oblivious
# sequence: half the smallest mean ratio over k = 2 (n = 400, r = 2, every
# shipped algorithm capped at r, all bit strings).
C_HAT_OBLIVIOUS = 0.0841  # smallest calibration mean was 0.1683


class AdversaryError(ValueError):
    pass


# -- one recourse is not enough -------------------------------------------------
def prop_one_sequence(k: float, eps: float) -> list[float]:
    """0, 1, s, s+1, then 1+eps, s+eps, then eps, s+1+eps with s = k+1."""
    if not 0 < eps < 1.0 / (4.0 * k):
        raise AdversaryError(f"need 0 < eps < 1/(4k) = {1.0 / (4.0 * k)}")
    s = k + 1
    return [0.0, 1.0, s, s + 1, 1 + eps, s + eps, eps, s + 1 + eps]


# -- figure examples ----------------------------------------------------------------
def fig1_sequences(n: int, W, eps) -> tuple[list, list]:
    """(a) pairs {i, W+i} for i = 1..n, then pairs {i+eps, W+i+eps}.
    (b) pairs {j, j+1} for j = 0..2n, so that 1..2n appear twice and 0, 2n+1
    once, followed by the pair {0, 2n+1}.

    Pass Fractions for W and eps to keep the arithmetic exact."""
    a = []
    for i in range(1, n + 1):
        a += [i, W + i]
    for i in range(1, n + 1):
        a += [i + eps, W + i + eps]
    b = []
    for j in range(0, 2 * n + 1):
        b += [j, j + 1]
    b += [0, 2 * n + 1]
    return a, b


# -- adaptive adversary -----------------------------------------------------------------
@dataclass
class RoundRecord:
    round: int
    case: str  # "start", "case1" (no points) or "case2" (points emitted)
    emitted: int
    long_edges: int  # edges of the previous matching of length >= q^i/(4r)
    threshold: float  # q^(k-i)/10
    witness: Optional[int] = None  # |E(i)| found in a case-2 round
    ok: bool = True


def _k_for(q: int, n: int) -> int:
    k = 0
    while q ** (k + 1) <= n:
        k += 1
    return k


def round_points(q: int, k: int, i: int) -> list[int]:
    """Q_i minus Q_(i+1); the last round also carries q^k so that every
    round emits an even number of points."""
    pts = [j * q ** i for j in range(1, q ** (k - i) + 1) if (j * q ** i) % q ** (i + 1)]
    if i == k - 1:
        pts.append(q ** k)
    return pts


class AdaptiveAdversary:
    """Round i > 0 emits nothing when the current matching already holds
    q^(k-i)/10 edges of length >= q^i/(4r), and Q_i minus Q_(i+1) otherwise.

    Drive it with start() and then observe(matching) after each batch; both
    return the next batch of positions or None at the end.  The matching is
    read through its `mate` map over point ids, and `pos[id]` is the
    position of each emitted point."""

    def __init__(self, r: int, n: Optional[int] = None, k: Optional[int] = None):
        if r < 1:
            raise AdversaryError("r must be positive")
        self.r = r
        self.q = 10 * r
        if k is None:
            if n is None or n < self.q:
                raise AdversaryError("need n >= 10r")
            k = _k_for(self.q, n)
        if k < 1:
            raise AdversaryError("need at least one round")
        self.k = k
        self.i = 0
        self.pos: dict[int, float] = {}
        self.records: list[RoundRecord] = []
        self._prev: Optional[dict] = None
        self._pending: Optional[list[int]] = None
        self._done = False

    def _long(self, mate: dict, i: int) -> list[tuple[int, int]]:
        lim = self.q ** i / (4.0 * self.r)
        out = []
        for a, b in mate.items():
            if a < b and abs(self.pos[a] - self.pos[b]) >= lim:
                out.append((a, b))
        return out

    def start(self) -> list[int]:
        pts = round_points(self.q, self.k, 0) if self.k > 1 else round_points(self.q, 1, 0)
        self.records.append(RoundRecord(0, "start", len(pts), 0, 0.0))
        self._pending = pts
        return pts

    def register(self, ids: Sequence[int], pts: Sequence[float]) -> None:
        for x, p in zip(ids, pts):
            self.pos[x] = p

    def observe(self, mate: dict) -> Optional[list[int]]:
        mate = dict(mate)
        if self._pending is not None and self.records[-1].case == "case2":
            self._certify(self.records[-1], self._prev, mate)
        self._pending = None
        while True:
            self.i += 1
            i = self.i
            if i > self.k - 1:
                self._done = True
                return None
            longs = self._long(mate, i)
            thr = self.q ** (self.k - i) / 10.0
            if len(longs) >= thr:
                self.records.append(RoundRecord(i, "case1", 0, len(longs), thr))
                continue
            pts = round_points(self.q, self.k, i)
            self.records.append(RoundRecord(i, "case2", len(pts), len(longs), thr))
            self._prev = mate
            self._pending = pts
            return pts

    def _certify(self, rec: RoundRecord, old: dict, new: dict) -> None:
        """Recompute the case-2 witness E(i) from the two matchings."""
        i = rec.round
        q, r = self.q, self.r
        half = q ** i / 2.0
        lim = q ** i / (4.0 * r)
        centers = [x for x in new if x not in old]
        rematched = {a for a, b in old.items() if new.get(a) != b}
        long_old = {a for a, b in old.items() if abs(self.pos[a] - self.pos[b]) >= lim}
        rem_pos = np.sort(np.array([self.pos[a] for a in rematched])) if rematched else np.zeros(0)
        long_pos = np.sort(np.array([self.pos[a] for a in long_old])) if long_old else np.zeros(0)

        def inside(arr, p):
            return int(np.searchsorted(arr, p + half, side="left") - np.searchsorted(arr, p - half, side="right"))

        found: set = set()
        for c in centers:
            p = self.pos[c]
            if inside(rem_pos, p) >= 2 * r or inside(long_pos, p) > 0:
                continue
            x, use_new = c, True
            while True:
                y = new.get(x) if use_new else old.get(x)
                if y is None or y == c:
                    break
                if use_new and abs(self.pos[x] - self.pos[y]) >= lim:
                    found.add((min(x, y), max(x, y)))
                    break
                if abs(self.pos[y] - p) >= half:
                    break
                x, use_new = y, not use_new
        rec.witness = len(found)
        rec.ok = len(found) >= q ** (self.k - i) / 10.0

    def certificate_ok(self) -> bool:
        for rec in self.records:
            if rec.case == "case1" and rec.long_edges < rec.threshold:
                return False
            if rec.case == "case2" and (rec.witness is None or not rec.ok):
                return False
        return True

    def bound(self, diam: float, n: int) -> float:
        """diam * ln n / (r ln r); the lower bound is a constant times this."""
        return diam * math.log(n) / (self.r * math.log(max(self.r, 2)))


def run_adaptive(add_pair: Callable, matching, r: int, n: Optional[int] = None,
                 k: Optional[int] = None) -> AdaptiveAdversary:
    """Play the adaptive adversary against an online matcher.

    add_pair(p, q) feeds two positions and returns their point ids;
    matching is the matcher's RecourseMatching (read through `mate`)."""
    adv = AdaptiveAdversary(r, n=n, k=k)
    batch = adv.start()
    while batch is not None:
        for t in range(0, len(batch), 2):
            ids = add_pair(float(batch[t]), float(batch[t + 1]))
            adv.register(ids, batch[t:t + 2])
        batch = adv.observe(matching.mate)
    return adv


# -- oblivious adversary ------------------------------------------------------------------
def oblivious_lb_sequence(r: int, n: int, bits=None, seed: Optional[int] = None) -> list[int]:
    """Q_0 minus Q_1, then Q_i minus Q_(i+1) for each round i with bit x_i = 1.

    bits has k-1 entries (one per round 1..k-1); when omitted they are
    drawn from `seed`."""
    q = 10 * r
    if n < q:
        raise AdversaryError("need n >= 10r")
    k = _k_for(q, n)
    if bits is None:
        g = rngmod.spawn(seed or 0, rngmod.ADVERSARY, n, r)
        bits = g.integers(0, 2, max(k - 1, 0))
    bits = [int(b) for b in bits]
    if len(bits) != max(k - 1, 0):
        raise AdversaryError(f"need {k - 1} bits")
    seq = round_points(q, k, 0) if k > 1 else round_points(q, 1, 0)
    for i in range(1, k):
        if bits[i - 1]:
            seq += round_points(q, k, i)
    return seq


# -- Laakso-type graphs --------------------------------------------------------------------
G1_EDGES = [("s", "a"), ("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("c", "t")]
G1_PROBS = [0.25, 0.125, 0.125, 0.125, 0.125, 0.25]


@dataclass
class LaaksoGraph:
    level: int
    n: int
    edges: dict = field(default_factory=dict)  # (u, v) with u < v -> weight
    copy: dict = field(default_factory=dict)  # labels s, a, b, c, d, t of A_k

    def distances(self) -> np.ndarray:
        return shortest_paths(self.n, [(u, v, w) for (u, v), w in self.edges.items()])


def laakso_start() -> LaaksoGraph:
    """H_0: one edge of weight 1 between vertices 0 and 1."""
    return LaaksoGraph(0, 2, {(0, 1): 1.0}, {"s": 0, "t": 1})


def _splice(g: LaaksoGraph, x: int, y: int) -> LaaksoGraph:
    k = g.level + 1
    w = 4.0 ** (-k)
    edges = dict(g.edges)
    del edges[(min(x, y), max(x, y))]
    lab = {"s": x, "t": y}
    n = g.n
    for name in ("a", "b", "c", "d"):
        lab[name] = n
        n += 1
    for u, v in G1_EDGES:
        a, b = lab[u], lab[v]
        edges[(min(a, b), max(a, b))] = w
    return LaaksoGraph(k, n, edges, lab)


def laakso_next(g: LaaksoGraph, rng: np.random.Generator) -> LaaksoGraph:
    """Refine one edge of the newest copy (all of H_0 at level 0)."""
    if g.level == 0:
        return _splice(g, g.copy["s"], g.copy["t"])
    j = int(rng.choice(len(G1_EDGES), p=G1_PROBS))
    u, v = G1_EDGES[j]
    return _splice(g, g.copy[u], g.copy[v])


def laakso(k: int, seed: int) -> LaaksoGraph:
    rng = rngmod.spawn(seed, rngmod.LAAKSO)
    g = laakso_start()
    for _ in range(k):
        g = laakso_next(g, rng)
    return g
