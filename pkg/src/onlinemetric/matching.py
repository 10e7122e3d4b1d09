"""Matchings with an edit log.

RecourseMatching holds the current edge set and an append-only log of the
net edge changes made in each step (one step per arriving pair).
Recourse is the number of deletions in a step.
"""
from __future__ import annotations

import heapq
from itertools import combinations
from typing import Callable, Iterable, Optional


def _key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class RecourseMatching:
    def __init__(self):
        self.mate: dict[int, int] = {}
        self.log: list[tuple[int, str, tuple[int, int]]] = []
        self.history: list[tuple[int, int]] = []  # (deletions, additions) per step
        self.step = 0
        self._added: set[tuple[int, int]] = set()
        self._removed: set[tuple[int, int]] = set()
        self._open = False
        self._step_log = 0

    # -- editing ------------------------------------------------------------
    def begin_step(self) -> None:
        if self._open:
            raise RuntimeError("step already open")
        self._open = True
        self.step += 1
        self._step_log = len(self.log)

    def add(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("self loop")
        if a in self.mate or b in self.mate:
            raise ValueError(f"edge {a}-{b}: endpoint already matched")
        self.mate[a] = b
        self.mate[b] = a
        e = _key(a, b)
        if e in self._removed:
            self._removed.discard(e)
        else:
            self._added.add(e)

    def remove(self, a: int, b: int) -> None:
        if self.mate.get(a) != b:
            raise ValueError(f"edge {a}-{b} not in matching")
        del self.mate[a]
        del self.mate[b]
        e = _key(a, b)
        if e in self._added:
            self._added.discard(e)
        else:
            self._removed.add(e)

    def end_step(self) -> tuple[int, int]:
        if not self._open:
            raise RuntimeError("no open step")
        for e in sorted(self._removed):
            self.log.append((self.step, "del", e))
        for e in sorted(self._added):
            self.log.append((self.step, "add", e))
        rec = (len(self._removed), len(self._added))
        self.history.append(rec)
        self._added = set()
        self._removed = set()
        self._open = False
        return rec

    # -- queries ------------------------------------------------------------
    def last_step_points(self) -> set[int]:
        """Endpoints of the edges added or deleted in the last closed step."""
        out: set[int] = set()
        for _, _, (a, b) in self.log[self._step_log:]:
            out.add(a)
            out.add(b)
        return out

    def partner(self, a: int) -> Optional[int]:
        return self.mate.get(a)

    def edges(self) -> list[tuple[int, int]]:
        return sorted({_key(a, b) for a, b in self.mate.items()})

    def __len__(self) -> int:
        return len(self.mate) // 2

    def cost(self, dist: Callable[[int, int], float]) -> float:
        return float(sum(dist(a, b) for a, b in self.edges()))

    @staticmethod
    def replay(log: Iterable[tuple[int, str, tuple[int, int]]]) -> list[tuple[int, int]]:
        cur: set[tuple[int, int]] = set()
        for _, op, e in log:
            if op == "add":
                cur.add(e)
            else:
                cur.remove(e)
        return sorted(cur)


class PairAlgorithm:
    """Common driver: points arrive one at a time and a step closes after
    every second point."""

    name = "base"

    def __init__(self):
        self.matching = RecourseMatching()
        self.active: list[int] = []

    def insert(self, x: int) -> None:
        raise NotImplementedError

    def insert_pair(self, x: int, y: int) -> tuple[int, int]:
        self.matching.begin_step()
        self.insert(x)
        self.insert(y)
        return self.matching.end_step()


class ArrivalOrderMatching(PairAlgorithm):
    """No recourse: every arriving pair is matched to itself."""

    name = "arrival"

    def insert(self, x: int) -> None:
        self.active.append(x)
        if len(self.active) % 2 == 0:
            self.matching.add(self.active[-2], x)


def min_matching(points: list[int], dist: Callable[[int, int], float]) -> tuple[float, list[tuple[int, int]]]:
    """Exact minimum perfect matching of a handful of points."""
    if not points:
        return 0.0, []
    a = points[0]
    best = (float("inf"), [])
    for k in range(1, len(points)):
        b = points[k]
        c, rest = min_matching(points[1:k] + points[k + 1:], dist)
        c += dist(a, b)
        if c < best[0]:
            best = (c, [(a, b)] + rest)
    return best


class CappedFollower:
    """Output matching that tracks a target matching while deleting at most
    r edges per arriving pair.

    Each step frees the endpoints of at most r current edges that disagree
    with the target, plus the two new points, and re-matches the freed set
    optimally.  The deleted edges are the subset (among a few candidates)
    that gives the cheapest result."""

    def __init__(self, r: int, dist: Callable[[int, int], float], candidates: Optional[int] = None):
        if r < 0:
            raise ValueError("recourse cap must be nonnegative")
        self.r = r
        self.dist = dist
        self.k = candidates if candidates is not None else 4 * r + 4
        self.matching = RecourseMatching()
        self.disagree: dict[tuple[int, int], float] = {}

    def _recheck(self, p: int, target: dict) -> None:
        q = self.matching.mate.get(p)
        if q is None:
            return
        e = _key(p, q)
        if target.get(p) == q:
            self.disagree.pop(e, None)
        else:
            self.disagree[e] = self.dist(p, q)

    def follow(self, x: int, y: int, target: dict, touched: Iterable[int] = ()) -> tuple[int, int]:
        M = self.matching
        for p in touched:
            self._recheck(p, target)
        M.begin_step()
        near = {target.get(x), target.get(y)}
        near.discard(None)
        pri = [e for e in self.disagree if e[0] in near or e[1] in near]
        rest = heapq.nlargest(self.k, self.disagree.items(), key=lambda kv: kv[1])
        cands = pri[:self.k]
        for e, _ in rest:
            if len(cands) >= self.k:
                break
            if e not in cands:
                cands.append(e)
        best = None
        for size in range(min(self.r, len(cands)) + 1):
            for sub in combinations(cands, size):
                freed = [x, y]
                for a, b in sub:
                    freed += [a, b]
                c, edges = min_matching(freed, self.dist)
                c -= sum(self.disagree[e] for e in sub)
                if best is None or c < best[0] - 1e-12:
                    best = (c, sub, edges)
        _, sub, edges = best
        for a, b in sub:
            M.remove(a, b)
            self.disagree.pop((a, b), None)
        for a, b in edges:
            M.add(a, b)
            self._recheck(a, target)
        return M.end_step()
