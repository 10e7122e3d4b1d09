"""Light online matching in a general metric.

An online spanning tree T is kept together with its Euler tour E (a cyclic
sequence of directed edges, each tree edge once per direction) and a
vertex order P that shortcuts the tour.  The line-matching structure runs
on P as if the points sat on a line, so its matching costs at most
O(log n) times Cost(P) <= 2 Cost(T).

Every vertex v in a nontrivial tree owns one arrival arc (w -> v) of the
tour, its mark.  P is always a cyclic rotation of the vertices ordered by
the positions of their marks, which is what makes Cost(P) <= Cost(E).
"""
from __future__ import annotations

import random
from typing import Callable, Optional

import numpy as np

from . import treap
from .linematch import LineCollection
from .matching import PairAlgorithm


class _Arc:
    __slots__ = ("pri", "left", "right", "parent", "size", "u", "v", "mark", "marks")

    def __init__(self, pri: float, u: int, v: int):
        self.pri = pri
        self.left = self.right = self.parent = None
        self.size = 1
        self.u = u
        self.v = v
        self.mark = False
        self.marks = 0

    def __repr__(self) -> str:
        return f"{self.u}->{self.v}{'*' if self.mark else ''}"


def _pull(t: _Arc) -> None:
    s, m = 1, int(t.mark)
    if t.left is not None:
        s += t.left.size
        m += t.left.marks
    if t.right is not None:
        s += t.right.size
        m += t.right.marks
    t.size = s
    t.marks = m


def _first_marked(t: Optional[_Arc]) -> Optional[_Arc]:
    while t is not None:
        if t.left is not None and t.left.marks:
            t = t.left
        elif t.mark:
            return t
        elif t.right is not None and t.right.marks:
            t = t.right
        else:
            return None
    return None


class TourError(RuntimeError):
    pass


class EulerTourForest:
    """Euler tours and shortcut orders of a dynamic forest.

    The P sequences live in `line`, a LineCollection whose element payloads
    are vertex ids.  `tour_splices` and `path_splices` count the split and
    concatenate operations of the last link or cut."""

    def __init__(self, line: LineCollection, seed: int = 0):
        self._rand = random.Random(seed)
        self.line = line
        self.arc: dict[tuple[int, int], _Arc] = {}
        self.markof: dict[int, Optional[_Arc]] = {}
        self.pelem: dict = {}
        self.tour_splices = 0
        self.path_splices = 0
        self.max_splices = 0

    # -- small helpers ------------------------------------------------------------
    def _tsplit(self, t, k):
        if t is None or k <= 0:
            return None, t
        if k >= t.size:
            return t, None
        self.tour_splices += 1
        return treap.split(t, k, _pull)

    def _tmerge(self, *parts):
        out = None
        for p in parts:
            if p is None:
                continue
            if out is not None:
                self.tour_splices += 1
            out = treap.merge(out, p, _pull)
        return out

    def _psplit(self, s, k):
        if s is None or k <= 0:
            return None, s
        if k >= len(s):
            return s, None
        self.path_splices += 1
        return self.line.split(s, k)

    def _pmerge(self, *parts):
        out = None
        for p in parts:
            if p is None:
                continue
            if out is not None:
                self.path_splices += 1
            out = self.line.merge(out, p)
        return out

    def _set_mark(self, a: _Arc, on: bool) -> None:
        a.mark = on
        treap.fix_up(a, _pull)

    def _start(self) -> None:
        self.tour_splices = 0
        self.path_splices = 0

    def _finish(self) -> None:
        self.max_splices = max(self.max_splices, self.tour_splices, self.path_splices)

    # -- public -------------------------------------------------------------------
    def add_vertex(self, v: int) -> None:
        if v in self.markof:
            raise TourError(f"vertex {v} already present")
        _, e = self.line.create(v)
        self.pelem[v] = e
        self.markof[v] = None

    def path_set(self, v: int):
        return self.line.set_of(self.pelem[v])

    def tour_root(self, v: int) -> Optional[_Arc]:
        m = self.markof[v]
        return None if m is None else treap.root_of(m)

    def connected(self, u: int, v: int) -> bool:
        return self.path_set(u) is self.path_set(v)

    def link(self, u: int, v: int) -> None:
        if (u, v) in self.arc or self.connected(u, v):
            raise TourError(f"edge {u}-{v} would close a cycle")
        self._start()
        line = self.line
        # P = P_u[..u] + P_v[v..] + P_v[..v) + P_u(u..]
        Pu, Pv = self.path_set(u), self.path_set(v)
        Pu1, Pu2 = self._psplit(Pu, line.rank(self.pelem[u]))
        Pv1, Pv2 = self._psplit(Pv, line.rank(self.pelem[v]) - 1)
        self._pmerge(Pu1, Pv2, Pv1, Pu2)
        # E = E_u[..mark(u)] + (u->v) + E_v rotated to start at v + (v->u) + rest
        a_uv = _Arc(self._rand.random(), u, v)
        a_vu = _Arc(self._rand.random(), v, u)
        self.arc[(u, v)] = a_uv
        self.arc[(v, u)] = a_vu
        mu = self.markof[u]
        if mu is None:
            E1, E2 = None, None
            a_vu.mark = True
            _pull(a_vu)
            self.markof[u] = a_vu
        else:
            E1, E2 = self._tsplit(treap.root_of(mu), treap.rank(mu))
        mv = self.markof[v]
        R = None
        if mv is not None:
            A, B = self._tsplit(treap.root_of(mv), treap.rank(mv))
            R = self._tmerge(B, A)
            self._set_mark(mv, False)
            R = treap.root_of(mv)
        a_uv.mark = True
        _pull(a_uv)
        self.markof[v] = a_uv
        self._tmerge(E1, a_uv, R, a_vu, E2)
        self._finish()

    def cut(self, u: int, v: int) -> None:
        x = self.arc.pop((u, v), None)
        y = self.arc.pop((v, u), None)
        if x is None or y is None:
            raise TourError(f"edge {u}-{v} not in the forest")
        self._start()
        i, j = treap.rank(x), treap.rank(y)
        if i > j:
            x, y, i, j = y, x, j, i
        a, b = x.u, x.v
        root = treap.root_of(x)
        A, rest = self._tsplit(root, i - 1)
        X, rest = self._tsplit(rest, 1)
        B, rest = self._tsplit(rest, j - i - 1)
        Y, C = self._tsplit(rest, 1)
        # b's side holds exactly the marks in X + B
        cnt = int(X.mark) + (B.marks if B is not None else 0)
        lead = b if X.mark else _first_marked(B).v
        if self.markof[b] is X:
            self.markof[b] = None
            if B is not None:
                self.markof[b] = treap.last(B)
                self._set_mark(self.markof[b], True)
        if self.markof[a] is Y:
            self.markof[a] = None
            rest = A if A is not None else C
            if rest is not None:
                self.markof[a] = treap.last(rest)
                self._set_mark(self.markof[a], True)
        self._tmerge(A, C)
        # P: the block of b's side is cyclically contiguous
        line = self.line
        P = self.path_set(a)
        m = len(P)
        ps = line.rank(self.pelem[lead])
        if ps + cnt - 1 <= m:
            X1, rest = self._psplit(P, ps - 1)
            _, Y1 = self._psplit(rest, cnt)
            self._pmerge(X1, Y1)
        else:
            head = cnt - (m - ps + 1)
            Pre, rest = self._psplit(P, head)
            _, Suf = self._psplit(rest, m - cnt)
            self._pmerge(Suf, Pre)
        self._finish()

    # -- inspection ---------------------------------------------------------------
    def tour(self, v: int) -> list[tuple[int, int]]:
        r = self.tour_root(v)
        return [] if r is None else [(a.u, a.v) for a in treap.inorder(r)]

    def path(self, v: int) -> list[int]:
        return [e.payload for e in self.line.elements(self.path_set(v))]

    def check(self, adj: dict[int, set]) -> list[str]:
        """Compare tours and orders against the forest given as adjacency."""
        errs = []
        seen: set = set()
        for v in adj:
            if v in seen:
                continue
            comp = {v}
            stack = [v]
            while stack:
                w = stack.pop()
                for z in adj[w]:
                    if z not in comp:
                        comp.add(z)
                        stack.append(z)
            seen |= comp
            tour = self.tour(v)
            want = sorted((p, q) for p in comp for q in adj[p])
            if sorted(tour) != want:
                errs.append(f"tour of {v} does not use every edge twice")
                continue
            for k in range(len(tour)):
                if tour[k][1] != tour[(k + 1) % len(tour)][0]:
                    errs.append(f"tour of {v} is not a closed walk")
                    break
            r = self.tour_root(v)
            marked = [a.v for a in treap.inorder(r) if a.mark] if r is not None else []
            for w in comp:
                if len(comp) > 1 and (self.markof[w] is None or self.markof[w].v != w or not self.markof[w].mark):
                    errs.append(f"vertex {w} has no valid mark")
            path = self.path(v)
            if sorted(path) != sorted(comp):
                errs.append(f"order of {v} has the wrong vertex set")
                continue
            if len(comp) > 1:
                if sorted(marked) != sorted(comp):
                    errs.append(f"marks of component {v} are not one per vertex")
                    continue
                k = marked.index(path[0])
                if marked[k:] + marked[:k] != path:
                    errs.append(f"order of {v} is not a rotation of the mark order")
        return errs


# -- spanning tree strategies ----------------------------------------------------
class GreedyTree:
    """Attach each point to its nearest predecessor; never changes old edges."""

    name = "greedy"

    def __init__(self):
        self.adj: dict[int, set] = {}
        self.weight = 0.0

    def _row(self, metric, x):
        return metric.row(x, x - 1)

    def add(self, metric, x: int) -> list[tuple[str, int, int]]:
        self.adj[x] = set()
        if x == 1:
            return []
        row = self._row(metric, x)
        y = int(np.argmin(row)) + 1
        self.adj[x].add(y)
        self.adj[y].add(x)
        self.weight += float(row[y - 1])
        return [("ins", x, y)]


class SwapTree(GreedyTree):
    """Greedy attachment followed by up to B best-improvement swaps that
    bring in an edge at the new point and drop the heaviest edge on the
    cycle it closes."""

    name = "swap"

    def __init__(self, budget: int = 2):
        super().__init__()
        self.budget = budget

    def _heaviest(self, metric, x):
        """For every vertex y, the heaviest tree edge on the x..y path."""
        best: dict[int, tuple[float, int, int]] = {x: (-1.0, 0, 0)}
        stack = [x]
        while stack:
            a = stack.pop()
            for b in self.adj[a]:
                if b not in best:
                    w = metric.distance(a, b)
                    best[b] = max(best[a], (w, a, b))
                    stack.append(b)
        return best

    def add(self, metric, x: int) -> list[tuple[str, int, int]]:
        events = super().add(metric, x)
        if x == 1:
            return events
        row = self._row(metric, x)
        for _ in range(self.budget):
            heavy = self._heaviest(metric, x)
            gain, pick = 0.0, None
            for y, (w, a, b) in heavy.items():
                if y == x or y in self.adj[x]:
                    continue
                g = w - float(row[y - 1])
                if g > gain + 1e-12:
                    gain, pick = g, (y, a, b)
            if pick is None:
                break
            y, a, b = pick
            self.adj[a].discard(b)
            self.adj[b].discard(a)
            self.adj[x].add(y)
            self.adj[y].add(x)
            self.weight -= gain
            events += [("del", a, b), ("ins", x, y)]
        return events


def make_strategy(name: str, budget: int = 2):
    if name == "greedy":
        return GreedyTree()
    if name == "swap":
        return SwapTree(budget)
    raise ValueError(f"unknown tree strategy {name!r}")


class LightMatching(PairAlgorithm):
    """Line matching over the shortcut order of an online spanning tree."""

    name = "light"

    def __init__(self, metric, strategy: str = "greedy", seed: int = 0,
                 budget: int = 2, verify: bool = False):
        super().__init__()
        self.metric = metric
        self.tree = make_strategy(strategy, budget)
        self.col = LineCollection(seed=seed, listener=self._line_event)
        self.forest = EulerTourForest(self.col, seed=seed + 1)
        self.verify = verify

    def _line_event(self, op: str, a, b) -> None:
        if op == "add":
            self.matching.add(a.payload, b.payload)
        else:
            self.matching.remove(a.payload, b.payload)

    def insert(self, x: int) -> None:
        if x != len(self.active) + 1:
            raise ValueError("points must arrive in id order")
        self.active.append(x)
        self.forest.add_vertex(x)
        for op, a, b in self.tree.add(self.metric, x):
            if op == "ins":
                self.forest.link(a, b)
            else:
                self.forest.cut(a, b)
        if self.verify:
            errs = self.check()
            if errs:
                raise AssertionError("; ".join(errs[:3]))

    def cost(self) -> float:
        return self.matching.cost(self.metric.distance)

    def tree_cost(self) -> float:
        return self.tree.weight

    def path_cost(self) -> float:
        p = self.forest.path(1)
        return float(sum(self.metric.distance(a, b) for a, b in zip(p, p[1:])))

    def check(self) -> list[str]:
        errs = self.forest.check(self.tree.adj)
        if not errs and self.active:
            s = self.forest.path_set(1)
            errs += self.col.check(s)
            if self.path_cost() > 2 * self.tree_cost() * (1 + 1e-9) + 1e-12:
                errs.append("order costs more than twice the tree")
            want = sorted(tuple(sorted((a.payload, b.payload))) for a, b in self.col.pairs(s))
            if want != self.matching.edges():
                errs.append("matching differs from the line pairs")
        return errs
