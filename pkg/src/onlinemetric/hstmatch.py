"""Online matchings on a growing HST.

InwardMatching keeps, for every node v, exactly floor(|X_v|/2) edges
inside X_v; such a matching is optimal on an ultrametric and a new point
is absorbed with at most one deletion per tree level.

HPInwardMatching relaxes this to heavy-path tops: for each heavy path P
the odd light children hanging off P (plus the bottom leaf) form an
ordered list N(P), matched by the laminar line structure.  This is a
2-approximation with polylogarithmic recourse.

Both follow the tree through its listener hook; points must be inserted
into the matching right after their leaf enters the tree.
"""
from __future__ import annotations

from typing import Optional

from .hst import HstNode, HstTree, InsertEvent
from .linematch import LineCollection
from .matching import PairAlgorithm


class RecourseCeilingError(AssertionError):
    pass


class _TreeFollower(PairAlgorithm):
    def __init__(self, tree: HstTree):
        super().__init__()
        self.tree = tree
        self._pending: Optional[HstNode] = None
        tree.listeners.append(self._on_event)
        if tree.root is not None:
            raise ValueError("attach the matching before the first point")

    def _on_event(self, ev: InsertEvent) -> None:
        if self._pending is not None:
            raise RuntimeError("previous leaf was never inserted into the matching")
        self._pending = ev.leaf
        self._grow(ev)

    def _grow(self, ev: InsertEvent) -> None:
        raise NotImplementedError

    def _take(self, x: int) -> HstNode:
        leaf = self.tree.leaf_of[x]
        if leaf is not self._pending:
            raise RuntimeError(f"point {x} is not the latest leaf")
        self._pending = None
        self.active.append(x)
        return leaf

    def cost(self) -> float:
        return self.matching.cost(self.tree.distance)


class InwardMatching(_TreeFollower):
    name = "inward"

    def __init__(self, tree: HstTree, enforce: bool = True):
        self.count: dict[int, int] = {}
        self.exp: dict[int, Optional[int]] = {}
        self.enforce = enforce
        self.max_pair_deletions = 0
        self._step = -1
        self._step_dels = 0
        super().__init__(tree)

    def _grow(self, ev: InsertEvent) -> None:
        if ev.new_node is not None:
            c = ev.split_child
            self.count[ev.new_node.id] = self.count[c.id]
            self.exp[ev.new_node.id] = self.exp[c.id]
        self.count[ev.leaf.id] = 0
        self.exp[ev.leaf.id] = None

    def insert(self, x: int) -> None:
        leaf = self._take(x)
        M = self.matching
        count = self.count
        exp = self.exp
        z = x
        s = leaf.parent
        dels = 0
        while True:
            a = s
            while a is not None and count[a.id] % 2 == 0:
                exp[a.id] = z
                a = a.parent
            if a is None:
                break  # z stays unmatched
            u = a
            w = exp[u.id]
            wh = M.partner(w)
            if wh is None:
                M.add(z, w)
                b = u
                while b is not None:
                    exp[b.id] = None
                    b = b.parent
                break
            top = self.tree.lca(self.tree.leaf_of[w], self.tree.leaf_of[wh])
            M.remove(w, wh)
            M.add(z, w)
            dels += 1
            b = u
            while b is not top:
                exp[b.id] = None
                b = b.parent
            z = wh
            s = top
        exp[leaf.id] = x
        for b in self.tree.ancestors(leaf):
            count[b.id] += 1
        if M.step != self._step:
            self._step = M.step
            self._step_dels = 0
        self._step_dels += dels
        self.max_pair_deletions = max(self.max_pair_deletions, self._step_dels)
        h = self.tree.height()
        if self.enforce and self._step_dels > 2 * h:
            raise RecourseCeilingError(f"{self._step_dels} deletions in one step with tree height {h}")

    def check(self) -> list[str]:
        return check_inward(self.tree, self.matching, set(self.active))


class _Path:
    __slots__ = ("top", "L", "pinned", "rep")

    def __init__(self, top: HstNode):
        self.top = top
        self.L = None
        self.pinned = None
        self.rep: Optional[int] = None


def _elem_key(payload):
    v, pseudo = payload
    if pseudo:
        return (-0.0, 1, v.okey)
    return (-v.parent.label, 0, v.okey)


class HPInwardMatching(_TreeFollower):
    name = "hp"

    def __init__(self, tree: HstTree, seed: int = 0, verify: bool = False):
        self.col = LineCollection(seed=seed, listener=self._line_event)
        self.w: dict[int, int] = {}
        self.path: dict[int, _Path] = {}
        self.hc: dict[int, Optional[HstNode]] = {}
        self.elem: dict[int, object] = {}
        self.real: dict = {}
        self._dirty: set = set()
        self.verify = verify
        self.line_ops = 0
        super().__init__(tree)

    # -- line-structure glue ---------------------------------------------------
    def _line_event(self, op, a, b) -> None:
        self._dirty.add(a)
        self._dirty.add(b)

    def _join(self, P: _Path) -> None:
        if P.pinned is not None:
            P.L = self.col.merge(P.pinned, P.L)
            P.pinned = None

    def _fix(self, P: _Path) -> None:
        if P.L is not None and len(P.L) % 2 == 1:
            if len(P.L) == 1:
                P.pinned, P.L = P.L, None
            else:
                P.pinned, P.L = self.col.split(P.L, 1)

    def _n_insert(self, P: _Path, payload):
        self.line_ops += 1
        self._join(P)
        kn = _elem_key(payload)
        k = self.col.count_prefix(P.L, lambda pl: _elem_key(pl) < kn)
        P.L, e = self.col.insert_point(P.L, k, payload)
        self._fix(P)
        return e

    def _n_remove(self, P: _Path, e) -> None:
        self.line_ops += 1
        self._join(P)
        P.L = self.col.remove_point(e)
        self._fix(P)

    # -- tree growth ------------------------------------------------------------
    def _grow(self, ev: InsertEvent) -> None:
        m = ev.new_node
        if m is not None:
            c = ev.split_child
            if self.w[c.id] == 0:
                raise RuntimeError("inactive subtree")
            self.w[m.id] = self.w[c.id]
            P = self.path[c.id]
            self.path[m.id] = P
            if P.top is c:
                P.top = m
            self.hc[m.id] = c
            e = self.elem.pop(c.id, None)
            if e is not None:
                e.payload = (m, False)
                self.elem[m.id] = e
            g = m.parent
            if g is not None and self.hc.get(g.id) is c:
                self.hc[g.id] = m
        leaf = ev.leaf
        self.w[leaf.id] = 0
        self.hc[leaf.id] = None
        self.path[leaf.id] = _Path(leaf)

    def _path_nodes(self, top: HstNode):
        v = top
        while v is not None:
            yield v
            v = self.hc[v.id]

    def _make_light(self, u: HstNode, c: HstNode, touched: set) -> None:
        """Cut the heavy edge u-c: the path splits below u."""
        P = self.path[u.id]
        Q = _Path(c)
        self._join(P)
        cut = (-u.label, 1, -1)
        k = self.col.count_prefix(P.L, lambda pl: _elem_key(pl) < cut)
        if P.L is not None:
            n = len(P.L)
            self.line_ops += 1
            if k == 0:
                Q.L, P.L = P.L, None
            elif k < n:
                P.L, Q.L = self.col.split(P.L, k)
        self._fix(P)
        self._fix(Q)
        for v in self._path_nodes(c):
            self.path[v.id] = Q
        self.hc[u.id] = None
        touched.add(Q)
        if self.w[c.id] % 2 == 1:
            self.elem[c.id] = self._n_insert(P, (c, False))

    def _make_heavy(self, u: HstNode, v: HstNode) -> None:
        P = self.path[u.id]
        Q = self.path[v.id]
        self._join(P)
        self._join(Q)
        self.line_ops += 1
        P.L = self.col.merge(P.L, Q.L)
        self._fix(P)
        for x in self._path_nodes(v):
            self.path[x.id] = P
        self.hc[u.id] = v

    def insert(self, x: int) -> None:
        leaf = self._take(x)
        chain = list(self.tree.ancestors(leaf))
        chain.reverse()
        touched = {self.path[leaf.id]}
        Pl = self.path[leaf.id]
        self._n_insert(Pl, (leaf, True))
        w = self.w
        for i in range(len(chain) - 1):
            u = chain[i]
            v = chain[i + 1]
            wu = w[u.id] + 1
            wv = w[v.id] + 1
            old = self.hc[u.id]
            heavy = 2 * wv > wu
            if old is v:
                continue
            if old is not None and (heavy or 2 * w[old.id] <= wu):
                self._make_light(u, old, touched)
            if heavy:
                e = self.elem.pop(v.id, None)
                if e is not None:
                    self._n_remove(self.path[u.id], e)
                self._make_heavy(u, v)
            elif wv % 2 == 1:
                self.elem[v.id] = self._n_insert(self.path[u.id], (v, False))
            else:
                self._n_remove(self.path[u.id], self.elem.pop(v.id))
        for b in chain:
            w[b.id] += 1
        for b in chain:
            touched.add(self.path[b.id])
        self._refresh(touched)
        if self.verify:
            errs = self.check()
            if errs:
                raise AssertionError("; ".join(errs[:3]))

    def _rep(self, e) -> Optional[int]:
        v, pseudo = e.payload
        if pseudo:
            return v.point
        return self.path[v.id].rep

    def _refresh(self, touched: set) -> None:
        live = [P for P in touched if self.path.get(P.top.id) is P]
        live.sort(key=lambda P: -P.top.depth)
        dirty = self._dirty
        for P in live:
            rep = None
            if P.pinned is not None:
                rep = self._rep(P.pinned.root)
            if rep != P.rep:
                P.rep = rep
                e = self.elem.get(P.top.id)
                if e is not None:
                    dirty.add(e)
        M = self.matching
        recheck = set()
        for e in dirty:
            old = self.real.pop(e, None)
            if old is not None:
                f, pair = old
                self.real.pop(f, None)
                M.remove(*pair)
                recheck.add(f)
            recheck.add(e)
        for e in recheck:
            if e in self.real or e.mate is None:
                continue
            f = e.mate
            pair = (self._rep(e), self._rep(f))
            M.add(*pair)
            self.real[e] = (f, pair)
            self.real[f] = (e, pair)
        self._dirty = set()

    def heavy_paths(self) -> list[list[HstNode]]:
        tops = {id(P): P for P in self.path.values()}
        return [list(self._path_nodes(P.top)) for P in tops.values()]

    def check(self) -> list[str]:
        return check_hp_inward(self.tree, self.matching, set(self.active))


# -- independent checkers -------------------------------------------------------
def _subtree_points(tree: HstTree, active: set) -> dict[int, set]:
    pts: dict[int, set] = {}
    for u in reversed(list(tree.preorder())):
        if u.is_leaf:
            pts[u.id] = {u.point} & active
        else:
            s = set()
            for c in u.children:
                s |= pts[c.id]
            pts[u.id] = s
    return pts


def check_inward(tree: HstTree, matching, active: set) -> list[str]:
    errs = []
    pts = _subtree_points(tree, active)
    edges = matching.edges()
    for u in tree.preorder():
        inside = sum(1 for a, b in edges if a in pts[u.id] and b in pts[u.id])
        if inside != len(pts[u.id]) // 2:
            errs.append(f"node {u.id}: {inside} internal edges for {len(pts[u.id])} points")
    if len(edges) != len(active) // 2:
        errs.append("matching is not near-perfect")
    return errs


def check_hp_inward(tree: HstTree, matching, active: set) -> list[str]:
    """Conditions 1 and 2 of heavy-path inwardness, with heavy paths
    recomputed from scratch."""
    errs = []
    pts = _subtree_points(tree, active)
    mate = matching.mate
    if len(matching.edges()) != len(active) // 2:
        errs.append("matching is not near-perfect")
    for u in tree.preorder():
        p = u.parent
        if p is not None and 2 * len(pts[u.id]) > len(pts[p.id]):
            continue  # not a path top
        path = [u]
        while True:
            v = path[-1]
            nxt = [c for c in v.children if 2 * len(pts[c.id]) > len(pts[v.id])]
            if not nxt:
                break
            path.append(nxt[0])
        top = pts[u.id]
        out = [a for a in top if mate.get(a) is not None and mate[a] not in top]
        out += [a for a in top if mate.get(a) is None]
        if len(out) != len(top) % 2:
            errs.append(f"path top {u.id}: {len(out)} points leave a subtree of {len(top)}")
            continue
        if not out:
            continue
        # smallest i* >= 2 with |X_u1 minus X_ui*| odd
        allowed = None
        for k in range(1, len(path) + 1):
            below = pts[path[k].id] if k < len(path) else set()
            if (len(top) - len(below)) % 2 == 1:
                allowed = top - below
                break
        if allowed is None or out[0] not in allowed:
            errs.append(f"path top {u.id}: exported point {out[0]} outside the allowed part")
    return errs
