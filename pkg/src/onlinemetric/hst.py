"""Online 2-HST built from nested decompositions.

Two points are in the same node of label 2^s iff they share a cluster at
every scale >= s.  The tree is kept compressed: internal nodes exist only
where two subtrees split, so an arriving point either hangs a new leaf
under an existing node or subdivides one edge with a new internal node.
Labels of old nodes never change, and neither does any pairwise tree
distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .decomp import DoublingDecomposition, EuclideanDecomposition
from .metric import PointStream


class HstNode:
    __slots__ = ("id", "exp", "parent", "children", "point", "rep", "depth", "okey", "data")

    def __init__(self, nid: int, exp: Optional[int], point: Optional[int] = None):
        self.id = nid
        self.exp = exp  # label is 2^exp; None means label 0
        self.parent: Optional[HstNode] = None
        self.children: list[HstNode] = []
        self.point = point
        self.rep = point  # some point stored below this node
        self.depth = 0
        self.okey = nid  # tie-break key; subdividing nodes inherit their child's
        self.data = None

    @property
    def label(self) -> float:
        return 0.0 if self.exp is None else 2.0 ** self.exp

    @property
    def is_leaf(self) -> bool:
        return self.point is not None

    def __repr__(self) -> str:
        if self.is_leaf:
            return f"Leaf({self.point})"
        return f"Node({self.id}, 2^{self.exp})"


@dataclass
class InsertEvent:
    """What one insertion changed: the new leaf, and possibly one new internal
    node placed on the former edge above `split_child` (the old root when the
    new node becomes the root)."""
    leaf: HstNode
    new_node: Optional[HstNode] = None
    split_child: Optional[HstNode] = None


LcaExp = Callable[[int, int], Optional[int]]


def _below(t: Optional[int], s: Optional[int]) -> bool:
    """t < s for exponents where None stands for -infinity."""
    if s is None:
        return False
    return t is None or t < s


class HstTree:
    def __init__(self):
        self.root: Optional[HstNode] = None
        self.nodes: list[HstNode] = []
        self.leaf_of: dict[int, HstNode] = {}
        self.listeners: list[Callable[[InsertEvent], None]] = []

    def _new(self, exp, point=None) -> HstNode:
        v = HstNode(len(self.nodes), exp, point)
        self.nodes.append(v)
        return v

    def _subdivide(self, parent: Optional[HstNode], child: HstNode, exp, leaf: HstNode) -> HstNode:
        w = self._new(exp)
        w.rep = child.rep
        w.okey = child.okey
        if parent is None:
            self.root = w
        else:
            k = parent.children.index(child)
            parent.children[k] = w
        w.parent = parent
        w.children = [child, leaf]
        child.parent = w
        leaf.parent = w
        return w

    def insert(self, point: int, lca_exp: LcaExp) -> InsertEvent:
        """Insert a leaf for `point`.  lca_exp(x, y) gives the exponent s with
        d_U(x, y) = 2^s, or None when x and y coincide."""
        if point in self.leaf_of:
            raise ValueError(f"point {point} already in tree")
        leaf = self._new(None, point)
        self.leaf_of[point] = leaf
        if self.root is None:
            self.root = leaf
            ev = InsertEvent(leaf)
        else:
            ev = self._descend(point, leaf, lca_exp)
        self._fix_depths(ev)
        for f in self.listeners:
            f(ev)
        return ev

    def _descend(self, point: int, leaf: HstNode, lca_exp: LcaExp) -> InsertEvent:
        parent = None
        v = self.root
        t = lca_exp(point, v.rep)
        while True:
            if v.is_leaf or (t is not None and (v.exp is None or t > v.exp)):
                # x leaves v's cluster above v: new node between parent and v
                w = self._subdivide(parent, v, t, leaf)
                return InsertEvent(leaf, w, v)
            if v.exp is None:
                leaf.parent = v
                v.children.append(leaf)
                return InsertEvent(leaf)
            nxt = None
            for c in v.children:
                tc = lca_exp(point, c.rep)
                if _below(tc, v.exp):
                    nxt, t = c, tc
                    break
            if nxt is None:
                leaf.parent = v
                v.children.append(leaf)
                return InsertEvent(leaf)
            parent, v = v, nxt

    def _fix_depths(self, ev: InsertEvent) -> None:
        if ev.new_node is None:
            p = ev.leaf.parent
            ev.leaf.depth = 0 if p is None else p.depth + 1
            return
        stack = [ev.new_node]
        while stack:
            u = stack.pop()
            u.depth = 0 if u.parent is None else u.parent.depth + 1
            stack.extend(u.children)

    # -- queries ----------------------------------------------------------
    def lca(self, u: HstNode, v: HstNode) -> HstNode:
        while u.depth > v.depth:
            u = u.parent
        while v.depth > u.depth:
            v = v.parent
        while u is not v:
            u, v = u.parent, v.parent
        return u

    def distance(self, a: int, b: int) -> float:
        if a == b:
            return 0.0
        return self.lca(self.leaf_of[a], self.leaf_of[b]).label

    def height(self) -> int:
        """Edges on the longest root-to-leaf path."""
        return max((v.depth for v in self.leaf_of.values()), default=0)

    def diameter(self) -> float:
        if len(self.leaf_of) < 2:
            raise ValueError("diameter needs at least two points")
        return self.root.label

    def ancestors(self, v: HstNode):
        while v is not None:
            yield v
            v = v.parent

    def preorder(self):
        if self.root is None:
            return
        stack = [self.root]
        while stack:
            u = stack.pop()
            yield u
            stack.extend(reversed(u.children))

    def check(self) -> list[str]:
        """Structural invariants of a 2-HST; returns violations."""
        errs = []
        for u in self.preorder():
            for c in u.children:
                if c.parent is not u:
                    errs.append(f"bad parent link at {c}")
                if u.exp is None:
                    if not c.is_leaf:
                        errs.append(f"zero-label node {u} has internal child")
                elif c.exp is not None and c.exp > u.exp - 1:
                    errs.append(f"label of {c} exceeds half of {u}")
            if not u.is_leaf and len(u.children) < 2:
                errs.append(f"internal node {u} has fewer than two children")
        return errs

    # -- serialization ----------------------------------------------------
    def export(self) -> str:
        lines = []
        for u in self.preorder():
            lab = "0" if u.exp is None else repr(u.label)
            if u.is_leaf:
                lines.append(f"{u.depth} {lab} {u.point}")
            else:
                lines.append(f"{u.depth} {lab}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def parse(cls, text: str) -> "HstTree":
        t = cls()
        stack: list[HstNode] = []
        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.split()
            depth = int(parts[0])
            lab = float(parts[1])
            exp = None if lab == 0 else int(round(math.log2(lab)))
            point = int(parts[2]) if len(parts) > 2 else None
            v = t._new(exp, point)
            v.depth = depth
            if point is not None:
                t.leaf_of[point] = v
            del stack[depth:]
            if depth == 0:
                t.root = v
            else:
                v.parent = stack[-1]
                stack[-1].children.append(v)
            stack.append(v)
        # representatives: first leaf below each node
        for u in reversed(t.nodes):
            if u.children:
                u.rep = u.children[0].rep
        return t

    def same_shape(self, other: "HstTree") -> bool:
        return self.export() == other.export()


class HstEmbedding:
    """Online embedding of a point stream into a 2-HST."""

    def __init__(self, stream: PointStream, seed: int, variant: str = "doubling"):
        self.stream = stream
        self.variant = variant
        if variant == "doubling":
            self.decomp = DoublingDecomposition(stream, seed)
        elif variant == "euclidean":
            self.decomp = EuclideanDecomposition(stream.metric, seed)
        else:
            raise ValueError(f"unknown variant {variant!r}")
        self.tree = HstTree()
        self.sep_cache: dict[tuple[int, int], Optional[int]] = {}
        for x in range(1, len(stream) + 1):
            self._insert(x)

    def add(self, payload) -> tuple[int, InsertEvent]:
        x = self.stream.append(payload)
        return x, self._insert(x)

    def _insert(self, x: int) -> InsertEvent:
        self.decomp.sync()
        return self.tree.insert(x, self.lca_exp)

    def separating_scale(self, x: int, y: int) -> Optional[int]:
        """Largest scale where x and y lie in different clusters (None if d = 0)."""
        if x == y:
            return None
        key = (x, y) if x < y else (y, x)
        if key in self.sep_cache:
            return self.sep_cache[key]
        d = self.stream.metric.distance(x, y)
        if d == 0:
            s = None
        else:
            dec = self.decomp
            i = dec.top_scale(x, y)
            while dec.center(x, i) == dec.center(y, i):
                if 2.0 ** i < d:
                    raise RuntimeError("cluster with diameter above its scale")
                i -= 1
            s = i
        self.sep_cache[key] = s
        return s

    def lca_exp(self, x: int, y: int) -> Optional[int]:
        s = self.separating_scale(x, y)
        return None if s is None else s + 1

    def distance(self, a: int, b: int) -> float:
        return self.tree.distance(a, b)

    def diameter(self) -> float:
        return self.tree.diameter()


# -- synthetic ultrametrics ---------------------------------------------------
def morton_lca_exp(codes: np.ndarray, bits: int, top: int = 0) -> LcaExp:
    """Quadtree ultrametric on points given by interleaved 2-D codes with
    `bits` levels: two points first split at depth k get label 2^(top-k)."""

    def f(x: int, y: int) -> Optional[int]:
        a, b = int(codes[x - 1]), int(codes[y - 1])
        if a == b:
            return None
        lead = (a ^ b).bit_length()  # highest differing bit, 1-based
        depth = bits - (lead + 1) // 2  # base-4 digit where they split
        return top - depth

    return f


def random_hst_lca(rng: np.random.Generator, n_leaves: int, max_depth: int = 6,
                   branch: tuple[int, int] = (2, 4)) -> tuple[LcaExp, list[tuple]]:
    """Random uncompressed 2-HST shape with labelled leaves 1..n_leaves.

    Returns lca_exp over leaf ids and each leaf's root path (tuple of child
    indices).  Depth k has label 2^(max_depth - k)."""
    paths: list[tuple] = []
    for _ in range(n_leaves):
        depth = int(rng.integers(1, max_depth + 1))
        paths.append(tuple(int(rng.integers(0, rng.integers(branch[0], branch[1] + 1))) for _ in range(depth)))

    def f(x: int, y: int) -> Optional[int]:
        p, q = paths[x - 1], paths[y - 1]
        k = 0
        while k < len(p) and k < len(q) and p[k] == q[k]:
            k += 1
        if k == len(p) and k == len(q):
            return None
        return max_depth - k

    return f, paths
