"""Laminar near-perfect matchings on dynamic ordered sets.

A collection of sets, each an ordered sequence of elements with ranks
1..m, supports create, delete, merge (concatenate), split and single
point insert/remove.  Every set keeps a near-perfect matching M whose
edges, together with their virtual edges xi, obey

  (I1) M and the virtual edges together are laminar (no crossing a1<a2<b1<b2);
  (I2) no edge or virtual edge lies strictly between ab and xi(ab);
  (I3) the unmatched point is not strictly inside any edge or virtual edge;
  (I4) if a1b1 is strictly inside a2b2 then l(a1b1) <= l(a2b2)/2,
       where l is the length of the virtual edge.

These bound the nesting depth by ceil(log2 m).  Sets are treaps with
implicit ranks; an edge is stored on its left endpoint together with the
offsets of its virtual edge, which stay valid under concatenation and
under splits that do not cut the virtual edge.
"""
from __future__ import annotations

import math
import random
from typing import Callable, Optional

from . import treap

NEG = -(1 << 60)
POS = 1 << 60


class Elem:
    __slots__ = ("pri", "left", "right", "parent", "size", "payload", "mate", "is_left",
                 "ell", "offc", "offd", "unm", "mxl", "mxd", "mnc", "owner")

    def __init__(self, pri: float, payload=None):
        self.pri = pri
        self.left = self.right = self.parent = None
        self.size = 1
        self.payload = payload
        self.mate: Optional[Elem] = None
        self.is_left = False
        self.ell = -1
        self.offc = 0
        self.offd = 0
        self.unm = 1
        self.mxl = -1
        self.mxd = NEG
        self.mnc = POS
        self.owner = None

    def __repr__(self) -> str:
        return f"Elem({self.payload!r})"


def _pull(t: Elem) -> None:
    L = t.left
    R = t.right
    if L is None:
        ls = 0
        unm = 0
        mxl = -1
        mxd = NEG
        mnc = POS
    else:
        ls = L.size
        unm = L.unm
        mxl = L.mxl
        mxd = L.mxd
        mnc = L.mnc
    pos = ls + 1
    if t.mate is None:
        unm += 1
    elif t.is_left:
        if t.ell > mxl:
            mxl = t.ell
        v = pos + t.offd
        if v > mxd:
            mxd = v
        v = pos - t.offc
        if v < mnc:
            mnc = v
    size = pos
    if R is not None:
        size += R.size
        unm += R.unm
        if R.mxl > mxl:
            mxl = R.mxl
        v = pos + R.mxd
        if v > mxd:
            mxd = v
        v = pos + R.mnc
        if v < mnc:
            mnc = v
    t.size = size
    t.unm = unm
    t.mxl = mxl
    t.mxd = mxd
    t.mnc = mnc


class LineSet:
    """Handle for one set of the collection; dead after merge/split/delete."""

    __slots__ = ("root", "alive")

    def __init__(self, root: Optional[Elem]):
        self.root = root
        self.alive = True
        if root is not None:
            root.owner = self

    def __len__(self) -> int:
        return treap.size(self.root)

    def __repr__(self) -> str:
        return f"LineSet(size={len(self)})"


class InvariantError(AssertionError):
    pass


class LineCollection:
    def __init__(self, seed: int = 0, listener: Optional[Callable] = None, verify: bool = False):
        self._rand = random.Random(seed)
        self.listener = listener
        self.verify = verify
        self.additions = 0
        self.deletions = 0
        self.repair_iterations = 0

    @property
    def modifications(self) -> int:
        return self.additions + self.deletions

    # -- handles ------------------------------------------------------------
    def _wrap(self, root: Optional[Elem]) -> Optional[LineSet]:
        return None if root is None else LineSet(root)

    @staticmethod
    def _kill(*sets: LineSet) -> None:
        for s in sets:
            if s is not None:
                if not s.alive:
                    raise ValueError("stale set handle")
                s.alive = False

    @staticmethod
    def set_of(e: Elem) -> LineSet:
        return treap.root_of(e).owner

    @staticmethod
    def rank(e: Elem) -> int:
        return treap.rank(e)

    @staticmethod
    def elements(s: Optional[LineSet]) -> list[Elem]:
        return [] if s is None else list(treap.inorder(s.root))

    @staticmethod
    def first(s: LineSet) -> Elem:
        return treap.first(s.root)

    @staticmethod
    def kth(s: LineSet, k: int) -> Elem:
        return treap.kth(s.root, k)

    @staticmethod
    def count_prefix(s: Optional[LineSet], pred: Callable) -> int:
        """Number of leading elements whose payload satisfies pred (pred must
        hold on a prefix of the set)."""
        if s is None:
            return 0
        cnt = 0
        t = s.root
        while t is not None:
            if pred(t.payload):
                cnt += treap.size(t.left) + 1
                t = t.right
            else:
                t = t.left
        return cnt

    # -- edges --------------------------------------------------------------
    def _link(self, a: Elem, b: Elem, ra: int, c: int, d: int) -> None:
        """Match a (rank ra) with a later element b; virtual edge [c, d]."""
        a.mate = b
        b.mate = a
        a.is_left = True
        b.is_left = False
        a.ell = d - c
        a.offc = ra - c
        a.offd = d - ra
        b.ell = -1
        treap.fix_up(a, _pull)
        treap.fix_up(b, _pull)
        self.additions += 1
        if self.listener is not None:
            self.listener("add", a, b)

    def _unlink(self, a: Elem) -> None:
        b = a.mate
        if not a.is_left:
            a, b = b, a
        a.mate = b.mate = None
        a.is_left = False
        a.ell = -1
        treap.fix_up(a, _pull)
        treap.fix_up(b, _pull)
        self.deletions += 1
        if self.listener is not None:
            self.listener("del", a, b)

    @staticmethod
    def virtual(a: Elem, ra: Optional[int] = None) -> tuple[int, int]:
        if ra is None:
            ra = treap.rank(a)
        return ra - a.offc, ra + a.offd

    # -- queries on a root ----------------------------------------------------
    @staticmethod
    def _unmatched(t: Optional[Elem], out: list) -> None:
        if t is None or t.unm == 0:
            return
        LineCollection._unmatched(t.left, out)
        if t.mate is None:
            out.append(t)
        LineCollection._unmatched(t.right, out)

    def unmatched(self, s: Optional[LineSet]) -> list[Elem]:
        out: list[Elem] = []
        if s is not None:
            self._unmatched(s.root, out)
        return out

    @staticmethod
    def _stab(t: Optional[Elem], off: int, k: int, out: list) -> None:
        """Left endpoints whose virtual edge [c, d] has c <= k < d."""
        if t is None or t.mxl < 0:
            return
        if off + t.size <= k:
            if off + t.mxd <= k:
                return
        elif off + 1 > k:
            if off + t.mnc > k:
                return
        pos = off + treap.size(t.left) + 1
        LineCollection._stab(t.left, off, k, out)
        if t.is_left and pos - t.offc <= k < pos + t.offd:
            out.append(t)
        LineCollection._stab(t.right, pos, k, out)

    @staticmethod
    def _range_max(t: Optional[Elem], off: int, lo: int, hi: int) -> int:
        if t is None or t.mxl < 0:
            return -1
        a = off + 1
        b = off + t.size
        if b < lo or a > hi:
            return -1
        if lo <= a and b <= hi:
            return t.mxl
        pos = off + treap.size(t.left) + 1
        v = LineCollection._range_max(t.left, off, lo, hi)
        if lo <= pos <= hi and t.is_left and t.ell > v:
            v = t.ell
        w = LineCollection._range_max(t.right, pos, lo, hi)
        return v if v >= w else w

    @staticmethod
    def _range_first(t: Optional[Elem], off: int, lo: int, hi: int, val: int):
        """Leftmost left endpoint in ranks [lo, hi] with ell >= val."""
        if t is None or t.mxl < val:
            return None
        a = off + 1
        b = off + t.size
        if b < lo or a > hi:
            return None
        if lo <= a and b <= hi:
            while True:
                L = t.left
                if L is not None and L.mxl >= val:
                    t = L
                elif t.is_left and t.ell >= val:
                    return t
                else:
                    t = t.right
        pos = off + treap.size(t.left) + 1
        r = LineCollection._range_first(t.left, off, lo, hi, val)
        if r is not None:
            return r
        if lo <= pos <= hi and t.is_left and t.ell >= val:
            return t
        return LineCollection._range_first(t.right, pos, lo, hi, val)

    # -- repair -----------------------------------------------------------------
    def _repair(self, root: Elem, cands: list[Elem]) -> None:
        if not cands:
            return
        m = root.size
        iv = sorted(((treap.rank(a), treap.rank(a.mate)) for a in cands))
        for (a1, b1), (a2, b2) in zip(iv, iv[1:]):
            if a2 < b1:
                raise InvariantError("repair candidates overlap")
        guard = 4 * len(cands) * max(1, math.ceil(math.log2(max(m, 2)))) + 8
        it = 0
        cands = sorted(cands, key=treap.rank)
        for a2 in cands:
            while a2.mate is not None:
                b2 = a2.mate
                ra2 = treap.rank(a2)
                rb2 = treap.rank(b2)
                best = self._range_max(root, 0, ra2 + 1, rb2 - 1)
                if best < 0 or 2 * best <= a2.ell:
                    break
                it += 1
                if it > guard:
                    raise InvariantError("repair did not terminate")
                a1 = self._range_first(root, 0, ra2 + 1, rb2 - 1, best)
                b1 = a1.mate
                ra1 = treap.rank(a1)
                rb1 = treap.rank(b1)
                c2 = ra2 - a2.offc
                d2 = ra2 + a2.offd
                self._unlink(a2)
                self._unlink(a1)
                if ra1 - ra2 <= rb2 - rb1:
                    self._link(a2, a1, ra2, c2, d2)
                    self._link(b1, b2, rb1, rb1, rb2)
                    a2 = b1
                else:
                    self._link(a2, a1, ra2, ra2, ra1)
                    self._link(b1, b2, rb1, c2, d2)
        self.repair_iterations += it

    def _check_root(self, root) -> None:
        if self.verify and root is not None:
            errs = check_set(self._wrap_check(root))
            if errs:
                raise InvariantError("; ".join(errs))

    @staticmethod
    def _wrap_check(root):
        return list(treap.inorder(root))

    # -- operations -------------------------------------------------------------
    def create(self, payload=None) -> tuple[LineSet, Elem]:
        e = Elem(self._rand.random(), payload)
        return LineSet(e), e

    def delete(self, s: LineSet) -> None:
        if len(s) != 1:
            raise ValueError("delete needs a one-element set")
        self._kill(s)

    def merge(self, a: Optional[LineSet], b: Optional[LineSet]) -> Optional[LineSet]:
        if a is None:
            return b
        if b is None:
            return a
        ua = self.unmatched(a) if len(a) % 2 else []
        ub = self.unmatched(b) if len(b) % 2 else []
        self._kill(a, b)
        root = treap.merge(a.root, b.root, _pull)
        if ua and ub:
            x, y = ua[0], ub[0]
            rx = treap.rank(x)
            ry = treap.rank(y)
            self._link(x, y, rx, rx, ry)
            self._repair(root, [x])
        self._check_root(root)
        return LineSet(root)

    def split(self, s: LineSet, k: int) -> tuple[LineSet, LineSet]:
        m = len(s)
        if not 1 <= k < m:
            raise ValueError(f"split position {k} out of range for size {m}")
        self._kill(s)
        crossing: list[Elem] = []
        self._stab(s.root, 0, k, crossing)
        for a in crossing:
            self._unlink(a)
        left, right = treap.split(s.root, k, _pull)
        for side in (left, right):
            free: list[Elem] = []
            self._unmatched(side, free)
            new = []
            for j in range(0, len(free) - 1, 2):
                x, y = free[j], free[j + 1]
                rx = treap.rank(x)
                self._link(x, y, rx, rx, treap.rank(y))
                new.append(x)
            self._repair(side, new)
            self._check_root(side)
        return LineSet(left), LineSet(right)

    def insert_point(self, s: Optional[LineSet], k: int, payload=None) -> tuple[LineSet, Elem]:
        """Insert a new element after the first k elements of s (s may be None)."""
        m = 0 if s is None else len(s)
        if not 0 <= k <= m:
            raise ValueError(f"insert position {k} out of range for size {m}")
        single, e = self.create(payload)
        if s is None:
            return single, e
        if k == 0:
            return self.merge(single, s), e
        if k == m:
            return self.merge(s, single), e
        a, b = self.split(s, k)
        return self.merge(self.merge(a, single), b), e

    def remove_point(self, e: Elem) -> Optional[LineSet]:
        s = self.set_of(e)
        m = len(s)
        if m == 1:
            self.delete(s)
            return None
        r = treap.rank(e)
        left = None
        rest = s
        if r > 1:
            left, rest = self.split(s, r - 1)
        right = None
        mid = rest
        if len(rest) > 1:
            mid, right = self.split(rest, 1)
        self.delete(mid)
        return self.merge(left, right)

    # -- inspection -------------------------------------------------------------
    def edges(self, s: Optional[LineSet]) -> list[tuple[int, int, int, int]]:
        """(a, b, xi_c, xi_d) in ranks, sorted by a."""
        out = []
        for r, e in enumerate(self.elements(s), 1):
            if e.is_left:
                out.append((r, treap.rank(e.mate), r - e.offc, r + e.offd))
        return out

    def pairs(self, s: Optional[LineSet]) -> list[tuple[Elem, Elem]]:
        return [(e, e.mate) for e in self.elements(s) if e.is_left]

    def depth(self, s: Optional[LineSet]) -> int:
        return edge_depth([(a, b) for a, b, _, _ in self.edges(s)])

    def dump(self, s: Optional[LineSet]) -> str:
        m = 0 if s is None else len(s)
        lines = [f"# size {m}"]
        lines += [f"{a} {b} {c} {d}" for a, b, c, d in self.edges(s)]
        return "\n".join(lines) + "\n"

    def check(self, s: Optional[LineSet]) -> list[str]:
        m = 0 if s is None else len(s)
        return check_edges(m, self.edges(s))


def edge_depth(pairs) -> int:
    """Maximum number of pairwise nested intervals among laminar intervals."""
    best = 0
    stack: list[int] = []
    for a, b in sorted(pairs):
        while stack and stack[-1] < a:
            stack.pop()
        stack.append(b)
        best = max(best, len(stack))
    return best


def check_set(elems: list[Elem]) -> list[str]:
    pos = {id(e): r for r, e in enumerate(elems, 1)}
    edges = []
    for r, e in enumerate(elems, 1):
        if e.mate is not None and id(e.mate) not in pos:
            return [f"element {r} matched outside its set"]
        if e.mate is not None and e.mate.mate is not e:
            return [f"element {r} has an asymmetric mate"]
        if e.is_left:
            rb = pos[id(e.mate)]
            if rb <= r:
                return [f"left endpoint {r} after its mate"]
            edges.append((r, rb, r - e.offc, r + e.offd))
    return check_edges(len(elems), edges)


def check_edges(m: int, edges) -> list[str]:
    """Independent O(m^2) check of near-perfectness and (I1)-(I4) plus the
    depth bound, given edges as (a, b, c, d) rank tuples."""
    errs: list[str] = []
    seen: set[int] = set()
    for a, b, c, d in edges:
        if not (1 <= c <= a < b <= d <= m):
            errs.append(f"edge {a}-{b} with virtual edge [{c},{d}] out of range")
        if a in seen or b in seen:
            errs.append(f"point used twice in edge {a}-{b}")
        seen.add(a)
        seen.add(b)
    free = [p for p in range(1, m + 1) if p not in seen]
    if len(free) > 1:
        errs.append(f"not near-perfect: {len(free)} unmatched points")
    ivs = [(a, b) for a, b, _, _ in edges] + [(c, d) for _, _, c, d in edges]
    for i, (p, q) in enumerate(ivs):
        for (s, t) in ivs[i + 1:]:
            if p < s < q < t or s < p < t < q:
                errs.append(f"(I1) crossing intervals [{p},{q}] and [{s},{t}]")
                return errs

    def inside(x, y):  # interval x properly contained in y
        return y[0] <= x[0] and x[1] <= y[1] and x != y

    for a, b, c, d in edges:
        for iv in ivs:
            if inside((a, b), iv) and inside(iv, (c, d)):
                errs.append(f"(I2) interval {list(iv)} between edge {a}-{b} and its virtual edge [{c},{d}]")
                break
    for u in free:
        for p, q in ivs:
            if p < u < q:
                errs.append(f"(I3) unmatched point {u} inside [{p},{q}]")
                break
    for a1, b1, c1, d1 in edges:
        for a2, b2, c2, d2 in edges:
            if a2 < a1 and b1 < b2 and 2 * (d1 - c1) > d2 - c2:
                errs.append(f"(I4) edge {a1}-{b1} (length {d1 - c1}) inside {a2}-{b2} (length {d2 - c2})")
    depth = edge_depth([(a, b) for a, b, _, _ in edges])
    if m >= 2 and depth > math.ceil(math.log2(m)):
        errs.append(f"depth {depth} exceeds ceil(log2 {m})")
    return errs


def parse_dump(text: str) -> tuple[int, list[tuple[int, int, int, int]]]:
    m = None
    edges = []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            parts = s[1:].split()
            if len(parts) == 2 and parts[0] == "size":
                m = int(parts[1])
            continue
        a, b, c, d = (int(v) for v in s.split())
        edges.append((a, b, c, d))
    if m is None:
        m = max((d for _, _, _, d in edges), default=0)
    return m, edges
