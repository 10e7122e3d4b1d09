"""Implicit treap helpers shared by the sequence structures.

Nodes carry `pri`, `left`, `right`, `parent` and `size`; each structure
passes its own `pull` that recomputes a node's aggregates from its
children.  Positions are 1-based and implicit.
"""
from __future__ import annotations


def size(t) -> int:
    return t.size if t is not None else 0


def split(t, k: int, pull):
    """Split into the first k nodes and the rest; both roots get parent None."""
    if t is None:
        return None, None
    ls = t.left.size if t.left is not None else 0
    if k <= ls:
        a, b = split(t.left, k, pull)
        t.left = b
        if b is not None:
            b.parent = t
        pull(t)
        t.parent = None
        return a, t
    a, b = split(t.right, k - ls - 1, pull)
    t.right = a
    if a is not None:
        a.parent = t
    pull(t)
    t.parent = None
    return t, b


def merge(a, b, pull):
    if a is None:
        return b
    if b is None:
        return a
    if a.pri > b.pri:
        r = merge(a.right, b, pull)
        a.right = r
        r.parent = a
        pull(a)
        a.parent = None
        return a
    r = merge(a, b.left, pull)
    b.left = r
    r.parent = b
    pull(b)
    b.parent = None
    return b


def root_of(t):
    while t.parent is not None:
        t = t.parent
    return t


def rank(t) -> int:
    r = (t.left.size if t.left is not None else 0) + 1
    while t.parent is not None:
        p = t.parent
        if p.right is t:
            r += (p.left.size if p.left is not None else 0) + 1
        t = p
    return r


def fix_up(t, pull) -> None:
    while t is not None:
        pull(t)
        t = t.parent


def kth(t, k: int):
    """Node at position k (1-based)."""
    while t is not None:
        ls = t.left.size if t.left is not None else 0
        if k <= ls:
            t = t.left
        elif k == ls + 1:
            return t
        else:
            k -= ls + 1
            t = t.right
    raise IndexError(k)


def first(t):
    while t.left is not None:
        t = t.left
    return t


def last(t):
    while t.right is not None:
        t = t.right
    return t


def inorder(t):
    stack = []
    while stack or t is not None:
        while t is not None:
            stack.append(t)
            t = t.left
        t = stack.pop()
        yield t
        t = t.right
