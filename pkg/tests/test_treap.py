import random

from onlinemetric import treap


class Node:
    def __init__(self, v, pri):
        self.v = v
        self.pri = pri
        self.left = self.right = self.parent = None
        self.size = 1


def pull(t):
    t.size = 1 + treap.size(t.left) + treap.size(t.right)


def build(vals, rnd):
    t = None
    for v in vals:
        t = treap.merge(t, Node(v, rnd.random()), pull)
    return t


def test_split_merge_roundtrip():
    rnd = random.Random(0)
    t = build(range(100), rnd)
    for k in (0, 1, 37, 99, 100):
        a, b = treap.split(t, k, pull)
        assert treap.size(a) == k
        assert [n.v for n in treap.inorder(a)] == list(range(k)) if a else k == 0
        t = treap.merge(a, b, pull)
        assert [n.v for n in treap.inorder(t)] == list(range(100))


def test_rank_and_kth():
    rnd = random.Random(1)
    t = build(range(50), rnd)
    for k in range(1, 51):
        n = treap.kth(t, k)
        assert n.v == k - 1
        assert treap.rank(n) == k
        assert treap.root_of(n) is t
    assert treap.first(t).v == 0 and treap.last(t).v == 49
