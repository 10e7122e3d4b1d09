"""Acceptance criteria, one test each.

Every test records a one-line verdict that the conftest prints in the
terminal summary, then asserts.  The tolerances are the stated ones.
"""
import math
import random
import time
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import binomtest

from onlinemetric import rng as rngmod
from onlinemetric.adversary import (C_HAT_ADAPTIVE, fig1_sequences, laakso,
                                    prop_one_sequence, run_adaptive)
from onlinemetric.bench import ALGOS, Pipeline
from onlinemetric.decomp import NET_SHIFT, DoublingDecomposition, RadiusTable
from onlinemetric.hst import HstEmbedding, HstTree, morton_lca_exp, random_hst_lca
from onlinemetric.hstmatch import HPInwardMatching, InwardMatching
from onlinemetric.l2embed import L2Embedding, single_sample_embed
from onlinemetric.lightmatch import LightMatching
from onlinemetric.linematch import LineCollection
from onlinemetric.metric import Metric, PointStream, euclidean_from, explicit_from
from onlinemetric.oracles import OracleError, l2_sq_quadrature, mwpm_line, mwpm_prefix_costs

from conftest import record


# -- shared corpus for criteria 1 and 2 ----------------------------------------------
def _hst_corpus(trials=500):
    """Random 2-HSTs with at most 10 pairs, leaves arriving in random order."""
    out = []
    for t in range(trials):
        g = rngmod.spawn(t, rngmod.TESTS, 1)
        n = 2 * int(g.integers(1, 11))
        f, _ = random_hst_lca(g, n, max_depth=int(g.integers(1, 8)))
        perm = [int(v) + 1 for v in g.permutation(n)]
        out.append((n, lambda a, b, f=f, perm=perm: f(perm[a - 1], perm[b - 1])))
    return out


def _play(cls, n, f):
    tree = HstTree()
    alg = cls(tree)
    costs = []
    for x in range(1, n + 1, 2):
        alg.matching.begin_step()
        tree.insert(x, f)
        alg.insert(x)
        tree.insert(x + 1, f)
        alg.insert(x + 1)
        alg.matching.end_step()
        costs.append(alg.cost())
    D = np.array([[tree.distance(a, b) for b in range(1, n + 1)] for a in range(1, n + 1)])
    return costs, mwpm_prefix_costs(D)


@pytest.fixture(scope="module")
def corpus():
    return _hst_corpus()


def test_c01_inward_exact_on_ultrametrics(corpus):
    t0 = time.time()
    bad = 0
    steps = 0
    for n, f in corpus:
        costs, opts = _play(InwardMatching, n, f)
        steps += len(costs)
        bad += sum(1 for c, o in zip(costs, opts) if c != o)
    dt = time.time() - t0
    ok = bad == 0 and dt < 60
    record(1, ok, f"inward == brute force on {len(corpus)} HSTs, {steps} steps, {bad} mismatches, {dt:.1f}s")
    assert ok


def test_c02_hp_two_approx(corpus):
    t0 = time.time()
    worst = 0.0
    bad = 0
    for n, f in corpus:
        costs, opts = _play(HPInwardMatching, n, f)
        for c, o in zip(costs, opts):
            if c > 2 * o:
                bad += 1
            if o > 0:
                worst = max(worst, c / o)
    dt = time.time() - t0
    ok = bad == 0 and dt < 60
    record(2, ok, f"hp <= 2 opt on {len(corpus)} HSTs, worst ratio {worst:.3f}, {dt:.1f}s")
    assert ok


# -- criterion 3 ------------------------------------------------------------------------
def _p99(v):
    return float(np.percentile(v, 99))


def _hst_mods(cls, n, seed):
    g = rngmod.spawn(seed, rngmod.TESTS, 3, n)
    bits = 16
    codes = g.choice(1 << (2 * bits), n, replace=False)
    f = morton_lca_exp(codes, bits)
    tree = HstTree()
    alg = cls(tree)
    mods = []
    for x in range(1, n + 1, 2):
        alg.matching.begin_step()
        tree.insert(x, f)
        alg.insert(x)
        tree.insert(x + 1, f)
        alg.insert(x + 1)
        d, a = alg.matching.end_step()
        if cls is InwardMatching and d > 2 * tree.height():
            raise AssertionError(f"{d} deletions with height {tree.height()}")
        mods.append(d + a)
    return mods


def _line_mods(n, seed, ops=4000):
    rnd = random.Random(seed)
    col = LineCollection(seed=seed)
    s = None
    for _ in range(n):
        s, _ = col.insert_point(s, rnd.randint(0, 0 if s is None else len(s)))
    mods = []
    for _ in range(ops):
        before = col.modifications
        if rnd.random() < 0.5:
            s, _ = col.insert_point(s, rnd.randint(0, len(s)))
        else:
            s = col.remove_point(col.kth(s, rnd.randint(1, len(s))))
        mods.append(col.modifications - before)
    return mods


def _light_mods(n, seed):
    pts = rngmod.spawn(seed, rngmod.TESTS, 3, n).random((n, 2))
    alg = LightMatching(euclidean_from(pts), seed=seed)
    mods = []
    for x in range(1, n + 1, 2):
        d, a = alg.insert_pair(x, x + 1)
        mods.append(d + a)
    return mods


def test_c03_recourse_scaling():
    t0 = time.time()
    lo, hi = 1 << 12, 1 << 16
    limit = (math.log(hi) / math.log(lo)) ** 3 * 1.1
    inward_ok = True
    try:
        _hst_mods(InwardMatching, lo, 0)
        _hst_mods(InwardMatching, hi, 0)
    except AssertionError:
        inward_ok = False
    growth = {
        "line": _p99(_line_mods(hi, 0)) / _p99(_line_mods(lo, 0)),
        "hp": _p99(_hst_mods(HPInwardMatching, hi, 0)) / _p99(_hst_mods(HPInwardMatching, lo, 0)),
        "light": _p99(_light_mods(hi, 0)) / _p99(_light_mods(lo, 0)),
    }
    dt = time.time() - t0
    ok = inward_ok and all(v <= limit for v in growth.values()) and dt < 600
    parts = ", ".join(f"{k} x{v:.2f}" for k, v in growth.items())
    record(3, ok, f"inward within 2*height: {inward_ok}; p99 growth {parts} (limit x{limit:.2f}), {dt:.0f}s")
    assert ok


# -- criterion 4 ------------------------------------------------------------------------
def test_c04_line_matching_invariants():
    t0 = time.time()
    rnd = random.Random(4)
    col = LineCollection(seed=4)
    sets = []
    maxm = 48
    done = 0
    errs = []
    while done < 100_000 and not errs:
        r = rnd.random()
        touched = []
        if r < 0.15 or not sets:
            s, _ = col.create()
            sets.append(s)
            touched = [s]
        elif r < 0.2:
            ones = [s for s in sets if len(s) == 1]
            if not ones:
                continue
            s = rnd.choice(ones)
            col.delete(s)
            sets.remove(s)
        elif r < 0.45:
            if len(sets) < 2:
                continue
            a, b = rnd.sample(sets, 2)
            if len(a) + len(b) > maxm:
                continue
            sets.remove(a)
            sets.remove(b)
            touched = [col.merge(a, b)]
        elif r < 0.65:
            big = [s for s in sets if len(s) > 1]
            if not big:
                continue
            s = rnd.choice(big)
            sets.remove(s)
            touched = list(col.split(s, rnd.randint(1, len(s) - 1)))
        elif r < 0.85:
            s = rnd.choice(sets)
            if len(s) >= maxm:
                continue
            sets.remove(s)
            ns, _ = col.insert_point(s, rnd.randint(0, len(s)))
            touched = [ns]
        else:
            s = rnd.choice(sets)
            sets.remove(s)
            ns = col.remove_point(rnd.choice(col.elements(s)))
            touched = [] if ns is None else [ns]
        sets.extend(t for t in touched if t not in sets)
        for s in touched:
            errs += col.check(s)
        done += 1
    dt = time.time() - t0
    ok = not errs and dt < 300
    record(4, ok, f"{done} ops, (I1)-(I4) and depth checked after each, {len(errs)} violations, {dt:.0f}s")
    assert ok, errs[:3]


# -- criterion 5 ------------------------------------------------------------------------
def test_c05_domination():
    bad = 0
    pairs = 0
    for seed in range(20):
        for variant in ("doubling", "euclidean"):
            pts = rngmod.spawn(seed, rngmod.TESTS, 5).random((40, 2)) * 10.0 ** (seed % 4)
            st = PointStream(euclidean_from(pts))
            emb = HstEmbedding(st, seed, variant)
            for a in range(1, 41):
                for b in range(a + 1, 41):
                    pairs += 1
                    if emb.distance(a, b) < st.metric.distance(a, b):
                        bad += 1
    ok = bad == 0
    record(5, ok, f"d_U >= d_X on {pairs} pairs over 20 seeds x 2 variants, {bad} violations")
    assert ok


# -- criterion 6 ------------------------------------------------------------------------
# Exact numbers of the form sum_k c_k sqrt(q_k), with rational c_k and q_k,
# stored as {q_k: c_k}.  Coordinates and radii are floats, hence rational.
def _sym_sqrt(q):
    return {q: Fraction(1)} if q else {}


def _sym_add(u, v, sign=1):
    out = dict(u)
    for q, c in v.items():
        out[q] = out.get(q, 0) + sign * c
        if out[q] == 0:
            del out[q]
    return out


def _sym_value(u):
    return sum((Decimal(c.numerator) / c.denominator)
               * (Decimal(q.numerator) / q.denominator).sqrt() for q, c in u.items())


def _sym_abs(u):
    v = _sym_value(u)
    if u and abs(v) < Decimal("1e-40"):
        raise AssertionError(f"cannot sign {u}")
    return u if v >= 0 else {q: -c for q, c in u.items()}


def _sym_dist(p, q):
    return _sym_sqrt(sum((Fraction(float(a)) - Fraction(float(b))) ** 2 for a, b in zip(p, q)))


def _exact_coord(pts, tops, radii, x, i):
    """f_i(x) redone exactly: first net center within reach, then the
    smallest |reach - d| over the centers up to and including it."""
    best = None
    for j in range(x):
        if not tops[j] >= i + NET_SHIFT:
            continue
        d = _sym_dist(pts[x - 1], pts[j])
        reach = {Fraction(1): Fraction(float(radii[j])) * Fraction(2) ** i / 4}
        gap = _sym_abs(_sym_add(reach, d, -1))
        if best is None or _sym_value(_sym_add(gap, best, -1)) < 0:
            best = gap
        if _sym_value(_sym_add(reach, d, -1)) >= 0:
            return best
    raise AssertionError(f"no center for {x} at scale {i}")


def test_c06_lipschitz_and_sparsity():
    t0 = time.time()
    getcontext().prec = 80
    worst = -math.inf
    worst_exact = -math.inf
    rechecked = ties = 0
    sparse_bad = 0
    for seed in range(100):
        pts = rngmod.spawn(seed, rngmod.TESTS, 6).random((50, 2))
        st = PointStream(euclidean_from(pts))
        f = single_sample_embed(st, seed)
        D = st.metric.matrix()
        table = RadiusTable(seed)
        for k in range(1, 51):
            table.add(k, st.estimate_ddim(k))
        radii = table.r_array(50)
        tops = st.nets.tops_array(50)
        for x in range(1, 51):
            if len(f[x]) > 3 * x:
                sparse_bad += 1
            for y in range(x + 1, 51):
                for i in set(f[x]) | set(f[y]):
                    gap = abs(f[x].get(i, 0.0) - f[y].get(i, 0.0)) - D[x - 1, y - 1]
                    worst = max(worst, gap)
                    if gap > -1e-9:
                        # too close to call in floats: decide it exactly
                        rechecked += 1
                        fx = _exact_coord(pts, tops, radii, x, i) if i in f[x] else {}
                        fy = _exact_coord(pts, tops, radii, y, i) if i in f[y] else {}
                        diff = _sym_add(_sym_abs(_sym_add(fx, fy, -1)) if fx != fy else {},
                                        _sym_dist(pts[x - 1], pts[y - 1]), -1)
                        if not diff:
                            ties += 1
                            worst_exact = max(worst_exact, 0.0)
                        else:
                            v = _sym_value(diff)
                            assert abs(v) > Decimal("1e-40"), f"cannot sign {diff}"
                            worst_exact = max(worst_exact, float(v))
    dt = time.time() - t0
    ok = worst_exact <= 0 and sparse_bad == 0 and dt < 120
    record(6, ok, f"float max |f_i(x)-f_i(y)| - d(x,y) = {worst:.3g}; {rechecked} near-ties decided "
                  f"exactly ({ties} exact equalities), max {worst_exact:.3g}; "
                  f"sparsity violations {sparse_bad}, {dt:.0f}s")
    assert ok


# -- criterion 7 ------------------------------------------------------------------------
def test_c07_padding_halves():
    t0 = time.time()
    g = rngmod.spawn(7, rngmod.TESTS, 7)
    grid = np.array([(a, b) for a in range(32) for b in range(32)], dtype=float)
    st = PointStream(euclidean_from(grid[g.permutation(len(grid))]))
    n = len(st)
    D = st.metric.matrix()
    i = 6
    radii = [2.0 ** i / 64, 2.0 ** i / 32, 2.0 ** i / 16, 2.0 ** i / 8]
    trials = 2000
    hits = np.zeros(len(radii), dtype=int)
    for s in range(trials):
        dec = DoublingDecomposition(st, s)
        x = int(rngmod.spawn(s, rngmod.TESTS, 7, 1).integers(1, n + 1))
        cx = dec.center(x, i)
        for k, R in enumerate(radii):
            ball = np.nonzero(D[x - 1] <= R)[0] + 1
            hits[k] += any(dec.center(int(y), i) != cx for y in ball)
    cis = [binomtest(int(h), trials).proportion_ci(0.95, method="wilson") for h in hits]
    bad = []
    for k in range(len(radii) - 1):
        small, big = cis[k], cis[k + 1]
        # Pr[split at R/2] is consistent with Pr[split at R] / 2
        if small.high < big.low / 2 or small.low > big.high / 2:
            bad.append(f"1/{2 ** (6 - k)} vs 1/{2 ** (5 - k)}")
    dt = time.time() - t0
    ok = not bad and dt < 300
    p = ", ".join(f"{h / trials:.3f}" for h in hits)
    record(7, ok, f"split probabilities at R/2^i = 1/64..1/8: {p}; halving within Wilson CIs "
                  f"fails for: {', '.join(bad) or 'none'}; {dt:.0f}s")
    assert ok


# -- criterion 8 ------------------------------------------------------------------------
def _geo_instance(seed, n=6):
    g = np.random.default_rng(seed)
    pts = (g.choice([-1, 1], n) * 4.0 ** g.uniform(0, 5, n))[:, None]
    st = PointStream(Metric("euclidean", dim=1))
    for p in pts:
        st.append(p)
    return st


def test_c08_realization_matches_quadrature():
    t0 = time.time()
    worst = 0.0
    identical = True
    seeds = [16, 31]  # 6-point instances whose scales need at most 3 radii
    for seed in seeds:
        st = _geo_instance(seed)
        n = len(st)
        dist = st.metric.matrix()
        tops = st.nets.tops_array(n)
        lams = [4.0 * st.estimate_ddim(k) for k in range(1, n + 1)]
        emb = L2Embedding(st, seed=seed, budget=20000)
        Y = emb.gram.matrix()
        before = [y.copy() for y in emb.vectors()]
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                q = l2_sq_quadrature(dist, tops, lams, a, b, max_cells=1_000_000)
                got = float(((Y[a - 1] - Y[b - 1]) ** 2).sum())
                worst = max(worst, abs(got / q - 1.0))
        emb.add([float(np.random.default_rng(seed + 1).uniform(-100, 100))])
        after = emb.vectors()[:n]
        identical &= all(u.tobytes() == v.tobytes() for u, v in zip(before, after))
    dt = time.time() - t0
    ok = worst <= 0.05 and identical and dt < 120
    record(8, ok, f"max relative error vs quadrature {worst:.4f} (limit 0.05), first 6 vectors unchanged: {identical}, {dt:.0f}s")
    assert ok


# -- criterion 9 ------------------------------------------------------------------------
def test_c09_laakso_distortion_trend():
    t0 = time.time()
    ks = list(range(2, 7))
    means = []
    for k in ks:
        vals = []
        for seed in range(50):
            st = PointStream(explicit_from(laakso(k, seed).distances()))
            vals.append(L2Embedding(st, seed=seed, budget=2000).distortion()[0])
        means.append(float(np.mean(vals)))
    y = np.array(means) ** 2
    A = np.vstack([ks, np.ones(len(ks))]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r2 = 1.0 - float(((y - A @ coef) ** 2).sum()) / float(((y - y.mean()) ** 2).sum())
    mono = all(a < b for a, b in zip(means, means[1:]))
    dt = time.time() - t0
    ok = mono and coef[0] > 0 and r2 >= 0.8 and dt < 600
    m = ", ".join(f"{v:.2f}" for v in means)
    record(9, ok, f"mean distortion k=2..6: {m}; slope of distortion^2 {coef[0]:.2f}, R^2 {r2:.3f}, {dt:.0f}s")
    assert ok


# -- criterion 10 -----------------------------------------------------------------------
def test_c10_adaptive_lower_bound():
    t0 = time.time()
    r = 2
    pipe = Pipeline("light", dim=1, cap=r, seed=0, verify=False)
    adv = run_adaptive(lambda p, q: pipe.add_pair([p], [q]), pipe.matching, r=r, n=20 ** 3)
    pos = list(adv.pos.values())
    diam = max(pos) - min(pos)
    weight = pipe.cost()
    bound = C_HAT_ADAPTIVE * adv.bound(diam, len(pos))
    capped = max(d for d, _ in pipe.matching.history) <= r
    cert = adv.certificate_ok()
    dt = time.time() - t0
    ok = weight >= bound and cert and capped and dt < 300
    rounds = "; ".join(f"round {x.round} {x.case} long={x.long_edges} witness={x.witness} thr={x.threshold:g}"
                       for x in adv.records[1:])
    record(10, ok, f"weight {weight:.0f} >= {bound:.0f}; certificate {cert} ({rounds}); {dt:.0f}s")
    assert ok


# -- criterion 11 -----------------------------------------------------------------------
def test_c11_one_recourse_is_not_enough():
    t0 = time.time()
    seq = prop_one_sequence(5, 0.04)
    opt = mwpm_line(seq).cost
    finals = {}
    for algo in ALGOS:
        pipe = Pipeline(algo, dim=1, cap=1, seed=0)
        for t in range(0, 8, 2):
            pipe.add_pair([seq[t]], [seq[t + 1]])
        assert max(d for d, _ in pipe.matching.history) <= 1
        finals[algo] = pipe.cost()
    dt = time.time() - t0
    ok = abs(opt - 0.16) < 1e-12 and all(w > 1 and w / opt > 5 for w in finals.values()) and dt < 1
    parts = ", ".join(f"{a} {w:g}" for a, w in finals.items())
    record(11, ok, f"OPT {opt:.2f}; final weights under cap 1: {parts}; {dt:.2f}s")
    assert ok


# -- criterion 12 -----------------------------------------------------------------------
def test_c12_fig1_arrival_matching():
    t0 = time.time()
    n, W, eps = 100, Fraction(10 ** 6), Fraction(1, 1000)
    a, _ = fig1_sequences(n, W, eps)
    weight = sum(abs(a[t] - a[t + 1]) for t in range(0, len(a), 2))
    srt = sorted(a)
    opt = sum(srt[t + 1] - srt[t] for t in range(0, len(srt), 2))
    dt = time.time() - t0
    ok = weight == 2 * n * W and opt == 2 * eps * n and dt < 1
    record(12, ok, f"arrival-order weight {weight} == 2nW, OPT {opt} == 2*eps*n (exact), {dt:.2f}s")
    assert ok
