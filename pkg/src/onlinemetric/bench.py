"""Online matching pipelines and benchmark rows.

A Pipeline owns the point stream, the online matcher and optionally a
recourse cap.  HST matchers run on the online tree embedding of the
stream; costs are always reported in the source metric.
"""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Optional

import numpy as np

from . import rng as rngmod
from .hst import HstEmbedding
from .hstmatch import HPInwardMatching, InwardMatching
from .lightmatch import LightMatching
from .matching import ArrivalOrderMatching, CappedFollower
from .metric import Metric, PointStream
from .oracles import MAX_DP, mst_cost, mwpm_bruteforce, mwpm_line

ALGOS = ("arrival", "inward", "hp", "light")
FAMILIES = ("grid", "uniform", "line", "clustered")


@dataclass
class BenchRow:
    step: int
    algo: str
    cost: float
    opt: Optional[float]
    ratio: Optional[float]
    mst: float
    lightness: float
    deletions: int
    additions: int
    seed: int


class PipelineError(AssertionError):
    pass


class Pipeline:
    """Feeds arriving pairs to one matcher.

    algo: arrival, inward, hp or light.  variant picks the decomposition
    behind the HST (doubling or euclidean); strategy the spanning tree
    behind light matching (greedy or swap).  With cap = r the reported
    matching is a CappedFollower that deletes at most r edges per pair."""

    def __init__(self, algo: str, dim: Optional[int] = 1, mode: str = "euclidean",
                 variant: str = "doubling", strategy: str = "greedy", seed: int = 0,
                 cap: Optional[int] = None, verify: bool = False):
        if algo not in ALGOS:
            raise ValueError(f"unknown algorithm {algo!r}")
        self.algo = algo
        self.seed = seed
        self.verify = verify
        self.metric = Metric(mode, dim=dim)
        self.emb = None
        if algo in ("inward", "hp"):
            self.stream = PointStream(self.metric)
            self.emb = HstEmbedding(self.stream, seed, variant)
            if algo == "inward":
                self.core = InwardMatching(self.emb.tree)
            else:
                self.core = HPInwardMatching(self.emb.tree, seed=seed)
        elif algo == "light":
            self.core = LightMatching(self.metric, strategy=strategy, seed=seed)
        else:
            self.core = ArrivalOrderMatching()
        self.capper = CappedFollower(cap, self.metric.distance) if cap is not None else None
        self.cap = cap

    @property
    def matching(self):
        return self.capper.matching if self.capper is not None else self.core.matching

    def __len__(self) -> int:
        return len(self.metric)

    def _add(self, payload) -> int:
        if self.emb is not None:
            x, _ = self.emb.add(payload)
        else:
            x = self.metric.append(payload)
        self.core.insert(x)
        return x

    def add_pair(self, p, q) -> tuple[int, int]:
        core = self.core.matching
        core.begin_step()
        x = self._add(p)
        y = self._add(q)
        core.end_step()
        if self.capper is not None:
            self.capper.follow(x, y, core.mate, touched=core.last_step_points())
        if self.verify:
            errs = self.check()
            if errs:
                raise PipelineError(f"step {self.matching.step}: " + "; ".join(errs[:3]))
        return x, y

    def cost(self) -> float:
        return self.matching.cost(self.metric.distance)

    def check(self) -> list[str]:
        errs = []
        if hasattr(self.core, "check"):
            errs += self.core.check()
        M = self.matching
        if 2 * len(M) != len(self.metric):
            errs.append("matching is not perfect")
        if self.emb is not None:
            for a, b in M.edges():
                if self.emb.distance(a, b) < self.metric.distance(a, b) * (1 - 1e-12):
                    errs.append(f"tree distance of {a}-{b} below the metric")
                    break
        if self.cap is not None and M.history and M.history[-1][0] > self.cap:
            errs.append(f"{M.history[-1][0]} deletions above the cap {self.cap}")
        return errs


# -- instance families ----------------------------------------------------------
def family_points(family: str, n: int, seed: int) -> np.ndarray:
    """n points (n even) of a named family, in arrival order."""
    if n % 2:
        raise ValueError("need an even number of points")
    g = rngmod.spawn(seed, rngmod.BENCH, FAMILIES.index(family) if family in FAMILIES else 99)
    if family == "grid":
        side = math.ceil(math.sqrt(n))
        pts = np.array([(a, b) for a in range(side) for b in range(side)], dtype=float)
        return pts[g.permutation(len(pts))[:n]]
    if family == "uniform":
        return g.random((n, 2))
    if family == "line":
        return g.random((n, 1))
    if family == "clustered":
        k = max(1, int(round(math.sqrt(n) / 2)))
        centers = g.random((k, 2))
        spread = 10.0 ** g.uniform(-4, -2, k)
        lab = g.integers(0, k, n)
        return centers[lab] + g.normal(size=(n, 2)) * spread[lab, None]
    raise ValueError(f"unknown family {family!r}")


def trace(pts, algo: str, seed: int = 0, mode: str = "euclidean", variant: str = "doubling",
          strategy: str = "greedy", cap: Optional[int] = None, every: int = 1,
          opt_limit: int = 16, verify: bool = False) -> tuple[Pipeline, list[BenchRow]]:
    """Feed the payloads pts[0], pts[1], ... in pairs and return a row every
    `every` steps and at the end.

    deletions and additions are the largest per-step counts since the
    previous row.  opt is exact: by sorting on the line, by subset dynamic
    programming for at most opt_limit points, and missing otherwise."""
    n = len(pts)
    if n % 2:
        raise ValueError("need an even number of points")
    dim = None if mode == "explicit" else len(pts[0])
    pipe = Pipeline(algo, dim=dim, mode=mode, variant=variant, strategy=strategy,
                    seed=seed, cap=cap, verify=verify)
    rows = []
    dmax = amax = 0
    steps = n // 2
    for s in range(1, steps + 1):
        pipe.add_pair(pts[2 * s - 2], pts[2 * s - 1])
        d, a = pipe.matching.history[-1]
        dmax, amax = max(dmax, d), max(amax, a)
        if s % every and s != steps:
            continue
        m = 2 * s
        cost = pipe.cost()
        D = pipe.metric.matrix(list(range(1, m + 1)))
        opt = None
        if dim == 1:
            opt = mwpm_line([pipe.metric.coords(k)[0] for k in range(1, m + 1)]).cost
        elif m <= min(opt_limit, MAX_DP):
            opt = mwpm_bruteforce(D).cost
        ratio = None
        if opt is not None:
            ratio = 1.0 if opt == 0 and cost == 0 else (cost / opt if opt > 0 else math.inf)
        mst = mst_cost(D)
        light = cost / mst if mst > 0 else (1.0 if cost == 0 else math.inf)
        rows.append(BenchRow(s, algo, cost, opt, ratio, mst, light, dmax, amax, seed))
        dmax = amax = 0
    return pipe, rows


def run_bench(family: str, algo: str, n: int, seed: int, **kw) -> list[BenchRow]:
    """One trial on a generated family; keywords as in trace()."""
    return trace(family_points(family, n, seed), algo, seed=seed, **kw)[1]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows: Iterable[BenchRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f.name for f in fields(BenchRow)])
    for r in rows:
        w.writerow([_fmt(v) for v in astuple(r)])
