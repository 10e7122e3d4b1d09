"""Command-line entry point.

Inputs are either CSV points (`id,x1,...,xd`) or a lower-triangular
distance matrix, one row per point.  Outputs go to --out or stdout.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from . import adversary as adv
from .bench import ALGOS, FAMILIES, run_bench, trace, write_rows
from .decomp import DoublingDecomposition, EuclideanDecomposition, center_label
from .hst import HstEmbedding, HstTree
from .hstmatch import HPInwardMatching, InwardMatching
from .l2embed import L2Embedding
from .lightmatch import LightMatching
from .linematch import check_edges, parse_dump
from .metric import Metric, MetricError, PointStream, load_metric
from .nets import check_nets
from .oracles import OracleError, mst_cost, mwpm_bruteforce, mwpm_line


class UsageError(Exception):
    pass


def _read(path: Optional[str]) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", newline="")


def _stream(args) -> PointStream:
    m = load_metric(_read(args.input), args.format, verify=args.verify)
    if len(m) == 0:
        raise UsageError("input has no points")
    return PointStream(m)


def _payloads(m: Metric) -> list:
    n = len(m)
    if m.mode == "euclidean":
        return [m.coords(k) for k in range(1, n + 1)]
    return [m.row(k, k - 1) for k in range(1, n + 1)]


# -- subcommands ------------------------------------------------------------------
def cmd_embed_hst(args, out) -> int:
    st = _stream(args)
    emb = HstEmbedding(st, args.seed, args.variant)
    if args.verify:
        errs = emb.tree.check()
        n = len(st)
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                if emb.distance(a, b) < st.metric.distance(a, b):
                    errs.append(f"domination fails for {a}-{b}")
        if errs:
            for e in errs:
                print(e, file=sys.stderr)
            return 1
    out.write(emb.tree.export())
    return 0


def cmd_embed_l2(args, out) -> int:
    st = _stream(args)
    emb = L2Embedding(st, args.seed, budget=args.budget, strict=args.verify)
    out.write(f"# distortion {emb.distortion()[0]!r} max_correction {max(emb.gram.corrections)!r}\n")
    for k, y in enumerate(emb.vectors(), 1):
        out.write(",".join([str(k)] + [repr(float(v)) for v in y]) + "\n")
    return 0


def cmd_decompose(args, out) -> int:
    st = _stream(args)
    if args.variant == "doubling":
        dec = DoublingDecomposition(st, args.seed)
    else:
        dec = EuclideanDecomposition(st.metric, args.seed)
    out.write("point,scale,center\n")
    for x in range(1, len(st) + 1):
        out.write(f"{x},{args.scale},{center_label(dec.center(x, args.scale))}\n")
    return 0


def cmd_match(args, out) -> int:
    m = load_metric(_read(args.input), args.format, verify=args.verify)
    if len(m) % 2:
        raise UsageError("matching needs an even number of points")
    if len(m) == 0:
        raise UsageError("input has no points")
    pipe, rows = trace(_payloads(m), args.algo, seed=args.seed, mode=m.mode,
                       variant=args.variant, strategy=args.strategy, cap=args.cap,
                       every=args.every, verify=args.verify)
    write_rows(rows, out)
    if args.edges:
        with open(args.edges, "w") as fh:
            for a, b in pipe.matching.edges():
                fh.write(f"{a},{b}\n")
    return 0


def cmd_oracle(args, out) -> int:
    m = load_metric(_read(args.input), args.format, verify=args.verify)
    n = len(m)
    D = m.matrix(list(range(1, n + 1)))
    if args.kind == "mst":
        out.write(f"{mst_cost(D)!r}\n")
        return 0
    if args.kind == "line":
        if m.mode != "euclidean" or m.dim != 1:
            raise UsageError("line oracle needs one-dimensional points")
        res = mwpm_line([m.coords(k)[0] for k in range(1, n + 1)])
    else:
        res = mwpm_bruteforce(D)
    out.write(f"# cost {res.cost!r}\n")
    for a, b in sorted(tuple(sorted((a + 1, b + 1))) for a, b in res.edges):
        out.write(f"{a},{b}\n")
    return 0


def _write_points(out, xs) -> None:
    out.write("id,x\n")
    for k, x in enumerate(xs, 1):
        out.write(f"{k},{x}\n")


def cmd_lowerbound(args, out) -> int:
    kind = args.kind
    if kind == "prop1":
        _write_points(out, [repr(x) for x in adv.prop_one_sequence(args.k, args.eps)])
    elif kind == "fig1":
        a, b = adv.fig1_sequences(args.n, Fraction(args.W), Fraction(args.eps))
        seq = a if args.which == "a" else b
        _write_points(out, [float(x) if x.denominator != 1 else int(x) for x in map(Fraction, seq)])
    elif kind == "oblivious":
        bits = None if args.bits is None else [int(c) for c in args.bits]
        _write_points(out, adv.oblivious_lb_sequence(args.r, args.n, bits=bits, seed=args.seed))
    elif kind == "adaptive":
        from .bench import Pipeline
        pipe = Pipeline(args.algo, dim=1, seed=args.seed,
                        cap=args.r if args.cap is None else args.cap)
        a = adv.run_adaptive(lambda p, q: pipe.add_pair([p], [q]), pipe.matching, r=args.r, n=args.n)
        for rec in a.records:
            out.write(f"# round {rec.round} {rec.case} emitted {rec.emitted} long {rec.long_edges} "
                      f"threshold {rec.threshold!r} witness {rec.witness} ok {rec.ok}\n")
        pos = [a.pos[x] for x in sorted(a.pos)]
        diam = max(pos) - min(pos)
        out.write(f"# weight {pipe.cost()!r} bound {a.bound(diam, len(pos))!r} "
                  f"certificate {'ok' if a.certificate_ok() else 'FAILED'}\n")
        _write_points(out, [int(p) for p in pos])
    elif kind == "laakso":
        g = adv.laakso(args.k, args.seed)
        D = g.distances()
        out.write("-\n")
        for k in range(1, g.n):
            out.write(" ".join(repr(float(v)) for v in D[k, :k]) + "\n")
    return 0


def cmd_bench(args, out) -> int:
    rows = []
    for s in range(args.seed, args.seed + args.trials):
        for algo in args.algo:
            rows += run_bench(args.family, algo, args.n, s, variant=args.variant,
                              strategy=args.strategy, cap=args.cap, every=args.every,
                              verify=args.verify)
    write_rows(rows, out)
    return 0


def _verify_instance(args) -> list[str]:
    m = load_metric(_read(args.input), args.format, verify=True)
    errs = []
    st = PointStream(m)
    errs += [f"nets: {e}" for e in check_nets(st.nets)]
    variants = ["doubling"] + (["euclidean"] if m.mode == "euclidean" else [])
    n = len(m)
    for var in variants:
        emb = HstEmbedding(PointStream(load_metric(_read(args.input), args.format)), args.seed, var)
        errs += [f"hst[{var}]: {e}" for e in emb.tree.check()]
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                if emb.distance(a, b) < m.distance(a, b):
                    errs.append(f"hst[{var}]: domination fails for {a}-{b}")
    if n % 2 == 0:
        for algo in ("inward", "hp", "light"):
            try:
                trace(_payloads(m), algo, seed=args.seed, mode=m.mode, every=max(1, n), verify=True)
            except AssertionError as e:
                errs.append(f"{algo}: {e}")
    return errs


def cmd_verify(args, out) -> int:
    errs = []
    if args.dump:
        size, edges = parse_dump(_read(args.dump))
        errs += [f"line-matching: {e}" for e in check_edges(size, edges)]
    if args.hst:
        errs += [f"hst: {e}" for e in HstTree.parse(_read(args.hst)).check()]
    if args.input:
        errs += _verify_instance(args)
    if not (args.dump or args.hst or args.input):
        raise UsageError("nothing to verify: give --input, --dump or --hst")
    for e in errs:
        out.write(e + "\n")
    if errs:
        print(f"verify: {len(errs)} violation(s); first: {errs[0]}", file=sys.stderr)
        return 1
    out.write("ok\n")
    return 0


# -- argument parsing ------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input file (default stdin)")
    common.add_argument("--format", choices=("csv", "matrix"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--verify", action="store_true", help="run invariant checkers")

    p = argparse.ArgumentParser(prog="onlinemetric", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("embed-hst", parents=[common], help="online 2-HST embedding")
    s.add_argument("--variant", choices=("doubling", "euclidean"), default="doubling")
    s.set_defaults(fn=cmd_embed_hst)

    s = sub.add_parser("embed-l2", parents=[common], help="online Euclidean embedding")
    s.add_argument("--budget", type=int, default=2000, help="radius draws per point")
    s.set_defaults(fn=cmd_embed_l2)

    s = sub.add_parser("decompose", parents=[common], help="cluster centers at one scale")
    s.add_argument("--scale", type=int, required=True)
    s.add_argument("--variant", choices=("doubling", "euclidean"), default="doubling")
    s.set_defaults(fn=cmd_decompose)

    s = sub.add_parser("match", parents=[common], help="online matching trace as CSV")
    s.add_argument("--algo", choices=ALGOS, default="inward")
    s.add_argument("--variant", choices=("doubling", "euclidean"), default="doubling")
    s.add_argument("--strategy", choices=("greedy", "swap"), default="greedy")
    s.add_argument("--cap", type=int, help="hard recourse cap per pair")
    s.add_argument("--every", type=int, default=1, help="report every k steps")
    s.add_argument("--edges", help="write the final matching here")
    s.set_defaults(fn=cmd_match)

    s = sub.add_parser("oracle", parents=[common], help="exact offline answers")
    s.add_argument("--kind", choices=("mwpm", "line", "mst"), default="mwpm")
    s.set_defaults(fn=cmd_oracle)

    s = sub.add_parser("lowerbound-gen", parents=[common], help="lower-bound sequences")
    s.add_argument("--kind", choices=("prop1", "adaptive", "oblivious", "laakso", "fig1"), required=True)
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--k", type=int, default=5, help="ratio (prop1) or level (laakso)")
    s.add_argument("--eps", default="0.04")
    s.add_argument("--W", default="1000000")
    s.add_argument("--which", choices=("a", "b"), default="a")
    s.add_argument("--bits", help="oblivious round bits, e.g. 101")
    s.add_argument("--algo", choices=ALGOS, default="light", help="adaptive opponent")
    s.add_argument("--cap", type=int, help="opponent recourse cap (default r)")
    s.set_defaults(fn=cmd_lowerbound)

    s = sub.add_parser("bench", parents=[common], help="benchmark sweep as CSV")
    s.add_argument("--family", choices=FAMILIES, default="uniform")
    s.add_argument("--algo", choices=ALGOS, nargs="+", default=["inward"])
    s.add_argument("--n", type=int, default=64)
    s.add_argument("--trials", type=int, default=1)
    s.add_argument("--variant", choices=("doubling", "euclidean"), default="doubling")
    s.add_argument("--strategy", choices=("greedy", "swap"), default="greedy")
    s.add_argument("--cap", type=int)
    s.add_argument("--every", type=int, default=1)
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("verify", parents=[common], help="run the invariant checkers")
    s.add_argument("--dump", help="line-matching dump to check")
    s.add_argument("--hst", help="exported HST to check")
    s.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd == "lowerbound-gen":
        try:
            args.eps = float(args.eps) if args.kind == "prop1" else args.eps
        except ValueError:
            parser.error("--eps must be a number")
    out = _open_out(args.out)
    try:
        return args.fn(args, out)
    except (UsageError, MetricError, OracleError, adv.AdversaryError, ValueError, FileNotFoundError) as e:
        print(f"onlinemetric {args.cmd}: {e}", file=sys.stderr)
        return 2
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
