"""``sling`` command-line tool: build, query, eval and bench.

stdout carries JSON (or CSV where requested); progress and diagnostics go to
stderr. Exit codes: 0 ok, 1 usage error, 2 data error, 3 resource guard.
Node arguments are the raw labels from the edge-list file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from .graph import Graph, GraphFormatError, read_graph
from .index import ParameterError, build_index, derive_parameters, index_stats
from .mcbaseline import MC_MAGIC, mc_build, mc_deserialize, mc_pair, mc_serialize, mc_source
from .oracle import ResourceGuardError
from .query import QueryError, single_pair, single_source, single_source_naive
from .storage import MAGIC, FingerprintMismatch, IndexFormatError, open_index, peek_magic, serialize

log = logging.getLogger("sling")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _open_float(lo, hi, name):
    def conv(text):
        try:
            x = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not lo < x < hi:
            raise argparse.ArgumentTypeError(f"{name} must lie in ({lo}, {hi}), got {x}")
        return x
    return conv


def _positive_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {x}")
    return x


def _seed(text):
    try:
        x = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= x < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return x


def _node_id(g: Graph, label: int) -> int:
    pos = int(np.searchsorted(g.labels, label))
    if pos >= g.n or g.labels[pos] != label:
        raise QueryError(f"node label {label} does not occur in the graph")
    return pos


def _load_graph(args) -> Graph:
    g = read_graph(args.graph, undirected=args.undirected)
    log.info("loaded graph %s: n=%d m=%d", args.graph, g.n, g.m)
    return g


def _load_any_index(path, g: Graph, from_disk: bool):
    if peek_magic(path) == MC_MAGIC:
        index = mc_deserialize(path)
        if index.fingerprint != g.fingerprint:
            raise FingerprintMismatch("index was built for a different graph")
        return "mc", index
    return "sling", open_index(path, fingerprint=g.fingerprint, from_disk=from_disk)


# ---------------------------------------------------------------- build

def cmd_build(args) -> int:
    g = _load_graph(args)
    t0 = time.perf_counter()
    if args.baseline == "mc":
        index = mc_build(g, args.c, args.eps, args.delta, seed=args.seed)
        mc_serialize(index, args.out)
        report = {"kind": "build", "baseline": "mc", "n": index.n, "t": index.t, "n_w": index.n_w,
                  "seed": args.seed, "fingerprint": f"{index.fingerprint:016x}"}
    else:
        params = derive_parameters(args.eps, args.delta, c=args.c, n=g.n, mode=args.estimator)
        index = build_index(g, params, seed=args.seed, workers=args.threads)
        with open(args.out, "wb") as fh:
            serialize(index, fh)
        report = {"kind": "build", "baseline": "sling", **index_stats(index)}
    report["build_seconds"] = time.perf_counter() - t0
    report["out"] = os.fspath(args.out)
    report["file_bytes"] = os.path.getsize(args.out)
    log.info("wrote %s (%d bytes)", args.out, report["file_bytes"])
    _emit(report)
    return EXIT_OK


# ---------------------------------------------------------------- query

def cmd_query_pair(args) -> int:
    g = _load_graph(args)
    i, j = _node_id(g, args.u), _node_id(g, args.v)
    kind, index = _load_any_index(args.index, g, args.from_disk)
    score = mc_pair(index, i, j) if kind == "mc" else single_pair(index, g, i, j).score
    _emit({"kind": "pair", "u": args.u, "v": args.v, "score": score})
    return EXIT_OK


def cmd_query_source(args) -> int:
    g = _load_graph(args)
    i = _node_id(g, args.u)
    kind, index = _load_any_index(args.index, g, args.from_disk)
    res = mc_source(index, i) if kind == "mc" else single_source(index, g, i)
    rows = sorted(res.scores.items(), key=lambda t: (-t[1], t[0]))
    if args.top is not None:
        # the source itself always scores 1 and is kept ahead of the top-k list
        rows = [r for r in rows if r[0] == i] + [r for r in rows if r[0] != i][:args.top]
    for j, s in rows:
        _emit({"source": args.u, "node": int(g.labels[j]), "score": s})
    return EXIT_OK


# ---------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    from .evaluation import run_eval

    g = _load_graph(args)
    report = run_eval(g, method=args.method, eps=args.eps, delta=args.delta, c=args.c,
                      runs=args.runs, oracle_iters=args.oracle_iters, topk=args.topk,
                      seed=args.seed, workers=args.threads, pair_cap_nodes=args.pair_cap,
                      sample_pairs=args.sample_pairs, log=log.info)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            report.write_csv(fh)
    _emit(report.to_dict())
    return EXIT_OK


# ---------------------------------------------------------------- bench

def sample_queries(g: Graph, count: int, seed: int, sampling: str = "uniform", pairs: bool = True):
    """Seeded query workload: node ids drawn uniformly or proportional to in-degree + 1."""
    rng = np.random.default_rng(seed)
    if sampling == "degree":
        w = (g.in_degree + 1).astype(np.float64)
        p = w / w.sum()
        draw = lambda k: rng.choice(g.n, size=k, p=p)  # noqa: E731
    else:
        draw = lambda k: rng.integers(0, g.n, size=k)  # noqa: E731
    u = draw(count)
    v = draw(count) if pairs else np.full(count, -1)
    return u.astype(np.int64), v.astype(np.int64)


def cmd_bench(args) -> int:
    g = _load_graph(args)
    kind, index = _load_any_index(args.index, g, args.from_disk)
    pairs = args.mode == "pair"
    u, v = sample_queries(g, args.queries + args.warmup, args.seed, args.sampling, pairs=pairs)
    if kind == "mc":
        if args.mode == "source-naive":
            raise QueryError("source-naive mode needs a SLING index")
        run_pair = lambda a, b: mc_pair(index, a, b)  # noqa: E731
        run_source = lambda a: mc_source(index, a)  # noqa: E731
    else:
        run_pair = lambda a, b: single_pair(index, g, a, b)  # noqa: E731
        run_source = lambda a: (single_source if args.mode == "source" else single_source_naive)(index, g, a)  # noqa: E731
    secs = []
    rows = []
    for q in range(args.queries + args.warmup):
        t0 = time.perf_counter()
        if pairs:
            run_pair(int(u[q]), int(v[q]))
            size = 1
        else:
            size = len(run_source(int(u[q])).scores)
        dt = time.perf_counter() - t0
        if q >= args.warmup:
            secs.append(dt)
            rows.append((q - args.warmup, args.mode, int(g.labels[u[q]]),
                         int(g.labels[v[q]]) if pairs else "", dt, size))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["query", "mode", "u", "v", "seconds", "result_size"])
            w.writerows(rows)
    arr = np.asarray(secs) if secs else np.zeros(1)
    _emit({"kind": "bench", "mode": args.mode, "queries": args.queries, "warmup": args.warmup,
           "seed": args.seed, "sampling": args.sampling, "from_disk": bool(args.from_disk),
           "mean_seconds": float(arr.mean()), "median_seconds": float(np.median(arr)),
           "p95_seconds": float(np.percentile(arr, 95)), "total_seconds": float(arr.sum()),
           "csv": os.fspath(args.csv) if args.csv else None})
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_graph(p, required=True):
    p.add_argument("--graph", required=required, help="edge list, one 'u v' pair per line")
    p.add_argument("--undirected", action="store_true", help="treat each line as two directed edges")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sling", description="SimRank indexing and queries.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("build", help="build an index file")
    _add_graph(p)
    p.add_argument("--eps", type=_open_float(0, 1, "eps"), default=0.025)
    p.add_argument("--delta", type=_open_float(0, 1, "delta"), default=0.01)
    p.add_argument("--c", type=_open_float(0, 1, "c"), default=0.6)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--estimator", choices=("basic", "adaptive"), default="adaptive")
    p.add_argument("--baseline", choices=("sling", "mc"), default="sling")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer a pair or source query")
    qsub = q.add_subparsers(dest="query_kind", parser_class=_Parser)
    qsub.required = True
    qp = qsub.add_parser("pair", help="similarity of two nodes")
    qp.add_argument("-i", "--index", required=True)
    _add_graph(qp)
    qp.add_argument("u", type=int)
    qp.add_argument("v", type=int)
    qp.add_argument("--from-disk", action="store_true", help="read node records on demand")
    qp.set_defaults(func=cmd_query_pair)
    qs = qsub.add_parser("source", help="similarity of one node to every node")
    qs.add_argument("-i", "--index", required=True)
    _add_graph(qs)
    qs.add_argument("u", type=int)
    qs.add_argument("--top", type=int, default=None, help="keep the K best other nodes")
    qs.add_argument("--from-disk", action="store_true", help="read node records on demand")
    qs.set_defaults(func=cmd_query_source)

    e = sub.add_parser("eval", help="accuracy against the power-method oracle")
    _add_graph(e)
    e.add_argument("--method", choices=("sling", "mc"), default="sling")
    e.add_argument("--eps", type=_open_float(0, 1, "eps"), default=0.025)
    e.add_argument("--delta", type=_open_float(0, 1, "delta"), default=0.01)
    e.add_argument("--c", type=_open_float(0, 1, "c"), default=0.6)
    e.add_argument("--runs", type=_positive_int, default=10)
    e.add_argument("--oracle-iters", type=_positive_int, default=50)
    e.add_argument("--topk", type=_positive_int, nargs="+", default=[10, 50, 100])
    e.add_argument("--seed", type=_seed, default=0)
    e.add_argument("--threads", type=_positive_int, default=1)
    e.add_argument("--pair-cap", type=_positive_int, default=2000,
                   help="evaluate all pairs up to this many nodes, sample beyond")
    e.add_argument("--sample-pairs", type=_positive_int, default=100_000)
    e.add_argument("--csv", default=None, help="also write the report as CSV")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="time a seeded random query workload")
    b.add_argument("-i", "--index", required=True)
    _add_graph(b)
    b.add_argument("--queries", type=_positive_int, default=1000)
    b.add_argument("--mode", choices=("pair", "source", "source-naive"), default="pair")
    b.add_argument("--warmup", type=int, default=10)
    b.add_argument("--seed", type=_seed, default=0)
    b.add_argument("--sampling", choices=("uniform", "degree"), default="uniform")
    b.add_argument("--from-disk", action="store_true")
    b.add_argument("--csv", default=None, help="per-query timings as CSV")
    b.set_defaults(func=cmd_bench)
    return parser


def _fail(kind: str, err: Exception, code: int) -> int:
    log.error("%s", err)
    _emit({"error": kind, "message": str(err), "exit_code": code})
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        return _fail("usage", err, EXIT_USAGE)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if getattr(args, "warmup", 0) < 0:
        return _fail("usage", UsageError("--warmup must be non-negative"), EXIT_USAGE)
    try:
        return args.func(args)
    except ResourceGuardError as err:
        return _fail("resource", err, EXIT_RESOURCE)
    except (GraphFormatError, IndexFormatError, QueryError, ParameterError, OSError, ValueError) as err:
        return _fail("data", err, EXIT_DATA)


if __name__ == "__main__":
    sys.exit(main())
