"""Accuracy evaluation of SLING and the Monte Carlo baseline against the power-method oracle.

Metrics are computed over unordered pairs ``i < j``: the maximum absolute
error, the mean absolute error inside three ground-truth score bands, and
the precision of the top-k pairs.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import Graph
from .index import build_index, derive_parameters
from .mcbaseline import _pair as _mc_pair
from .mcbaseline import mc_build
from .oracle import power_method
from .query import effective_set, merge_score

# (label, low, high, high inclusive); together they partition [0, 1]
SCORE_BANDS = (
    ("[0.1,1]", 0.1, 1.0, True),
    ("[0.01,0.1)", 0.01, 0.1, False),
    ("[0,0.01)", 0.0, 0.01, False),
)

METHODS = ("sling", "mc")


@dataclass
class EvalReport:
    method: str
    max_error: float
    run_max_errors: list
    group_errors: dict
    group_counts: dict
    topk_precision: dict
    pair_count: int
    runtimes: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def write_csv(self, fh) -> None:
        """Long-format CSV: one ``section,key,value`` row per reported number."""
        w = csv.writer(fh)
        w.writerow(["section", "key", "value"])
        w.writerow(["summary", "max_error", repr(self.max_error)])
        w.writerow(["summary", "pair_count", self.pair_count])
        for r, e in enumerate(self.run_max_errors):
            w.writerow(["run_max_error", r, repr(e)])
        for band, e in self.group_errors.items():
            w.writerow(["group_error", band, repr(e)])
        for band, cnt in self.group_counts.items():
            w.writerow(["group_count", band, cnt])
        for k, p in self.topk_precision.items():
            w.writerow(["topk_precision", k, repr(p)])
        for name, sec in self.runtimes.items():
            w.writerow(["runtime_seconds", name, repr(sec)])


def upper_pairs(n: int):
    return np.triu_indices(n, k=1)


def max_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    if truth.size == 0:
        return 0.0
    return float(np.abs(estimate - truth).max())


def group_errors(estimate: np.ndarray, truth: np.ndarray):
    """Mean absolute error per ground-truth band; returns ``(errors, counts)``.

    Both arguments are flat per-pair vectors. Empty bands report error 0.
    """
    err = np.abs(estimate - truth)
    errors, counts = {}, {}
    for label, lo, hi, inclusive in SCORE_BANDS:
        sel = (truth >= lo) & ((truth <= hi) if inclusive else (truth < hi))
        counts[label] = int(sel.sum())
        errors[label] = float(err[sel].mean()) if sel.any() else 0.0
    return errors, counts


def top_pairs(scores: np.ndarray, k: int) -> set:
    """Positions of the ``k`` largest entries of a flat score vector (ties by position)."""
    order = np.lexsort((np.arange(scores.size), -scores))[:k]
    return set(order.tolist())


def topk_precision(estimate: np.ndarray, truth: np.ndarray, k: int) -> float:
    k = min(k, truth.size)
    if k <= 0:
        return 1.0
    return len(top_pairs(estimate, k) & top_pairs(truth, k)) / k


def _sling_scores(g, eps, delta, c, seed, workers, rows, cols):
    params = derive_parameters(eps, delta, c=c, n=g.n)
    t0 = time.perf_counter()
    index = build_index(g, params, seed=seed, workers=workers)
    t1 = time.perf_counter()
    needed = np.unique(np.concatenate([rows, cols]))
    sets = {v: effective_set(index, g, v) for v in needed.tolist()}
    est = np.array([merge_score(sets[i], sets[j], index.d) for i, j in zip(rows.tolist(), cols.tolist())])
    np.clip(est, 0.0, 1.0, out=est)
    return est, t1 - t0, time.perf_counter() - t1


def _mc_scores(g, eps, delta, c, seed, workers, rows, cols):
    t0 = time.perf_counter()
    index = mc_build(g, c, eps, delta, seed=seed)
    t1 = time.perf_counter()
    est = np.array([_mc_pair(index, i, j) for i, j in zip(rows.tolist(), cols.tolist())])
    return est, t1 - t0, time.perf_counter() - t1


def run_eval(g: Graph, method: str = "sling", eps: float = 0.025, delta: float = 0.01,
             c: float = 0.6, runs: int = 10, oracle_iters: int = 50, topk=(10, 50, 100),
             seed: int = 0, workers: int = 1, pair_cap_nodes: int = 2000,
             sample_pairs: int = 100_000, log=None) -> EvalReport:
    """Build ``runs`` seeded indexes and score them against the oracle.

    All pairs are evaluated when ``g.n <= pair_cap_nodes``; otherwise a
    seeded uniform sample of ``sample_pairs`` distinct-node pairs is used.
    Run ``r`` uses seed ``seed + r``.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if runs < 1:
        raise ValueError("runs must be at least 1")
    t0 = time.perf_counter()
    truth_m = power_method(g, c, oracle_iters).scores
    oracle_sec = time.perf_counter() - t0
    if g.n <= pair_cap_nodes:
        rows, cols = upper_pairs(g.n)
        sampled = False
    else:
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, g.n, sample_pairs)
        cols = rng.integers(0, g.n - 1, sample_pairs)
        cols = cols + (cols >= rows)
        rows, cols = np.minimum(rows, cols), np.maximum(rows, cols)
        sampled = True
    truth = truth_m[rows, cols]
    score_fn = _sling_scores if method == "sling" else _mc_scores
    run_errs, build_secs, query_secs = [], [], []
    band_acc = {label: [] for label, *_ in SCORE_BANDS}
    prec_acc = {int(k): [] for k in topk}
    counts = {}
    for r in range(runs):
        est, b_sec, q_sec = score_fn(g, eps, delta, c, seed + r, workers, rows, cols)
        run_errs.append(max_error(est, truth))
        errs, counts = group_errors(est, truth)
        for label, e in errs.items():
            band_acc[label].append(e)
        for k in prec_acc:
            prec_acc[k].append(topk_precision(est, truth, k))
        build_secs.append(b_sec)
        query_secs.append(q_sec)
        if log:
            log(f"run {r}: max error {run_errs[-1]:.3g}, build {b_sec:.2f}s, queries {q_sec:.2f}s")
    return EvalReport(
        method=method,
        max_error=max(run_errs),
        run_max_errors=run_errs,
        group_errors={label: float(np.mean(v)) for label, v in band_acc.items()},
        group_counts=counts,
        topk_precision={str(k): float(np.mean(v)) for k, v in prec_acc.items()},
        pair_count=int(truth.size),
        runtimes={"oracle": oracle_sec, "build_mean": float(np.mean(build_secs)),
                  "query_mean": float(np.mean(query_secs))},
        config={"method": method, "eps": eps, "delta": delta, "c": c, "runs": runs,
                "oracle_iters": oracle_iters, "topk": [int(k) for k in topk], "seed": seed,
                "n": g.n, "m": g.m, "sampled_pairs": sampled},
    )
