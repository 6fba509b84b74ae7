"""Correction-factor estimation.

``d_k`` is the probability that two sqrt(c)-walks from ``v_k`` never meet
after step 0. It equals ``1 - c/|I(k)| - c*mu`` where ``mu`` is the chance
that walks from two uniformly drawn in-neighbours of ``k`` (drawn
independently, with replacement) are distinct and later meet. Nodes with
at most one in-neighbour are handled analytically.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .graph import Graph
from .walks import DOMAIN_CORRECTION, meeting_trials, node_stream

MODES = ("basic", "adaptive")


class DEstimate(NamedTuple):
    value: float
    pairs: int


def basic_sample_size(c: float, eps_d: float, delta_d: float) -> int:
    return math.ceil((2 * c * c + c * eps_d) / eps_d**2 * math.log(2 / delta_d))


def pilot_sample_size(c: float, eps_d: float, delta_d: float) -> int:
    return math.ceil(14 * c / (3 * eps_d) * math.log(4 / delta_d))


def topup_sample_size(c: float, eps_d: float, delta_d: float, mu_star: float) -> int:
    return math.ceil((2 * c * c * mu_star + (2 / 3) * c * eps_d) / eps_d**2 * math.log(4 / delta_d))


def _check(eps_d, delta_d):
    if not 0 < eps_d < 1 or not 0 < delta_d < 1:
        raise ValueError("eps_d and delta_d must lie in (0, 1)")


def _count_meetings(g: Graph, k: int, c: float, pairs: int, rng) -> int:
    nb = g.in_neighbors(k)
    if pairs <= 0:
        return 0
    a = nb[rng.integers(0, nb.size, size=pairs)]
    b = nb[rng.integers(0, nb.size, size=pairs)]
    # coinciding draws count as trials but never as meetings
    distinct = a != b
    met = meeting_trials(g, c, a[distinct], b[distinct], rng)
    return int(met.sum())


def _finish(c, deg, mu):
    return min(1.0, max(1.0 - c, 1.0 - c / deg - c * mu))


def estimate_d_basic(g: Graph, k: int, c: float, eps_d: float, delta_d: float, rng) -> DEstimate:
    """Fixed-budget estimator; needs ``|I(k)| >= 2``."""
    _check(eps_d, delta_d)
    deg = int(g.in_degree[k])
    if deg < 2:
        raise ValueError("sampling estimator needs at least two in-neighbours")
    n_r = basic_sample_size(c, eps_d, delta_d)
    cnt = _count_meetings(g, k, c, n_r, rng)
    return DEstimate(_finish(c, deg, cnt / n_r), n_r)


def estimate_d_adaptive(g: Graph, k: int, c: float, eps_d: float, delta_d: float, rng) -> DEstimate:
    """Two-phase estimator: a pilot sized for ``mu <= eps_d``, topped up only when needed."""
    _check(eps_d, delta_d)
    deg = int(g.in_degree[k])
    if deg < 2:
        raise ValueError("sampling estimator needs at least two in-neighbours")
    n_r = pilot_sample_size(c, eps_d, delta_d)
    cnt = _count_meetings(g, k, c, n_r, rng)
    mu_hat = cnt / n_r
    if mu_hat <= eps_d:
        return DEstimate(_finish(c, deg, mu_hat), n_r)
    mu_star = mu_hat + math.sqrt(mu_hat * eps_d)
    # the top-up target can fall below the pilot size when c < 1; never discard pilot pairs
    total = max(n_r, topup_sample_size(c, eps_d, delta_d, mu_star))
    cnt += _count_meetings(g, k, c, total - n_r, rng)
    return DEstimate(_finish(c, deg, cnt / total), total)


@dataclass
class CorrectionVector:
    d: np.ndarray
    c: float
    eps_d: float
    delta_d: float
    seed: int
    mode: str = "adaptive"
    pairs: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.d.size

    def __getitem__(self, k):
        return self.d[k]


def _estimate_chunk(args):
    g, nodes, c, eps_d, delta_d, mode, seed = args
    fn = estimate_d_adaptive if mode == "adaptive" else estimate_d_basic
    vals = np.empty(len(nodes))
    pairs = np.zeros(len(nodes), dtype=np.int64)
    for idx, k in enumerate(nodes):
        est = fn(g, int(k), c, eps_d, delta_d, node_stream(seed, int(k), DOMAIN_CORRECTION))
        vals[idx], pairs[idx] = est.value, est.pairs
    return vals, pairs


def estimate_all_d(g: Graph, c: float, eps_d: float, delta_d: float, mode: str = "adaptive",
                   seed: int = 0, workers: int = 1) -> CorrectionVector:
    """Correction factors for every node.

    Each sampled node draws from its own stream keyed by node id, so the
    result depends on ``seed`` and ``mode`` only, never on ``workers``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown estimator mode {mode!r}")
    _check(eps_d, delta_d)
    d = np.ones(g.n)
    pairs = np.zeros(g.n, dtype=np.int64)
    d[g.in_degree == 1] = 1.0 - c
    sampled = np.flatnonzero(g.in_degree >= 2)
    if sampled.size:
        chunks = [sampled[i::max(workers, 1)] for i in range(max(workers, 1))]
        chunks = [ch for ch in chunks if ch.size]
        jobs = [(g, ch, c, eps_d, delta_d, mode, seed) for ch in chunks]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                results = list(ex.map(_estimate_chunk, jobs))
        else:
            results = [_estimate_chunk(job) for job in jobs]
        for ch, (vals, cnts) in zip(chunks, results):
            d[ch] = vals
            pairs[ch] = cnts
    return CorrectionVector(d=d, c=c, eps_d=eps_d, delta_d=delta_d, seed=seed, mode=mode, pairs=pairs)
