"""sqrt(c)-walk sampling with reproducible, per-node random streams."""

from __future__ import annotations

import math

import numpy as np

from .graph import Graph

# stream domains keep the correction sampler and the Monte Carlo baseline
# from ever sharing a random stream for the same (seed, node)
DOMAIN_CORRECTION = 1
DOMAIN_MC = 2
DOMAIN_QUERY = 3


def node_stream(seed: int, stream: int, domain: int = DOMAIN_CORRECTION) -> np.random.Generator:
    """Independent generator fully determined by ``(seed, domain, stream)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(domain), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))


def sample_walk(g: Graph, start: int, c: float, rng: np.random.Generator) -> list[int]:
    """One sqrt(c)-walk from ``start``; step 0 is the start node.

    The walk halts at a node with no in-neighbours even if the
    continuation coin succeeds.
    """
    sq = math.sqrt(c)
    walk = [int(start)]
    v = int(start)
    while True:
        if rng.random() >= sq:
            break
        lo, hi = g.in_indptr[v], g.in_indptr[v + 1]
        if hi == lo:
            break
        v = int(g.in_indices[lo + rng.integers(hi - lo)])
        walk.append(v)
    return walk


def walks_meet(w1, w2) -> bool:
    return any(a == b for a, b in zip(w1, w2))


def meeting_trials(g: Graph, c: float, starts_a: np.ndarray, starts_b: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """Run paired sqrt(c)-walks step-synchronously; return which pairs meet.

    Pairs are advanced together and retired as soon as they meet or either
    walk halts, so full walks are never stored.
    """
    sq = math.sqrt(c)
    a = np.asarray(starts_a, dtype=np.int64).copy()
    b = np.asarray(starts_b, dtype=np.int64).copy()
    met = a == b
    active = np.flatnonzero(~met)
    indptr, indices, deg = g.in_indptr, g.in_indices, g.in_degree
    while active.size:
        k = active.size
        coins = rng.random((2, k))
        pa, pb = a[active], b[active]
        da, db = deg[pa], deg[pb]
        alive = (coins[0] < sq) & (coins[1] < sq) & (da > 0) & (db > 0)
        active, pa, pb, da, db = active[alive], pa[alive], pb[alive], da[alive], db[alive]
        if not active.size:
            break
        na = indices[indptr[pa] + rng.integers(0, da)]
        nb = indices[indptr[pb] + rng.integers(0, db)]
        a[active], b[active] = na, nb
        hit = na == nb
        met[active[hit]] = True
        active = active[~hit]
    return met


def mc_pair_estimate(g: Graph, c: float, i: int, j: int, samples: int,
                     rng: np.random.Generator) -> float:
    """Fraction of ``samples`` independent walk pairs from ``i`` and ``j`` that meet."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if i == j:
        return 1.0
    starts_a = np.full(samples, i, dtype=np.int64)
    starts_b = np.full(samples, j, dtype=np.int64)
    return float(meeting_trials(g, c, starts_a, starts_b, rng).mean())
