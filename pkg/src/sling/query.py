"""Single-pair and single-source SimRank queries against a SLING index.

``index`` may be an in-memory :class:`~sling.index.SlingIndex` or a
:class:`~sling.storage.DiskIndex`; both expose ``params``, ``d``,
``fingerprint`` and ``hp_set(v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .hpindex import materialize_query_hp_set


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class PairScore:
    i: int
    j: int
    score: float


@dataclass
class SourceResult:
    source: int
    scores: dict

    def __getitem__(self, j):
        return self.scores.get(j, 0.0)

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        if self.scores:
            idx = np.fromiter(self.scores.keys(), dtype=np.int64)
            out[idx] = np.fromiter(self.scores.values(), dtype=np.float64)
        return out


def _check(index, g: Graph, *nodes):
    if index.fingerprint != g.fingerprint:
        raise QueryError("index fingerprint does not match the graph")
    for v in nodes:
        if not 0 <= v < index.n:
            raise QueryError(f"node {v} out of range [0, {index.n})")


def effective_set(index, g: Graph, v: int, expand: bool = True):
    """Query-time HP entries of ``v`` keyed by ``step * n + target``."""
    steps, targets, values = materialize_query_hp_set(index.hp_set(v), g, index.params.c, expand=expand)
    return steps * g.n + targets, targets, values


def merge_score(a, b, d: np.ndarray) -> float:
    """Sum of h_i * d_k * h_j over (step, target) keys present in both sets.

    ``h_i * h_j`` is formed first, so swapping the arguments gives the
    bitwise-identical result.
    """
    ka, ta, va = a
    kb, _, vb = b
    common, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
    if common.size == 0:
        return 0.0
    return float(np.sum((va[ia] * vb[ib]) * d[ta[ia]]))


def _report(x: float, raw: bool) -> float:
    return x if raw else min(1.0, max(0.0, x))


def single_pair(index, g: Graph, i: int, j: int, raw: bool = False) -> PairScore:
    _check(index, g, i, j)
    if i == j:
        return PairScore(i, j, 1.0)
    s = merge_score(effective_set(index, g, i), effective_set(index, g, j), index.d)
    return PairScore(i, j, _report(s, raw))


def all_pair_scores(index, g: Graph, raw: bool = False) -> np.ndarray:
    """Every pair through the single-pair merge, materialising each set once.

    Entry ``(i, j)`` is bitwise equal to ``single_pair(index, g, i, j).score``.
    """
    _check(index, g)
    sets = [effective_set(index, g, v) for v in range(g.n)]
    out = np.eye(g.n)
    for i in range(g.n):
        for j in range(i + 1, g.n):
            s = _report(merge_score(sets[i], sets[j], index.d), raw)
            out[i, j] = out[j, i] = s
    return out


def single_source(index, g: Graph, i: int, raw: bool = False) -> SourceResult:
    """Scores from ``i`` to every node by forward pushes seeded from ``H(i)``.

    For each step l present in the source's (two-hop-spliced) set, mass
    ``h(l)(i, k) * d_k`` is pushed l rounds along out-edges, dropping
    values at or below ``sqrt(c)**l * theta`` before each round.
    """
    _check(index, g, i)
    p = index.params
    M = g.hp_matrix(p.c)
    steps, targets, values = materialize_query_hp_set(index.hp_set(i), g, p.c, expand=False)
    acc = np.zeros(g.n)
    sq = math.sqrt(p.c)
    for ell in np.unique(steps).tolist():
        sel = steps == ell
        rho = np.zeros(g.n)
        rho[targets[sel]] = values[sel] * index.d[targets[sel]]
        cut = sq**ell * p.theta
        for _ in range(ell):
            rho[rho <= cut] = 0.0
            if not rho.any():
                break
            rho = np.asarray(M @ rho)
        else:
            acc += rho
    acc[i] = 1.0
    if not raw:
        np.clip(acc, 0.0, 1.0, out=acc)
    nz = np.flatnonzero(acc > 0)
    return SourceResult(i, dict(zip(nz.tolist(), acc[nz].tolist())))


def single_source_naive(index, g: Graph, i: int, raw: bool = False) -> SourceResult:
    """One single-pair query per node."""
    _check(index, g, i)
    scores = {}
    for j in range(g.n):
        s = single_pair(index, g, i, j, raw=raw).score
        if s > 0:
            scores[j] = s
    return SourceResult(i, scores)


def top_k(index, g: Graph, i: int, k: int, raw: bool = False) -> list[tuple[int, float]]:
    """Highest-scoring nodes for source ``i`` (excluding ``i``), ties by node id."""
    if k <= 0:
        _check(index, g, i)
        return []
    res = single_source(index, g, i, raw=raw)
    items = [(j, s) for j, s in res.scores.items() if j != i]
    items.sort(key=lambda t: (-t[1], t[0]))
    return items[:k]
