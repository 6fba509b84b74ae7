"""Exact reference computations for small graphs.

Everything here is dense and O(n^2) in memory; a node cap guards against
accidental use on large inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

DEFAULT_NODE_CAP = 20000


class ResourceGuardError(RuntimeError):
    """Raised when a dense computation would exceed its configured node cap."""


def _check_cap(g: Graph, cap: int):
    if g.n > cap:
        raise ResourceGuardError(
            f"dense oracle refused: n={g.n} exceeds node cap {cap}; pass a larger cap explicitly"
        )


def power_iterations_needed(c: float, eps: float) -> int:
    """Smallest t with t >= log_c(eps*(1-c)) - 1, clamped at 0."""
    if not 0 < c < 1:
        raise ValueError("decay factor must lie in (0, 1)")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    bound = math.log(eps * (1 - c)) / math.log(c) - 1
    return max(0, math.ceil(bound - 1e-12))


@dataclass(frozen=True)
class ScoreMatrix:
    c: float
    iterations: int
    scores: np.ndarray

    @property
    def n(self) -> int:
        return self.scores.shape[0]

    def __getitem__(self, ij):
        return self.scores[ij]

    def to_csv(self, fh, delimiter=","):
        n = self.n
        for i in range(n):
            fh.write(delimiter.join(repr(float(x)) for x in self.scores[i]))
            fh.write("\n")


def power_method(g: Graph, c: float, t: int, cap: int = DEFAULT_NODE_CAP,
                 history: bool = False):
    """All-pairs SimRank by ``t`` rounds of the Jeh-Widom iteration.

    Off-diagonal pairs involving a node without in-neighbours score 0.
    With ``history`` the list of all iterates ``S^(0..t)`` is returned too.
    """
    if t < 0:
        raise ValueError("iteration count must be non-negative")
    _check_cap(g, cap)
    A = g.walk_matrix
    S = np.eye(g.n)
    iterates = [S.copy()] if history else None
    for _ in range(t):
        # S' = c * A S A^T, row by row through the sparse operator
        left = np.asarray(A @ S)
        S = c * np.asarray(A @ left.T).T
        np.fill_diagonal(S, 1.0)
        if history:
            iterates.append(S.copy())
    result = ScoreMatrix(c=c, iterations=t, scores=S)
    return (result, iterates) if history else result


@dataclass(frozen=True)
class ExactHpTable:
    """``steps[l][i, k]`` is the probability a sqrt(c)-walk from ``i`` sits at ``k`` at step ``l``."""

    c: float
    L: int
    steps: list

    def get(self, step: int, source: int, target: int) -> float:
        if step > self.L:
            return 0.0
        return float(self.steps[step][source, target])

    def entries(self, source: int):
        """Nonzero (step, target, value) triples for one source."""
        out = []
        for ell, H in enumerate(self.steps):
            for k in np.flatnonzero(H[source]):
                out.append((ell, int(k), float(H[source, k])))
        return out


def exact_hitting_probabilities(g: Graph, c: float, L: int,
                                cap: int = DEFAULT_NODE_CAP) -> ExactHpTable:
    if L < 0:
        raise ValueError("L must be non-negative")
    _check_cap(g, cap)
    M = g.hp_matrix(c)
    H = np.eye(g.n)
    steps = [H]
    for _ in range(L):
        H = np.asarray(M @ H)
        steps.append(H)
    return ExactHpTable(c=c, L=L, steps=steps)


def exact_correction(g: Graph, c: float, s: ScoreMatrix) -> np.ndarray:
    """Correction factors from converged scores (zero-in-degree nodes get 1)."""
    S = s.scores
    d = np.ones(g.n)
    for k in range(g.n):
        nb = g.in_neighbors(k)
        deg = nb.size
        if deg == 0:
            continue
        block = S[np.ix_(nb, nb)]
        cross = block.sum() - np.trace(block)
        d[k] = 1.0 - c / deg - c * cross / deg**2
    return d


def decomposition_remainder(c: float, L: int) -> float:
    """Upper bound on the terms dropped when truncating the HP decomposition at step L."""
    return c ** (L + 1) / (1 - c)


def eval_decomposition(h: ExactHpTable, d: np.ndarray, i: int, j: int):
    """Truncated sum over steps and meeting nodes of h(i,k) * d_k * h(j,k).

    Returns ``(score, remainder_bound)``.
    """
    total = 0.0
    for H in h.steps:
        total += float(np.dot(H[i] * d, H[j]))
    return total, decomposition_remainder(h.c, h.L)


def decomposition_matrix(h: ExactHpTable, d: np.ndarray) -> np.ndarray:
    """All-pairs form of :func:`eval_decomposition`."""
    n = h.steps[0].shape[0]
    out = np.zeros((n, n))
    for H in h.steps:
        out += (H * d) @ H.T
    return out
