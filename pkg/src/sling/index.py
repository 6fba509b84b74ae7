"""Assembling the SLING index: parameter split, build, and statistics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .correction import MODES, CorrectionVector, estimate_all_d
from .graph import Graph
from .hpindex import (HpSet, apply_space_reduction, build_all_hp_sets, hp_set_size_bound,
                      mark_top_hps, max_hp_step)

DEFAULT_GAMMA = 10.0
MIN_THETA = 1e-9


class ParameterError(ValueError):
    pass


def error_budget(c: float, eps_d: float, theta: float) -> float:
    """Worst-case additive error implied by (eps_d, theta)."""
    sq = math.sqrt(c)
    return eps_d / (1 - c) + 2 * sq / ((1 - sq) * (1 - c)) * theta


@dataclass(frozen=True)
class SlingParams:
    eps: float
    delta: float
    c: float
    eps_d: float
    theta: float
    delta_d: float
    gamma: float = DEFAULT_GAMMA
    mode: str = "adaptive"

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise ParameterError("decay factor c must lie in (0, 1)")
        if not 0 < self.eps < 1:
            raise ParameterError("eps must lie in (0, 1)")
        if not 0 < self.delta < 1:
            raise ParameterError("delta must lie in (0, 1)")
        if not 0 < self.eps_d < 1 or not 0 < self.delta_d < 1:
            raise ParameterError("eps_d and delta_d must lie in (0, 1)")
        if not MIN_THETA <= self.theta < 1:
            raise ParameterError(f"theta={self.theta!r} outside [{MIN_THETA}, 1)")
        if self.mode not in MODES:
            raise ParameterError(f"unknown estimator mode {self.mode!r}")
        if self.error_bound() > self.eps * (1 + 1e-9):
            raise ParameterError(
                f"eps_d={self.eps_d} and theta={self.theta} only guarantee error {self.error_bound():.6g} > eps={self.eps}"
            )

    def error_bound(self) -> float:
        return error_budget(self.c, self.eps_d, self.theta)


def derive_parameters(eps: float, delta: float, c: float = 0.6, n: int = 1,
                      gamma: float = DEFAULT_GAMMA, mode: str = "adaptive",
                      min_theta: float = MIN_THETA) -> SlingParams:
    """Split an overall error target between correction factors and HP sets.

    Half of ``eps`` goes to the correction factors (``eps_d/(1-c) = eps/2``),
    the rest to the HP threshold; ``delta`` is split evenly over the nodes.
    """
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    if not 0 < c < 1:
        raise ParameterError("decay factor c must lie in (0, 1)")
    sq = math.sqrt(c)
    eps_d = eps * (1 - c) / 2
    theta = (eps - eps_d / (1 - c)) * (1 - sq) * (1 - c) / (2 * sq)
    if theta < min_theta:
        raise ParameterError(f"eps={eps} yields theta={theta:.3g} below the minimum {min_theta}")
    return SlingParams(eps=eps, delta=delta, c=c, eps_d=eps_d, theta=theta,
                       delta_d=delta / max(n, 1), gamma=gamma, mode=mode)


@dataclass
class SlingIndex:
    params: SlingParams
    d: np.ndarray
    hp: list[HpSet]
    seed: int
    fingerprint: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.d.size

    def hp_set(self, v: int) -> HpSet:
        return self.hp[v]

    @property
    def correction(self) -> CorrectionVector:
        return CorrectionVector(d=self.d, c=self.params.c, eps_d=self.params.eps_d,
                                delta_d=self.params.delta_d, seed=self.seed, mode=self.params.mode,
                                pairs=self.meta.get("pairs"))

    def __eq__(self, other):
        if not isinstance(other, SlingIndex):
            return NotImplemented
        return (
            self.params == other.params
            and self.seed == other.seed
            and self.fingerprint == other.fingerprint
            and np.array_equal(self.d, other.d)
            and len(self.hp) == len(other.hp)
            and all(a == b for a, b in zip(self.hp, other.hp))
        )


def build_index(g: Graph, params: SlingParams, seed: int = 0, workers: int = 1) -> SlingIndex:
    """Correction factors plus reduced, marked HP sets for every node of ``g``."""
    if g.n >= 2**32:
        raise ParameterError("index format stores node ids as 32-bit integers")
    if max_hp_step(params.c, params.theta) > 255:
        raise ParameterError("theta too small: HP steps would overflow the 8-bit step field")
    t0 = time.perf_counter()
    corr = estimate_all_d(g, params.c, params.eps_d, params.delta_d, mode=params.mode,
                          seed=seed, workers=workers)
    t1 = time.perf_counter()
    sets = build_all_hp_sets(g, params.c, params.theta, workers=workers)
    sets = apply_space_reduction(sets, g, params.gamma, params.theta)
    sets = mark_top_hps(sets, g, params.eps)
    t2 = time.perf_counter()
    meta = {"correction_seconds": t1 - t0, "hp_seconds": t2 - t1, "pairs": corr.pairs,
            "built_at": time.time()}
    return SlingIndex(params=params, d=corr.d, hp=sets, seed=int(seed), fingerprint=g.fingerprint,
                      meta=meta)


def with_params(index: SlingIndex, **changes) -> SlingIndex:
    return replace(index, params=replace(index.params, **changes))


def index_stats(index: SlingIndex) -> dict:
    from .storage import ENTRY_BYTES, serialized_size

    sizes = np.array([len(h) for h in index.hp], dtype=np.int64)
    marked = np.array([h.marked.size for h in index.hp], dtype=np.int64)
    reduced = np.array([h.reduced for h in index.hp], dtype=bool)
    hist_edges = [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000]
    counts, _ = np.histogram(sizes, bins=hist_edges + [max(int(sizes.max(initial=0)) + 1, 10001)])
    p = index.params
    return {
        "n": int(index.n),
        "total_entries": int(sizes.sum()),
        "entry_bytes": int(sizes.sum()) * ENTRY_BYTES,
        "file_bytes": int(serialized_size(index)),
        "mean_entries": float(sizes.mean()) if sizes.size else 0.0,
        "max_entries": int(sizes.max(initial=0)),
        "entries_cap": hp_set_size_bound(p.c, p.theta),
        "entry_histogram": {f"[{lo},{hi})": int(cnt) for lo, hi, cnt in
                            zip(hist_edges, hist_edges[1:] + ["inf"], counts)},
        "reduced_fraction": float(reduced.mean()) if reduced.size else 0.0,
        "marked_total": int(marked.sum()),
        "marked_max": int(marked.max(initial=0)),
        "params": {"eps": p.eps, "delta": p.delta, "c": p.c, "eps_d": p.eps_d, "theta": p.theta,
                   "delta_d": p.delta_d, "gamma": p.gamma, "mode": p.mode},
        "seed": int(index.seed),
        "fingerprint": f"{index.fingerprint:016x}",
    }
