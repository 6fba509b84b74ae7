"""Approximate hitting-probability (HP) sets.

``H(v)`` holds triples (step l, target k, value) approximating the chance
that a sqrt(c)-walk from ``v`` is at ``k`` at step ``l``. Sets are built
deterministically by pushing probability mass backwards from every target
along out-edges, one step at a time, dropping anything at or below theta.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph

# fixed so floating-point results never depend on the worker count
SOURCE_BLOCK = 128
MAX_STEP = 255


@dataclass
class HpSet:
    owner: int
    steps: np.ndarray
    targets: np.ndarray
    values: np.ndarray
    reduced: bool = False
    marked: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self):
        return self.values.size

    def entries(self):
        return list(zip(self.steps.tolist(), self.targets.tolist(), self.values.tolist()))

    def __eq__(self, other):
        if not isinstance(other, HpSet):
            return NotImplemented
        return (
            self.owner == other.owner
            and self.reduced == other.reduced
            and np.array_equal(self.steps, other.steps)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.marked, other.marked)
        )


def max_hp_step(c: float, theta: float) -> int:
    """First step at which every HP value has decayed to ``theta`` or below."""
    return math.ceil(math.log(theta) / math.log(math.sqrt(c)))


def hp_set_size_bound(c: float, theta: float) -> float:
    return 1.0 / (theta * (1.0 - math.sqrt(c)))


def _reverse_push_block(M, sources, theta):
    """Reverse local update for a block of targets; returns (owner, step, target, value) arrays."""
    n = M.shape[0]
    R = np.zeros((n, sources.size))
    R[sources, np.arange(sources.size)] = 1.0
    owners, steps, targets, values = [], [], [], []
    ell = 0
    while True:
        R[R <= theta] = 0.0
        rows, cols = np.nonzero(R)
        if rows.size == 0:
            break
        if ell > MAX_STEP:
            raise OverflowError("HP step exceeds on-disk step field; theta too small")
        owners.append(rows)
        steps.append(np.full(rows.size, ell, dtype=np.int64))
        targets.append(sources[cols])
        values.append(R[rows, cols])
        # h(l+1)(i, k) = sqrt(c)/|I(i)| * sum over in-neighbours x of h(l)(x, k)
        R = np.asarray(M @ R)
        ell += 1
    if not owners:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, np.zeros(0)
    return (np.concatenate(owners), np.concatenate(steps),
            np.concatenate(targets), np.concatenate(values))


def _push_job(args):
    M, sources, theta = args
    return _reverse_push_block(M, sources, theta)


def build_all_hp_sets(g: Graph, c: float, theta: float, workers: int = 1) -> list[HpSet]:
    """Build ``H(v)`` for every node (unreduced, unmarked)."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    M = g.hp_matrix(c)
    blocks = [np.arange(s, min(s + SOURCE_BLOCK, g.n), dtype=np.int64)
              for s in range(0, g.n, SOURCE_BLOCK)]
    jobs = [(M, b, theta) for b in blocks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_push_job, jobs))
    else:
        parts = [_push_job(j) for j in jobs]
    if parts:
        owner = np.concatenate([p[0] for p in parts])
        step = np.concatenate([p[1] for p in parts])
        target = np.concatenate([p[2] for p in parts])
        value = np.concatenate([p[3] for p in parts])
    else:
        owner = step = target = np.zeros(0, dtype=np.int64)
        value = np.zeros(0)
    # global bucket sort by owner, then (step, target) inside each bucket
    order = np.lexsort((target, step, owner))
    owner, step, target, value = owner[order], step[order], target[order], value[order]
    bounds = np.searchsorted(owner, np.arange(g.n + 1))
    sets = []
    for v in range(g.n):
        lo, hi = bounds[v], bounds[v + 1]
        sets.append(HpSet(owner=v, steps=step[lo:hi].astype(np.uint8), targets=target[lo:hi].copy(),
                          values=value[lo:hi].copy()))
    return sets


def build_two_hop(g: Graph, c: float, v: int):
    """Exact HPs from ``v`` at steps 0, 1 and 2, sorted by (step, target).

    Returns ``(steps, targets, values)`` arrays; runs in time linear in the
    number of in-edges of ``v`` and of its in-neighbours.
    """
    sq = math.sqrt(c)
    nbrs = g.in_neighbors(v)
    steps = [np.zeros(1, dtype=np.int64)]
    targets = [np.array([v], dtype=np.int64)]
    values = [np.ones(1)]
    if nbrs.size:
        h1 = sq / nbrs.size
        steps.append(np.ones(nbrs.size, dtype=np.int64))
        targets.append(nbrs.astype(np.int64))
        values.append(np.full(nbrs.size, h1))
        deg = g.in_degree[nbrs]
        owners = np.repeat(nbrs, deg)
        if owners.size:
            two = np.concatenate([g.in_neighbors(x) for x in nbrs])
            contrib = sq * h1 / g.in_degree[owners]
            uniq, inv = np.unique(two, return_inverse=True)
            acc = np.bincount(inv, weights=contrib, minlength=uniq.size)
            steps.append(np.full(uniq.size, 2, dtype=np.int64))
            targets.append(uniq)
            values.append(acc)
    return np.concatenate(steps), np.concatenate(targets), np.concatenate(values)


def apply_space_reduction(sets: list[HpSet], g: Graph, gamma: float, theta: float) -> list[HpSet]:
    """Drop stored step-1/2 entries wherever the two-hop in-neighbourhood is small."""
    limit = gamma / theta
    eta = g.two_hop_sizes
    out = []
    for hs in sets:
        if hs.reduced or eta[hs.owner] > limit:
            out.append(hs)
            continue
        keep = (hs.steps != 1) & (hs.steps != 2)
        out.append(HpSet(owner=hs.owner, steps=hs.steps[keep], targets=hs.targets[keep],
                         values=hs.values[keep], reduced=True))
    return out


def marking_budget(eps: float) -> tuple[int, int]:
    """(number of marks per node, max in-degree of an eligible target)."""
    r = 1.0 / math.sqrt(eps)
    return math.ceil(r - 1e-12), math.floor(r + 1e-12)


def mark_top_hps(sets: list[HpSet], g: Graph, eps: float) -> list[HpSet]:
    """Mark the largest stored entries whose targets have few in-neighbours.

    Ties are broken by smaller step, then smaller target id.
    """
    budget, max_deg = marking_budget(eps)
    out = []
    for hs in sets:
        eligible = np.flatnonzero(g.in_degree[hs.targets] <= max_deg)
        if eligible.size > budget:
            order = np.lexsort((hs.targets[eligible], hs.steps[eligible], -hs.values[eligible]))
            eligible = np.sort(eligible[order[:budget]])
        out.append(HpSet(owner=hs.owner, steps=hs.steps, targets=hs.targets, values=hs.values,
                         reduced=hs.reduced, marked=eligible.astype(np.int64)))
    return out


def _keys(steps, targets, n):
    return steps.astype(np.int64) * n + targets.astype(np.int64)


def materialize_query_hp_set(hs: HpSet, g: Graph, c: float, expand: bool = True):
    """Effective entry list used at query time, as (steps, targets, values).

    Reduced sets get their exact step-1/2 entries back; with ``expand``
    each marked entry pushes one more step to its target's in-neighbours
    wherever no entry exists yet.
    """
    steps = hs.steps.astype(np.int64)
    targets = hs.targets
    values = hs.values
    if hs.reduced:
        s2, t2, v2 = build_two_hop(g, c, hs.owner)
        extra = s2 > 0
        steps = np.concatenate([steps, s2[extra]])
        targets = np.concatenate([targets, t2[extra]])
        values = np.concatenate([values, v2[extra]])
    n = max(g.n, 1)
    if expand and hs.marked.size:
        sq = math.sqrt(c)
        ms, mt, mv = hs.steps[hs.marked].astype(np.int64), hs.targets[hs.marked], hs.values[hs.marked]
        deg = g.in_degree[mt]
        has = deg > 0
        ms, mt, mv, deg = ms[has], mt[has], mv[has], deg[has]
        if mt.size:
            new_t = np.concatenate([g.in_neighbors(j) for j in mt])
            new_s = np.repeat(ms + 1, deg)
            contrib = np.repeat(sq * mv / deg, deg)
            existing = _keys(steps, targets, n)
            new_k = _keys(new_s, new_t, n)
            fresh = ~np.isin(new_k, existing)
            if fresh.any():
                uniq, inv = np.unique(new_k[fresh], return_inverse=True)
                acc = np.bincount(inv, weights=contrib[fresh], minlength=uniq.size)
                steps = np.concatenate([steps, uniq // n])
                targets = np.concatenate([targets, uniq % n])
                values = np.concatenate([values, acc])
    order = np.lexsort((targets, steps))
    return steps[order], targets[order], values[order]
