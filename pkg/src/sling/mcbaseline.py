"""Monte Carlo SimRank baseline from precomputed truncated reverse walks.

Walks here never stop on a coin flip: each moves to a uniform in-neighbour
until step ``t`` (or until it reaches a node without in-neighbours, after
which it is padded with the sentinel ``n``). A pair's estimate is the mean
of ``c**tau`` over paired walks, ``tau`` being the first meeting step.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .oracle import ResourceGuardError
from .query import QueryError, SourceResult
from .storage import CRC, IndexFormatError, crc64
from .walks import DOMAIN_MC, node_stream

DEFAULT_CELL_CAP = 400_000_000
MC_MAGIC = b"SLMC1"
MC_VERSION = 1
MC_HEADER = struct.Struct("<5sB2xQQQdddQQ")


def truncation_step(c: float, eps: float) -> int:
    """Smallest integer t > log_c(eps/2)."""
    return math.floor(math.log(eps / 2) / math.log(c)) + 1


def walks_per_node(eps: float, delta: float, n: int) -> int:
    return math.ceil(14 / (3 * eps**2) * (math.log(2 / delta) + 2 * math.log(max(n, 1))))


@dataclass
class McIndex:
    c: float
    t: int
    n_w: int
    walks: np.ndarray  # (n, n_w, t + 1); sentinel n after a walk dies
    seed: int
    eps: float = 0.0
    delta: float = 0.0
    fingerprint: int = 0

    @property
    def n(self) -> int:
        return self.walks.shape[0]

    def __eq__(self, other):
        if not isinstance(other, McIndex):
            return NotImplemented
        return (self.c == other.c and self.t == other.t and self.n_w == other.n_w
                and self.seed == other.seed and self.eps == other.eps and self.delta == other.delta
                and self.fingerprint == other.fingerprint and np.array_equal(self.walks, other.walks))


def _walk_dtype(n):
    return np.uint16 if n < 0xFFFF else np.uint32


def _node_walks(g: Graph, v: int, t: int, n_w: int, rng, dtype) -> np.ndarray:
    out = np.full((n_w, t + 1), g.n, dtype=dtype)
    cur = np.full(n_w, v, dtype=np.int64)
    out[:, 0] = v
    alive = np.arange(n_w)
    for step in range(1, t + 1):
        deg = g.in_degree[cur[alive]]
        keep = deg > 0
        alive = alive[keep]
        if not alive.size:
            break
        cur[alive] = g.in_indices[g.in_indptr[cur[alive]] + rng.integers(0, deg[keep])]
        out[alive, step] = cur[alive]
    return out


def mc_build(g: Graph, c: float, eps: float, delta: float, seed: int = 0,
             n_w: int | None = None, cell_cap: int = DEFAULT_CELL_CAP) -> McIndex:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    t = truncation_step(c, eps)
    if n_w is None:
        n_w = walks_per_node(eps, delta, g.n)
    cells = g.n * n_w * (t + 1)
    if cells > cell_cap:
        raise ResourceGuardError(f"Monte Carlo index needs {cells} walk cells, cap is {cell_cap}")
    dtype = _walk_dtype(g.n)
    walks = np.empty((g.n, n_w, t + 1), dtype=dtype)
    for v in range(g.n):
        walks[v] = _node_walks(g, v, t, n_w, node_stream(seed, v, DOMAIN_MC), dtype)
    return McIndex(c=c, t=t, n_w=n_w, walks=walks, seed=int(seed), eps=eps, delta=delta,
                   fingerprint=g.fingerprint)


def _pair(index: McIndex, i: int, j: int) -> float:
    if i == j:
        return 1.0
    wi, wj = index.walks[i], index.walks[j]
    same = (wi == wj) & (wi != index.n)
    hit = same.any(axis=1)
    tau = np.argmax(same, axis=1)
    powers = index.c ** np.arange(index.t + 1)
    return float(np.where(hit, powers[tau], 0.0).sum() / index.n_w)


def mc_pair(index: McIndex, i: int, j: int) -> float:
    for v in (i, j):
        if not 0 <= v < index.n:
            raise QueryError(f"node {v} out of range [0, {index.n})")
    return _pair(index, i, j)


def mc_source(index: McIndex, i: int) -> SourceResult:
    if not 0 <= i < index.n:
        raise QueryError(f"node {i} out of range [0, {index.n})")
    scores = {}
    for j in range(index.n):
        s = _pair(index, i, j)
        if s > 0:
            scores[j] = s
    return SourceResult(i, scores)


def mc_all_pairs(index: McIndex) -> np.ndarray:
    n = index.n
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = _pair(index, i, j)
    return out


def mc_serialize(index: McIndex, path) -> None:
    header = MC_HEADER.pack(MC_MAGIC, MC_VERSION, index.n, index.n_w, index.t, index.c, index.eps,
                            index.delta, index.seed & 0xFFFFFFFFFFFFFFFF, index.fingerprint)
    body = header + index.walks.astype("<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(body + CRC.pack(crc64(body)))


def mc_deserialize(path) -> McIndex:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < MC_HEADER.size + CRC.size:
        raise IndexFormatError("file truncated")
    if data[:5] != MC_MAGIC:
        raise IndexFormatError(f"bad magic {data[:5]!r}")
    body, (stored,) = data[:-CRC.size], CRC.unpack(data[-CRC.size:])
    if crc64(body) != stored:
        raise IndexFormatError("checksum mismatch (file corrupt or truncated)")
    magic, version, n, n_w, t, c, eps, delta, seed, fp = MC_HEADER.unpack_from(body, 0)
    if version != MC_VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    walks = np.frombuffer(body, dtype="<u4", offset=MC_HEADER.size).reshape(n, n_w, t + 1)
    return McIndex(c=c, t=t, n_w=n_w, walks=walks.astype(_walk_dtype(n)), seed=seed, eps=eps,
                   delta=delta, fingerprint=fp)

