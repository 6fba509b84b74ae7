"""Immutable directed graphs in dual CSR form (in- and out-neighbour lists)."""

from __future__ import annotations

import hashlib
from functools import cached_property
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Raised when an edge list cannot be parsed into a graph."""


def _csr(n, rows, cols):
    # rows/cols already deduplicated; sort by (row, col) so each list is increasing
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, cols.astype(np.int64, copy=True)


class Graph:
    """Directed, unweighted graph with dense node ids ``0..n-1``.

    ``in_indptr/in_indices`` and ``out_indptr/out_indices`` are CSR arrays;
    every adjacency list is strictly increasing. ``labels[v]`` is the raw
    label node ``v`` was loaded from.
    """

    def __init__(self, n, src, dst, labels=None):
        if n < 0:
            raise ValueError("node count must be non-negative")
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValueError("src and dst must have equal length")
        if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n):
            raise ValueError("edge endpoint out of range")
        if src.size:
            key = np.unique(src * max(n, 1) + dst)
            src, dst = key // max(n, 1), key % max(n, 1)
        self.n = int(n)
        self.m = int(src.size)
        self.out_indptr, self.out_indices = _csr(self.n, src, dst)
        self.in_indptr, self.in_indices = _csr(self.n, dst, src)
        self.in_degree = np.diff(self.in_indptr)
        self.out_degree = np.diff(self.out_indptr)
        if labels is None:
            labels = np.arange(self.n, dtype=np.int64)
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.labels.shape != (self.n,):
            raise ValueError("labels must have one entry per node")
        self._hp_mats = {}
        for arr in (self.out_indptr, self.out_indices, self.in_indptr, self.in_indices,
                    self.in_degree, self.out_degree, self.labels):
            arr.setflags(write=False)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls(n, pairs[:, 0], pairs[:, 1])

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.m == other.m
            and np.array_equal(self.out_indptr, other.out_indptr)
            and np.array_equal(self.out_indices, other.out_indices)
            and np.array_equal(self.in_indptr, other.in_indptr)
            and np.array_equal(self.in_indices, other.in_indices)
            and np.array_equal(self.labels, other.labels)
        )

    __hash__ = None

    def in_neighbors(self, v: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[v]:self.in_indptr[v + 1]]

    def out_neighbors(self, v: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[v]:self.out_indptr[v + 1]]

    def edges(self):
        """All edges as ``(src, dst)`` id arrays, ordered by (src, dst)."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree)
        return src, self.out_indices.copy()

    def two_hop_in_size(self, v: int) -> int:
        """Number of in-edges of ``v`` plus in-edges of each in-neighbour of ``v``."""
        nbrs = self.in_neighbors(v)
        return int(nbrs.size + self.in_degree[nbrs].sum())

    @cached_property
    def two_hop_sizes(self) -> np.ndarray:
        owner = np.repeat(np.arange(self.n), self.in_degree)
        acc = np.bincount(owner, weights=self.in_degree[self.in_indices], minlength=self.n)
        return self.in_degree + acc.astype(np.int64)

    @cached_property
    def walk_matrix(self) -> sp.csr_matrix:
        """Row-normalised in-adjacency: ``A[i, x] = 1/|I(i)|`` for ``x`` in ``I(i)``.

        Rows of in-degree-0 nodes are empty.
        """
        with np.errstate(divide="ignore"):
            inv = np.where(self.in_degree > 0, 1.0 / np.maximum(self.in_degree, 1), 0.0)
        data = np.repeat(inv, self.in_degree)
        return sp.csr_matrix((data, self.in_indices, self.in_indptr), shape=(self.n, self.n))

    def hp_matrix(self, c: float) -> sp.csr_matrix:
        """One-step hitting-probability operator ``M[i, x] = sqrt(c)/|I(i)|``."""
        cached = self._hp_mats.get(c)
        if cached is not None:
            return cached
        with np.errstate(divide="ignore"):
            w = np.where(self.in_degree > 0, np.sqrt(c) / np.maximum(self.in_degree, 1), 0.0)
        data = np.repeat(w, self.in_degree)
        M = sp.csr_matrix((data, self.in_indices, self.in_indptr), shape=(self.n, self.n))
        self._hp_mats[c] = M
        return M

    @cached_property
    def fingerprint(self) -> int:
        """64-bit digest of the node count and full edge structure."""
        h = hashlib.blake2b(digest_size=8)
        h.update(np.array([self.n, self.m], dtype="<u8").tobytes())
        h.update(self.out_indptr.astype("<u8").tobytes())
        h.update(self.out_indices.astype("<u8").tobytes())
        return int.from_bytes(h.digest(), "little")

    def write_edge_list(self, fh: TextIO) -> None:
        src, dst = self.edges()
        for u, v in zip(self.labels[src].tolist(), self.labels[dst].tolist()):
            fh.write(f"{u} {v}\n")


def load_edge_list(source: TextIO | Iterable[str], undirected: bool = False,
                   comment_prefix: str = "#") -> Graph:
    """Parse a SNAP-style edge list ("u v" per line) into a :class:`Graph`.

    Raw labels are remapped to dense ids in ascending label order. Duplicate
    edges collapse; self-loops are kept. With ``undirected`` every line yields
    both directions.
    """
    us: list[int] = []
    vs: list[int] = []
    for lineno, line in enumerate(source, start=1):
        s = line.strip()
        if not s or (comment_prefix and s.startswith(comment_prefix)):
            continue
        parts = s.split()
        if len(parts) < 2:
            raise GraphFormatError(f"line {lineno}: expected two node labels, got {s!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: non-integer node label in {s!r}") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"line {lineno}: negative node label in {s!r}")
        us.append(u)
        vs.append(v)
    if not us:
        raise GraphFormatError("edge list contains no edges")
    raw_u = np.asarray(us, dtype=np.int64)
    raw_v = np.asarray(vs, dtype=np.int64)
    labels, inverse = np.unique(np.concatenate([raw_u, raw_v]), return_inverse=True)
    src, dst = inverse[: raw_u.size], inverse[raw_u.size:]
    if undirected:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
    return Graph(labels.size, src, dst, labels=labels)


def read_graph(path, undirected: bool = False) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return load_edge_list(fh, undirected=undirected)


def in_neighbors(g: Graph, v: int) -> np.ndarray:
    return g.in_neighbors(v)


def out_neighbors(g: Graph, v: int) -> np.ndarray:
    return g.out_neighbors(v)


def two_hop_in_size(g: Graph, v: int) -> int:
    return g.two_hop_in_size(v)
