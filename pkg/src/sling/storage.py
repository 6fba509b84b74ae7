"""Binary index files.

Layout (little-endian)::

    header      magic "SLNG1", version u8, 2 pad bytes, n u64,
                c, eps, eps_d, theta, delta, delta_d, gamma f64,
                flags u32, seed u64, graph fingerprint u64
    correction  n x f64
    directory   n x {offset u64, entry count u32, reduced u8, marked count u16}
    records     per node: entries {step u8, target u32, value f64},
                then marked entry positions as u32
    trailer     CRC-64/WE of every preceding byte, u64

A :class:`DiskIndex` keeps header, correction factors and directory in
memory and fetches node records with positioned reads.
"""

from __future__ import annotations

import os
import struct

import crcmod.predefined
import numpy as np

from .hpindex import HpSet
from .index import SlingIndex, SlingParams

MAGIC = b"SLNG1"
VERSION = 1
FLAG_ADAPTIVE = 0x1

HEADER = struct.Struct("<5sB2xQ7dIQQ")
ENTRY_DTYPE = np.dtype([("step", "u1"), ("target", "<u4"), ("value", "<f8")])
DIR_DTYPE = np.dtype([("offset", "<u8"), ("count", "<u4"), ("reduced", "u1"), ("marked", "<u2")])
ENTRY_BYTES = ENTRY_DTYPE.itemsize
CRC = struct.Struct("<Q")

_crc64 = crcmod.predefined.mkPredefinedCrcFun("crc-64-we")


class IndexFormatError(ValueError):
    """Bad magic, unsupported version, checksum mismatch or truncated file."""


class FingerprintMismatch(IndexFormatError):
    pass


def crc64(data: bytes, crc: int | None = None) -> int:
    """CRC-64/WE; pass the previous result as ``crc`` to continue a running checksum."""
    return _crc64(data) if crc is None else _crc64(data, crc)


def serialized_size(index: SlingIndex) -> int:
    entries = sum(len(h) for h in index.hp)
    marked = sum(h.marked.size for h in index.hp)
    n = index.n
    return HEADER.size + 8 * n + DIR_DTYPE.itemsize * n + ENTRY_BYTES * entries + 4 * marked + CRC.size


def to_bytes(index: SlingIndex) -> bytes:
    p = index.params
    n = index.n
    flags = FLAG_ADAPTIVE if p.mode == "adaptive" else 0
    header = HEADER.pack(MAGIC, VERSION, n, p.c, p.eps, p.eps_d, p.theta, p.delta, p.delta_d,
                         p.gamma, flags, index.seed & 0xFFFFFFFFFFFFFFFF, index.fingerprint)
    directory = np.zeros(n, dtype=DIR_DTYPE)
    offset = HEADER.size + 8 * n + DIR_DTYPE.itemsize * n
    records = []
    for v, hs in enumerate(index.hp):
        if hs.marked.size > 0xFFFF:
            raise ValueError("marked count exceeds u16 directory field")
        rec = np.empty(len(hs), dtype=ENTRY_DTYPE)
        rec["step"] = hs.steps
        rec["target"] = hs.targets
        rec["value"] = hs.values
        blob = rec.tobytes() + hs.marked.astype("<u4").tobytes()
        directory[v] = (offset, len(hs), int(hs.reduced), hs.marked.size)
        records.append(blob)
        offset += len(blob)
    body = b"".join([header, np.asarray(index.d, dtype="<f8").tobytes(), directory.tobytes()] + records)
    return body + CRC.pack(crc64(body))


def serialize(index: SlingIndex, sink) -> None:
    """Write ``index`` to a path or binary file object."""
    data = to_bytes(index)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def _parse_header(buf: bytes):
    if len(buf) < HEADER.size:
        raise IndexFormatError("file too short for header")
    (magic, version, n, c, eps, eps_d, theta, delta, delta_d, gamma, flags, seed,
     fingerprint) = HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    params = SlingParams(eps=eps, delta=delta, c=c, eps_d=eps_d, theta=theta, delta_d=delta_d,
                         gamma=gamma, mode="adaptive" if flags & FLAG_ADAPTIVE else "basic")
    return n, params, seed, fingerprint


def _decode_record(raw: bytes, owner: int, count: int, reduced: int, marked: int) -> HpSet:
    rec = np.frombuffer(raw, dtype=ENTRY_DTYPE, count=count)
    mk = np.frombuffer(raw, dtype="<u4", count=marked, offset=count * ENTRY_BYTES)
    return HpSet(owner=owner, steps=rec["step"].astype(np.uint8), targets=rec["target"].astype(np.int64),
                 values=rec["value"].astype(np.float64), reduced=bool(reduced),
                 marked=mk.astype(np.int64))


def from_bytes(data: bytes, fingerprint: int | None = None) -> SlingIndex:
    if len(data) < HEADER.size + CRC.size:
        raise IndexFormatError("file truncated")
    if data[:5] != MAGIC:
        raise IndexFormatError(f"bad magic {data[:5]!r}")
    body, (stored,) = data[:-CRC.size], CRC.unpack(data[-CRC.size:])
    if crc64(body) != stored:
        raise IndexFormatError("checksum mismatch (file corrupt or truncated)")
    n, params, seed, fp = _parse_header(body)
    if fingerprint is not None and fingerprint != fp:
        raise FingerprintMismatch("index was built for a different graph")
    pos = HEADER.size
    d = np.frombuffer(body, dtype="<f8", count=n, offset=pos).astype(np.float64)
    pos += 8 * n
    directory = np.frombuffer(body, dtype=DIR_DTYPE, count=n, offset=pos)
    hp = []
    for v in range(n):
        off, cnt, red, mk = (int(x) for x in directory[v])
        size = cnt * ENTRY_BYTES + 4 * mk
        if off + size > len(body):
            raise IndexFormatError("directory points past end of file")
        hp.append(_decode_record(body[off:off + size], v, cnt, red, mk))
    return SlingIndex(params=params, d=d, hp=hp, seed=seed, fingerprint=fp)


def deserialize(source, fingerprint: int | None = None) -> SlingIndex:
    """Load an index from a path or binary file object, validating the checksum."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    return from_bytes(data, fingerprint=fingerprint)


class DiskIndex:
    """Disk-resident index: node records are read on demand with ``os.pread``.

    ``records_read`` counts node-record fetches (for I/O accounting).
    """

    def __init__(self, path, fingerprint: int | None = None, verify: bool = True):
        self.path = os.fspath(path)
        self._fd = os.open(self.path, os.O_RDONLY)
        try:
            size = os.fstat(self._fd).st_size
            if size < HEADER.size + CRC.size:
                raise IndexFormatError("file truncated")
            if verify:
                self._verify(size)
            head = os.pread(self._fd, HEADER.size, 0)
            n, self.params, self.seed, self.fingerprint = _parse_header(head)
            if fingerprint is not None and fingerprint != self.fingerprint:
                raise FingerprintMismatch("index was built for a different graph")
            self.d = np.frombuffer(os.pread(self._fd, 8 * n, HEADER.size), dtype="<f8").astype(np.float64)
            raw_dir = os.pread(self._fd, DIR_DTYPE.itemsize * n, HEADER.size + 8 * n)
            if len(raw_dir) != DIR_DTYPE.itemsize * n:
                raise IndexFormatError("file truncated inside directory")
            self.directory = np.frombuffer(raw_dir, dtype=DIR_DTYPE).copy()
        except Exception:
            os.close(self._fd)
            raise
        self.records_read = 0

    def _verify(self, size):
        crc = None
        pos = 0
        body = size - CRC.size
        while pos < body:
            chunk = os.pread(self._fd, min(1 << 20, body - pos), pos)
            crc = crc64(chunk, crc)
            pos += len(chunk)
        (stored,) = CRC.unpack(os.pread(self._fd, CRC.size, body))
        if crc != stored:
            raise IndexFormatError("checksum mismatch (file corrupt or truncated)")

    @property
    def n(self) -> int:
        return self.d.size

    def hp_set(self, v: int) -> HpSet:
        off, cnt, red, mk = (int(x) for x in self.directory[v])
        raw = os.pread(self._fd, cnt * ENTRY_BYTES + 4 * mk, off)
        self.records_read += 1
        return _decode_record(raw, v, cnt, red, mk)

    def load(self) -> SlingIndex:
        with open(self.path, "rb") as fh:
            return from_bytes(fh.read())

    def close(self):
        if self._fd is not None:
            os.close(self._fd)
            self._fd = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_index(path, fingerprint: int | None = None, from_disk: bool = False):
    if from_disk:
        return DiskIndex(path, fingerprint=fingerprint)
    return deserialize(path, fingerprint=fingerprint)


def peek_magic(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read(5)

