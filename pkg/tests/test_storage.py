import io

import numpy as np
import pytest

from conftest import random_graph
from sling import DiskIndex, build_index, derive_parameters, deserialize, serialize
from sling.query import single_pair
from sling.storage import (DIR_DTYPE, ENTRY_BYTES, HEADER, FingerprintMismatch, IndexFormatError,
                           crc64, serialized_size, to_bytes)


@pytest.fixture
def built(small5):
    return small5, build_index(small5, derive_parameters(0.05, 0.01, n=5), seed=3)


def test_crc_check_value():
    assert crc64(b"123456789") == 0x62EC59E3F1A4F00A
    assert crc64(b"6789", crc64(b"12345")) == crc64(b"123456789")


def test_record_sizes():
    assert ENTRY_BYTES == 13
    assert DIR_DTYPE.itemsize == 15
    assert HEADER.size == 5 + 1 + 2 + 8 + 7 * 8 + 4 + 8 + 8


def test_round_trip_identity(built, tmp_path):
    g, idx = built
    path = tmp_path / "x.idx"
    serialize(idx, path)
    assert path.stat().st_size == serialized_size(idx)
    back = deserialize(path, fingerprint=g.fingerprint)
    assert back == idx
    assert to_bytes(back) == path.read_bytes()


def test_round_trip_random_graphs():
    rng = np.random.default_rng(0)
    for _ in range(5):
        g = random_graph(rng, int(rng.integers(2, 80)), int(rng.integers(1, 400)))
        idx = build_index(g, derive_parameters(0.1, 0.05, n=g.n, mode="basic"), seed=int(rng.integers(1 << 62)))
        buf = io.BytesIO()
        serialize(idx, buf)
        buf.seek(0)
        assert deserialize(buf) == idx


def test_truncated_file_rejected(built):
    data = to_bytes(built[1])
    for cut in (1, 8, len(data) // 2, len(data) - 30):
        with pytest.raises(IndexFormatError):
            deserialize(io.BytesIO(data[:cut]))


def test_corruption_rejected(built):
    data = bytearray(to_bytes(built[1]))
    data[HEADER.size + 3] ^= 0x40
    with pytest.raises(IndexFormatError, match="checksum"):
        deserialize(io.BytesIO(bytes(data)))


def test_bad_magic(built):
    data = b"XXXXX" + to_bytes(built[1])[5:]
    with pytest.raises(IndexFormatError, match="magic"):
        deserialize(io.BytesIO(data))


def test_fingerprint_mismatch(built, cycle4, tmp_path):
    path = tmp_path / "x.idx"
    serialize(built[1], path)
    with pytest.raises(FingerprintMismatch):
        deserialize(path, fingerprint=cycle4.fingerprint)
    with pytest.raises(FingerprintMismatch):
        DiskIndex(path, fingerprint=cycle4.fingerprint)


def test_disk_index_reads_two_records_per_pair(built, tmp_path):
    g, idx = built
    path = tmp_path / "x.idx"
    serialize(idx, path)
    with DiskIndex(path, fingerprint=g.fingerprint) as disk:
        assert disk.records_read == 0
        for i in range(5):
            for j in range(5):
                if i == j:
                    continue
                before = disk.records_read
                s = single_pair(disk, g, i, j).score
                assert disk.records_read - before == 2
                assert s == single_pair(idx, g, i, j).score
        assert disk.load() == idx


def test_disk_index_detects_corruption(built, tmp_path):
    path = tmp_path / "x.idx"
    data = bytearray(to_bytes(built[1]))
    data[-20] ^= 1
    path.write_bytes(bytes(data))
    with pytest.raises(IndexFormatError):
        DiskIndex(path)
