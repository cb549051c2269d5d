import struct

import numpy as np
import pytest

from cobsindex import (
    IndexFormatError,
    IndexParams,
    QueryOptions,
    build_classic,
    build_compact,
    extract_terms,
    open_random_access,
    open_resident,
    query,
    read_index,
    write_index,
)
from cobsindex.storage import index_bytes

from conftest import random_corpus, random_dna, termsets

HEADER_SIZE = 36


@pytest.fixture
def compact_file(tmp_path, rng):
    params = IndexParams(q=9, k=2, p=0.3, canonical=True, block_size=5)
    corpus = random_corpus(rng, rng.integers(30, 900, 23), records=2)
    ix = build_compact(termsets(corpus, params), params)
    path = tmp_path / "c.idx"
    write_index(ix, path)
    return path, ix, corpus


def test_single_term_layout(tmp_path):
    params = IndexParams(q=31, k=1, p=0.3)
    ix = build_classic([extract_terms(["A" * 31], 31, name="doc")], params)
    path = tmp_path / "one.idx"
    write_index(ix, path)
    data = path.read_bytes()
    # header + (doc_count, w) + (name_len, "doc", term_count) + order + offset
    head = HEADER_SIZE + (4 + 8) + (2 + 3 + 8) + 4 + 8
    assert len(data) == head + 3
    assert data[:8] == b"COBSIDX1"
    assert data[8:12] == bytes([1, 0, 0, 0])
    assert struct.unpack_from("<IIdII", data, 12) == (31, 1, 0.3, 1024, 1)
    assert struct.unpack_from("<IQ", data, 36) == (1, 3)
    assert struct.unpack_from("<Q", data, head - 8) == (head,)
    assert data[head:] == bytes([0, 1, 0])


def test_round_trip_is_byte_identical(tmp_path, compact_file):
    path, ix, _ = compact_file
    again = tmp_path / "again.idx"
    write_index(read_index(path), again)
    assert path.read_bytes() == again.read_bytes() == index_bytes(ix)


def test_classic_round_trip(tmp_path, rng):
    params = IndexParams(q=6, k=3)
    ix = build_classic(termsets(random_corpus(rng, [100, 5, 300]), params), params)
    path = tmp_path / "k.idx"
    write_index(ix, path)
    back = read_index(path)
    assert type(back).__name__ == "ClassicIndex"
    assert np.array_equal(back.matrix, ix.matrix)
    assert back.docs == ix.docs
    with open_random_access(path) as r:
        assert len(r.blocks) == 1
        assert r.kind == 0


def test_readers_agree(compact_file, rng):
    path, ix, corpus = compact_file
    patterns = [s[0][:60] for _, s in corpus] + [random_dna(rng, 40) for _ in range(10)]
    with open_resident(path) as a, open_random_access(path) as b:
        for pattern in patterns:
            for K in (0.2, 0.9, 1.0):
                opts = QueryOptions(K=K)
                want = query(ix, pattern, opts)
                assert query(a, pattern, opts) == want
                assert query(b, pattern, opts) == want


def test_random_access_reads_only_needed_rows(compact_file):
    path, ix, corpus = compact_file
    pattern = corpus[3][1][0][:50]
    terms = extract_terms([pattern], 9, canonical=True)
    k = ix.params.k
    with open_random_access(path) as r:
        query(r, pattern, QueryOptions(K=0.5))
        upper = k * len(terms) * sum(b.row_bytes for b in r.blocks)
        distinct = 0
        for b in r.blocks:
            rows = terms.hashes(k) % np.uint64(b.w)
            distinct += len(np.unique(rows)) * b.row_bytes
        assert r.bytes_read == distinct
        assert distinct <= upper
        assert r.bytes_read < path.stat().st_size


def test_order_survives(compact_file):
    path, ix, _ = compact_file
    back = read_index(path)
    assert back.order.tolist() == ix.order.tolist()
    assert back.names == ix.names


def test_bad_magic(tmp_path, compact_file):
    path, _, _ = compact_file
    data = bytearray(path.read_bytes())
    data[0:8] = b"NOTANIDX"
    bad = tmp_path / "bad.idx"
    bad.write_bytes(bytes(data))
    for opener in (open_resident, open_random_access):
        with pytest.raises(IndexFormatError, match="magic"):
            opener(bad)


def test_unknown_version(tmp_path, compact_file):
    path, _, _ = compact_file
    data = bytearray(path.read_bytes())
    data[8] = 2
    bad = tmp_path / "v2.idx"
    bad.write_bytes(bytes(data))
    with pytest.raises(IndexFormatError, match="version"):
        open_resident(bad)


@pytest.mark.parametrize("cut", [1, 100, 10])
def test_truncation_detected(tmp_path, compact_file, cut):
    path, _, _ = compact_file
    data = path.read_bytes()
    bad = tmp_path / "short.idx"
    bad.write_bytes(data[:-cut] if cut != 10 else data[:40])
    for opener in (open_resident, open_random_access):
        with pytest.raises(IndexFormatError, match="truncated"):
            opener(bad)


def test_trailing_bytes_rejected(tmp_path, compact_file):
    path, _, _ = compact_file
    bad = tmp_path / "long.idx"
    bad.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(IndexFormatError):
        open_resident(bad)


def test_empty_file(tmp_path):
    empty = tmp_path / "empty.idx"
    empty.write_bytes(b"")
    with pytest.raises(IndexFormatError):
        open_random_access(empty)


def test_missing_file(tmp_path):
    with pytest.raises(OSError, match="missing"):
        open_resident(tmp_path / "missing.idx")


def test_little_endian_on_disk(tmp_path):
    params = IndexParams(q=3, k=1, p=0.3, block_size=258)
    ix = build_classic([extract_terms(["abcdef"], 3, name="x")], params)
    path = tmp_path / "e.idx"
    write_index(ix, path)
    assert path.read_bytes()[28:32] == bytes([2, 1, 0, 0])


def test_order_must_be_permutation(tmp_path):
    params = IndexParams(q=3, block_size=1)
    docs = [extract_terms([s], 3, name=n) for n, s in (("a", "abcd"), ("b", "wxyz"))]
    data = bytearray(index_bytes(build_compact(docs, params)))
    # two one-document block tables, each (doc_count, w) + (name_len, 1-byte name, term_count)
    order_at = HEADER_SIZE + 2 * (12 + 2 + 1 + 8)
    assert struct.unpack_from("<II", data, order_at) == (0, 1)
    struct.pack_into("<I", data, order_at, 1)
    bad = tmp_path / "perm.idx"
    bad.write_bytes(bytes(data))
    with pytest.raises(IndexFormatError, match="permutation"):
        open_resident(bad)
