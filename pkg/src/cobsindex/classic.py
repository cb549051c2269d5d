"""Classic bit-sliced signature index: one Bloom width for every document.

The matrix has ``w`` rows; row ``r`` packs bit ``r`` of every document's
filter, LSB-first within each byte (bit ``b`` of byte ``j`` is document
``8 j + b``). Padding bits past the last document are always zero.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bloom_math import size_filter
from .termizer import IndexParams, TermSet


def row_bytes(num_docs: int) -> int:
    return (num_docs + 7) // 8


@dataclass(eq=False)
class ClassicIndex:
    params: IndexParams
    w: int
    names: list[str]
    term_counts: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        self.term_counts = np.asarray(self.term_counts, dtype=np.uint64)
        if self.matrix.shape != (self.w, row_bytes(len(self.names))):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not fit w={self.w} "
                f"and {len(self.names)} documents"
            )

    @property
    def num_docs(self) -> int:
        return len(self.names)

    @property
    def row_bytes(self) -> int:
        return self.matrix.shape[1]

    @property
    def docs(self) -> list[tuple[str, int]]:
        return list(zip(self.names, map(int, self.term_counts)))

    @property
    def blocks(self) -> list[ClassicIndex]:
        return [self]

    def read_rows(self, rows: np.ndarray) -> np.ndarray:
        return self.matrix[rows]

    def column(self, doc: int) -> np.ndarray:
        """Bloom filter of one document as a boolean vector of length ``w``."""
        return (self.matrix[:, doc >> 3] >> (doc & 7)) & 1 == 1


def classic_width(documents: Sequence[TermSet], params: IndexParams) -> int:
    """Width needed so the largest document meets the target rate."""
    largest = max((len(d) for d in documents), default=0)
    return size_filter(largest, params.p, params.k)


def _check_documents(documents: Sequence[TermSet], params: IndexParams) -> None:
    seen = set()
    for doc in documents:
        if doc.name in seen:
            raise ValueError(f"duplicate document name {doc.name!r}")
        seen.add(doc.name)
        if doc.term_count and doc.q != params.q:
            raise ValueError(f"document {doc.name!r} holds {doc.q}-grams, index uses q={params.q}")


def _fill(documents: Sequence[TermSet], params: IndexParams, w: int) -> ClassicIndex:
    matrix = np.zeros((w, row_bytes(len(documents))), dtype=np.uint8)
    modulus = np.uint64(w)
    for j, doc in enumerate(documents):
        if not len(doc):
            continue
        rows = (doc.hashes(params.k) % modulus).ravel()
        col = matrix[:, j >> 3]
        col[rows] |= np.uint8(1 << (j & 7))
    return ClassicIndex(
        params=params,
        w=w,
        names=[d.name for d in documents],
        term_counts=[len(d) for d in documents],
        matrix=matrix,
    )


def build_classic(
    documents: Sequence[TermSet],
    params: IndexParams,
    w: int | None = None,
    workers: int = 1,
) -> ClassicIndex:
    """Bit-sliced index over ``documents`` in the given order.

    ``w`` forces a width (it must still be a valid filter size); by default
    the width is sized for the largest document. With ``workers > 1`` the
    documents are split into contiguous batches that are indexed separately
    and concatenated, which yields the same bytes as a sequential build.
    """
    if not documents:
        raise ValueError("cannot build an index over zero documents")
    _check_documents(documents, params)
    if w is None:
        w = classic_width(documents, params)
    if w < 1:
        raise ValueError(f"w must be >= 1, got {w}")

    n = len(documents)
    workers = max(1, min(workers, n))
    if workers == 1:
        return _fill(documents, params, w)

    batch = math.ceil(n / workers)
    batches = [documents[i : i + batch] for i in range(0, n, batch)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda docs: _fill(docs, params, w), batches))
    out = parts[0]
    for part in parts[1:]:
        out = merge_classic(out, part)
    return out


def _concat_bits(a: np.ndarray, na: int, b: np.ndarray, nb: int) -> np.ndarray:
    if na % 8 == 0:
        return np.hstack([a, b])
    bits_a = np.unpackbits(a, axis=1, count=na, bitorder="little")
    bits_b = np.unpackbits(b, axis=1, count=nb, bitorder="little")
    return np.packbits(np.hstack([bits_a, bits_b]), axis=1, bitorder="little")


def merge_classic(a: ClassicIndex, b: ClassicIndex) -> ClassicIndex:
    """Concatenate two classic indexes built with identical parameters and width."""
    if a.params != b.params:
        raise ValueError(f"parameter mismatch: {a.params} vs {b.params}")
    if a.w != b.w:
        raise ValueError(f"width mismatch: {a.w} vs {b.w}")
    clash = set(a.names).intersection(b.names)
    if clash:
        raise ValueError(f"duplicate document names {sorted(clash)[:5]}")
    return ClassicIndex(
        params=a.params,
        w=a.w,
        names=a.names + b.names,
        term_counts=np.concatenate([a.term_counts, b.term_counts]),
        matrix=_concat_bits(a.matrix, a.num_docs, b.matrix, b.num_docs),
    )
