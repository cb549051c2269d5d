"""Compact index: size-sorted documents in blocks, each block its own classic index."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classic import ClassicIndex, _check_documents, build_classic
from .termizer import IndexParams, TermSet


@dataclass(eq=False)
class CompactIndex:
    """Blocks of at most ``params.block_size`` documents with non-decreasing widths.

    ``order[i]`` is the input position of the ``i``-th stored document.
    """

    params: IndexParams
    blocks: list[ClassicIndex]
    order: np.ndarray

    def __post_init__(self):
        self.order = np.asarray(self.order, dtype=np.int64)
        if len(self.order) != self.num_docs:
            raise ValueError("order must list every stored document exactly once")

    @property
    def num_docs(self) -> int:
        return sum(b.num_docs for b in self.blocks)

    @property
    def names(self) -> list[str]:
        return [name for b in self.blocks for name in b.names]

    @property
    def doc_order(self) -> list[str]:
        return self.names

    @property
    def widths(self) -> list[int]:
        return [b.w for b in self.blocks]


def sort_documents(documents: Sequence[TermSet]) -> list[int]:
    """Input positions sorted by ``(term_count, name)``."""
    return sorted(range(len(documents)), key=lambda i: (len(documents[i]), documents[i].name))


def build_compact(
    documents: Sequence[TermSet], params: IndexParams, workers: int = 1
) -> CompactIndex:
    """Sort documents by term count and index every ``block_size`` of them separately.

    Blocks are independent, so ``workers > 1`` builds them concurrently;
    the assembled index does not depend on scheduling.
    """
    if not documents:
        raise ValueError("cannot build an index over zero documents")
    _check_documents(documents, params)
    order = sort_documents(documents)
    ordered = [documents[i] for i in order]
    B = params.block_size
    chunks = [ordered[i : i + B] for i in range(0, len(ordered), B)]

    def build(chunk):
        return build_classic(chunk, params)

    if len(chunks) == 1:
        blocks = [build_classic(chunks[0], params, workers=workers)]
    elif workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(build, chunks))
    else:
        blocks = [build(c) for c in chunks]
    return CompactIndex(params=params, blocks=blocks, order=np.array(order))


def index_footprint(index: ClassicIndex | CompactIndex) -> int:
    """Payload bytes: ``sum_i w_i * ceil(docs_i / 8)`` over blocks."""
    return sum(b.w * b.row_bytes for b in index.blocks)
