"""Query processing over bit-sliced blocks.

For each block the k rows of every query term are fetched and AND-ed
into one indicator row per term. Indicator bytes are expanded through a
256-entry table into eight counters each and summed into per-document
scores, so no bit is ever unpacked individually.

Anything with ``params`` and ``blocks`` can be queried: in-memory
:class:`ClassicIndex` / :class:`CompactIndex` objects and the file readers
in :mod:`cobsindex.storage`. A block needs ``w``, ``names``, ``num_docs``,
``row_bytes`` and ``read_rows(rows)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bloom_math import coverage_threshold
from .termizer import TermSet, extract_terms

# Scores above this need the 32-bit accumulation path.
MAX_U16_TERMS = 0xFFFF

# Cap on expanded counters held at once (terms x row bytes x 8).
_EXPAND_BUDGET = 1 << 22

EXPANSION_TABLE = np.unpackbits(
    np.arange(256, dtype=np.uint8)[:, None], axis=1, bitorder="little"
).astype(np.uint16)
EXPANSION_TABLE.flags.writeable = False
_EXPANSION_TABLE_32 = EXPANSION_TABLE.astype(np.uint32)


class QueryError(ValueError):
    pass


class ScoredHit(NamedTuple):
    doc_name: str
    score: int


@dataclass(frozen=True)
class QueryOptions:
    K: float = 0.9
    top_t: int | None = None

    def __post_init__(self):
        if not 0.0 < self.K <= 1.0:
            raise ValueError(f"threshold K must lie in (0, 1], got {self.K}")
        if self.top_t is not None and self.top_t < 1:
            raise ValueError(f"top_t must be positive, got {self.top_t}")


def expand_byte(b: int) -> np.ndarray:
    """Eight counters, counter ``j`` holding bit ``j`` of ``b``."""
    return EXPANSION_TABLE[b]


def and_rows(rows) -> np.ndarray:
    """Bitwise AND over the first axis of equally long byte rows."""
    rows = np.asarray(rows, dtype=np.uint8)
    assert rows.ndim >= 2, "need a stack of rows"
    return np.bitwise_and.reduce(rows, axis=0)


def add_expanded(and_result: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Add the per-document bits of ``(terms, nbytes)`` indicators into ``out``.

    ``out`` has shape ``(nbytes, 8)``; its dtype picks the counter width.
    """
    table = EXPANSION_TABLE if out.dtype == np.uint16 else _EXPANSION_TABLE_32
    out += table[and_result].sum(axis=0, dtype=out.dtype)
    return out


def _partitions(nbytes: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, nbytes))
    step = -(-nbytes // workers)
    return [(lo, min(lo + step, nbytes)) for lo in range(0, nbytes, step)]


def block_scores(block, hashes: np.ndarray, workers: int = 1) -> np.ndarray:
    """Per-document scores in one block for terms with ``(k, ell)`` hashes."""
    k, ell = hashes.shape
    rows = hashes % np.uint64(block.w)
    needed, inverse = np.unique(rows.ravel(), return_inverse=True)
    data = block.read_rows(needed.astype(np.intp))
    inverse = inverse.reshape(k, ell)
    dtype = np.uint16 if ell <= MAX_U16_TERMS else np.uint32

    def score_range(lo: int, hi: int) -> np.ndarray:
        sub = data[:, lo:hi]
        acc = np.zeros((hi - lo, 8), dtype=dtype)
        step = max(1, _EXPAND_BUDGET // max(1, 8 * (hi - lo)))
        for start in range(0, ell, step):
            anded = and_rows(sub[inverse[:, start : start + step]])
            add_expanded(anded, acc)
        return acc.ravel()

    parts = _partitions(block.row_bytes, workers)
    if len(parts) > 1:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            pieces = list(pool.map(lambda r: score_range(*r), parts))
    else:
        pieces = [score_range(lo, hi) for lo, hi in parts]
    scores = np.concatenate(pieces) if pieces else np.zeros(0, dtype=dtype)
    return scores[: block.num_docs]


def score_terms(index, terms: TermSet, workers: int = 1) -> list[np.ndarray]:
    """Score arrays, one per block, counting the terms each document passes."""
    hashes = terms.hashes(index.params.k)
    return [block_scores(b, hashes, workers) for b in index.blocks]


def pattern_terms(index, pattern) -> TermSet:
    params = index.params
    content = pattern if isinstance(pattern, (list, tuple)) else [pattern]
    return extract_terms(content, params.q, params.canonical)


def document_scores(index, pattern, workers: int = 1) -> dict[str, int]:
    """Score of every document for ``pattern``, keyed by document name."""
    terms = pattern_terms(index, pattern)
    out = {}
    for block, scores in zip(index.blocks, score_terms(index, terms, workers)):
        out.update(zip(block.names, map(int, scores)))
    return out


def query(index, pattern, opts: QueryOptions | None = None, workers: int = 1) -> list[ScoredHit]:
    """Documents holding at least ``ceil(K * ell)`` of the pattern's distinct q-grams.

    Hits are ordered by score descending, then name, and cut to ``top_t``.
    """
    opts = opts or QueryOptions()
    terms = pattern_terms(index, pattern)
    ell = len(terms)
    if ell == 0:
        raise QueryError(
            f"pattern yields no {index.params.q}-grams (too short or all grams skipped)"
        )
    if ell > np.iinfo(np.uint32).max:
        raise QueryError(f"{ell} distinct terms exceed the score counter range")
    need = coverage_threshold(ell, opts.K)
    hits = []
    for block, scores in zip(index.blocks, score_terms(index, terms, workers)):
        for i in np.flatnonzero(scores >= need):
            hits.append(ScoredHit(block.names[i], int(scores[i])))
    hits.sort(key=lambda h: (-h.score, h.doc_name))
    if opts.top_t is not None:
        hits = hits[: opts.top_t]
    return hits


def _batch_groups(sizes: list[int], limit: int) -> list[tuple[int, int]]:
    groups, lo, total = [], 0, 0
    for i, n in enumerate(sizes):
        if i > lo and total + n > limit:
            groups.append((lo, i))
            lo, total = i, 0
        total += n
    if lo < len(sizes):
        groups.append((lo, len(sizes)))
    return groups


def _score_group(index, terms: list[TermSet]) -> np.ndarray:
    """Scores for several term sets at once, shape ``(queries, documents)``.

    Columns follow the blocks' stored document order.
    """
    k, q = index.params.k, index.params.q
    sizes = np.array([len(t) for t in terms])
    grams = np.concatenate([t.grams for t in terms]).reshape(-1, q)
    hashes = TermSet("", grams).hashes(k)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    table = _EXPANSION_TABLE_32 if sizes.max() > MAX_U16_TERMS else EXPANSION_TABLE
    out = []
    for block in index.blocks:
        rows = hashes % np.uint64(block.w)
        needed, inverse = np.unique(rows.ravel(), return_inverse=True)
        data = block.read_rows(needed.astype(np.intp))
        anded = and_rows(data[inverse.reshape(rows.shape)])
        counts = np.add.reduceat(table[anded], starts, axis=0)
        out.append(counts.reshape(len(terms), -1)[:, : block.num_docs])
    return np.concatenate(out, axis=1)


def query_batch(index, patterns, opts: QueryOptions | None = None, workers: int = 1):
    """Run many patterns; item ``i`` is ``(ell, hits)`` for pattern ``i``.

    A pattern without q-grams gets ``(0, QueryError)`` instead of a hit list.
    Short patterns are hashed and scored together, which removes most of
    the per-query overhead. Hit lists equal :func:`query` on each pattern.
    """
    opts = opts or QueryOptions()
    names = [n for b in index.blocks for n in b.names]
    name_rank = np.argsort(np.argsort(np.array(names, dtype=object), kind="stable"))
    terms = [pattern_terms(index, p) for p in patterns]
    results = [
        None if len(t) else QueryError(
            f"pattern yields no {index.params.q}-grams (too short or all grams skipped)")
        for t in terms
    ]
    live = [i for i, t in enumerate(terms) if len(t)]
    width = max((b.row_bytes for b in index.blocks), default=1)
    limit = max(1, _EXPAND_BUDGET // (8 * width))
    for lo, hi in _batch_groups([len(terms[i]) for i in live], limit):
        ids = live[lo:hi]
        if hi - lo == 1 and len(terms[ids[0]]) > limit:
            results[ids[0]] = query(index, patterns[ids[0]], opts, workers)
            continue
        scores = _score_group(index, [terms[i] for i in ids])
        need = np.array([coverage_threshold(len(terms[i]), opts.K) for i in ids])
        qi, doc = np.nonzero(scores >= need[:, None])
        got = scores[qi, doc]
        order = np.lexsort((name_rank[doc], -got.astype(np.int64), qi))
        qi, doc, got = qi[order], doc[order], got[order].tolist()
        bounds = np.searchsorted(qi, np.arange(len(ids) + 1))
        for j, i in enumerate(ids):
            a, b = bounds[j], bounds[j + 1]
            if opts.top_t is not None:
                b = min(b, a + opts.top_t)
            results[i] = [ScoredHit(names[d], g) for d, g in zip(doc[a:b].tolist(), got[a:b])]
    return [(len(t), r) for t, r in zip(terms, results)]
