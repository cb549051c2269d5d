"""Checks an index against the corpus it was built from.

Three suites:

* ``no-false-negatives``: substrings of indexed documents must return
  their source document at full score with ``K = 1``.
* ``alien-fpr``: random q-grams absent from the corpus are scored against
  every document; the largest document of each block must show a rate
  near ``p`` and no document may exceed it by more than the tolerance.
* ``oracle``: on up to 64 documents, every document's Bloom filter is
  recomputed term by term with the scalar hash and compared with the
  stored column, and query scores are compared with a direct count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .query import QueryOptions, document_scores, query, score_terms
from .termizer import TermSet, canonicalize, extract_terms, hash_rows

_ACGT = np.frombuffer(b"ACGT", dtype=np.uint8)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    metrics: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    suites: list[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)


@dataclass
class CorpusDocument:
    name: str
    strings: list
    terms: TermSet


def prepare_corpus(index, documents: Sequence[tuple[str, list]]) -> list[CorpusDocument]:
    params = index.params
    return [
        CorpusDocument(name, list(strings), extract_terms(strings, params.q, params.canonical, name))
        for name, strings in documents
    ]


def _as_bytes(s) -> bytes:
    return s.encode("utf-8") if isinstance(s, str) else bytes(s)


def check_no_false_negatives(index, corpus, trials: int, rng, max_len: int = 1000) -> SuiteResult:
    q = index.params.q
    sources = [
        (d, _as_bytes(s)) for d in corpus for s in d.strings if len(_as_bytes(s)) >= q
    ]
    if not sources:
        return SuiteResult("no-false-negatives", True, "no string is long enough to sample")
    failures = []
    checked = 0
    for _ in range(trials):
        doc, s = sources[rng.integers(len(sources))]
        length = int(rng.integers(q, min(len(s), max_len) + 1))
        start = int(rng.integers(0, len(s) - length + 1))
        pattern = s[start : start + length]
        ell = len(extract_terms([pattern], q, index.params.canonical))
        if ell == 0:
            continue
        checked += 1
        hits = dict(query(index, pattern, QueryOptions(K=1.0)))
        if hits.get(doc.name) != ell:
            failures.append(f"{doc.name}[{start}:{start + length}] score {hits.get(doc.name)} != {ell}")
    detail = f"{checked} patterns, {len(failures)} missed"
    if failures:
        detail += "; first: " + failures[0]
    return SuiteResult("no-false-negatives", not failures, detail, {"checked": checked})


def random_aliens(index, corpus, trials: int, rng) -> TermSet:
    """Up to ``trials`` distinct q-grams that occur in no corpus document."""
    params = index.params
    dna = params.canonical or all(
        set(_as_bytes(s)) <= set(b"ACGT") for d in corpus for s in d.strings
    )
    if dna:
        alphabet = _ACGT
    else:
        seen = set()
        for d in corpus:
            for s in d.strings:
                seen.update(_as_bytes(s))
        alphabet = np.array(sorted(seen) or list(b"ACGT"), dtype=np.uint8)
    grams = alphabet[rng.integers(0, len(alphabet), size=(trials, params.q))]
    if params.canonical:
        grams = canonicalize(grams)
    grams = np.ascontiguousarray(grams)
    grams = np.unique(grams.view(np.dtype((np.void, params.q))).ravel())
    aliens = TermSet("aliens", grams.view(np.uint8).reshape(-1, params.q))
    # A shared 64-bit hash means "maybe present"; such grams are dropped.
    known = np.concatenate([d.terms.hashes(1)[0] for d in corpus])
    keep = ~np.isin(aliens.hashes(1)[0], known)
    return TermSet("aliens", aliens.grams[keep])


def alien_rates(index, aliens: TermSet) -> dict[str, float]:
    """Fraction of alien q-grams each document reports as present."""
    rates = {}
    for block, scores in zip(index.blocks, score_terms(index, aliens)):
        rates.update(zip(block.names, (scores / max(1, len(aliens))).tolist()))
    return rates


def fpr_tolerance(p: float, w: int, base: float = 0.03) -> float:
    """``base``, widened for filters too small to realize ``p`` that precisely."""
    return max(base, 4.0 * math.sqrt(p * (1.0 - p) / w))


def check_alien_fpr(index, corpus, trials: int, rng) -> SuiteResult:
    p = index.params.p
    aliens = random_aliens(index, corpus, trials, rng)
    rates = alien_rates(index, aliens)
    problems = []
    worst = 0.0
    for block in index.blocks:
        tol = fpr_tolerance(p, block.w)
        counts = np.asarray(block.term_counts)
        for name in block.names:
            if rates[name] > p + tol:
                problems.append(f"{name}: rate {rates[name]:.4f} > {p + tol:.4f}")
        if counts.size and counts.max() > 0:
            top = block.names[int(np.argmax(counts))]
            worst = max(worst, abs(rates[top] - p))
            if abs(rates[top] - p) > tol:
                problems.append(f"{top} (largest in block): rate {rates[top]:.4f} outside {p}±{tol:.4f}")
    detail = f"{len(aliens)} alien terms, max deviation of block maxima {worst:.4f}"
    if problems:
        detail += "; " + problems[0]
    return SuiteResult("alien-fpr", not problems, detail, {"rates": rates, "aliens": len(aliens)})


def _locate(index) -> dict[str, tuple[object, int]]:
    return {name: (block, j) for block in index.blocks for j, name in enumerate(block.names)}


def oracle_filter(terms: TermSet, k: int, w: int) -> set[int]:
    """Set bit positions of one document's Bloom filter, computed term by term."""
    bits = set()
    for row in terms.grams:
        bits.update(hash_rows(bytes(row), k, w))
    return bits


def oracle_score(pattern_terms: TermSet, bits: set[int], k: int, w: int) -> int:
    return sum(
        all(r in bits for r in hash_rows(bytes(t), k, w)) for t in pattern_terms.grams
    )


def check_oracle(index, corpus, rng, max_docs: int = 64, queries: int = 20) -> SuiteResult:
    params = index.params
    sample = corpus
    if len(corpus) > max_docs:
        sample = [corpus[i] for i in sorted(rng.choice(len(corpus), max_docs, replace=False))]
    where = _locate(index)
    problems = []
    filters = {}
    for doc in sample:
        block, j = where[doc.name]
        bits = oracle_filter(doc.terms, params.k, block.w)
        filters[doc.name] = (bits, block.w)
        stored = np.flatnonzero((block.matrix[:, j >> 3] >> (j & 7)) & 1)
        if set(stored.tolist()) != bits:
            extra = sorted(set(stored.tolist()) - bits)[:3]
            missing = sorted(bits - set(stored.tolist()))[:3]
            problems.append(f"{doc.name}: column differs (extra rows {extra}, missing {missing})")

    pool = [d for d in sample if len(d.terms)]
    for _ in range(queries if pool else 0):
        doc = pool[rng.integers(len(pool))]
        s = max(doc.strings, key=lambda x: len(_as_bytes(x)))
        s = _as_bytes(s)
        length = min(len(s), 3 * params.q)
        start = int(rng.integers(0, len(s) - length + 1))
        pattern = s[start : start + length]
        pterms = extract_terms([pattern], params.q, params.canonical)
        if not len(pterms):
            continue
        got = document_scores(index, pattern)
        for name, (bits, w) in filters.items():
            want = oracle_score(pterms, bits, params.k, w)
            if got[name] != want:
                problems.append(f"query on {doc.name}: {name} scored {got[name]}, oracle {want}")
                break
    detail = f"{len(sample)} documents replayed, {len(problems)} mismatches"
    if problems:
        detail += "; first: " + problems[0]
    return SuiteResult("oracle", not problems, detail)


def validate(
    index, documents: Sequence[tuple[str, list]], trials: int = 10_000, seed: int = 0
) -> ValidationReport:
    """Run all three suites; ``documents`` holds ``(name, strings)`` per indexed document."""
    rng = np.random.default_rng(seed)
    corpus = prepare_corpus(index, documents)
    missing = set(index.names) ^ {d.name for d in corpus}
    if missing:
        raise ValueError(f"corpus and index disagree on documents: {sorted(missing)[:5]}")
    fn_trials = min(trials, 1000)
    return ValidationReport([
        check_no_false_negatives(index, corpus, fn_trials, rng),
        check_alien_fpr(index, corpus, trials, rng),
        check_oracle(index, corpus, rng),
    ])
