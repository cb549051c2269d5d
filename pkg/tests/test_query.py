import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cobsindex import (
    IndexParams,
    QueryError,
    QueryOptions,
    and_rows,
    build_classic,
    build_compact,
    expand_byte,
    query,
)
from cobsindex.query import (
    EXPANSION_TABLE,
    add_expanded,
    document_scores,
    query_batch,
    score_terms,
)
from cobsindex.termizer import TermSet

from conftest import oracle_grams, oracle_scores, random_corpus, random_dna, termsets, widths_of


class TestExpansion:
    @pytest.mark.parametrize("b,counters", [
        (0x00, [0] * 8),
        (0x01, [1, 0, 0, 0, 0, 0, 0, 0]),
        (0x80, [0, 0, 0, 0, 0, 0, 0, 1]),
        (0xFF, [1] * 8),
        (0xA5, [1, 0, 1, 0, 0, 1, 0, 1]),
    ])
    def test_expand_byte(self, b, counters):
        assert expand_byte(b).tolist() == counters

    def test_table_shape(self):
        assert EXPANSION_TABLE.shape == (256, 8)
        assert EXPANSION_TABLE.dtype == np.uint16

    def test_table_add_equals_bit_loop(self):
        rng = np.random.default_rng(3)
        rows = rng.integers(0, 256, size=(10**5, 4), dtype=np.uint8)
        acc = np.zeros((4, 8), dtype=np.uint16)
        add_expanded(rows, acc)
        naive = np.zeros(32, dtype=np.int64)
        for j in range(32):
            naive[j] = ((rows[:, j // 8] >> (j % 8)) & 1).sum()
        assert acc.ravel().tolist() == naive.tolist()

    def test_32_bit_path(self):
        rows = np.full((70_000, 1), 0xFF, dtype=np.uint8)
        acc = np.zeros((1, 8), dtype=np.uint32)
        add_expanded(rows, acc)
        assert acc.ravel().tolist() == [70_000] * 8


class TestAndRows:
    def test_identity_for_one_row(self):
        row = np.array([[0b1011, 0xFF]], dtype=np.uint8)
        assert and_rows(row).tolist() == [0b1011, 0xFF]

    def test_pair(self):
        assert and_rows([[0b1100], [0b1010]]).tolist() == [0b1000]

    @given(st.lists(st.binary(min_size=6, max_size=6), min_size=1, max_size=5))
    def test_per_bit(self, rows):
        got = and_rows([list(r) for r in rows])
        for j in range(6):
            want = 0xFF
            for r in rows:
                want &= r[j]
            assert got[j] == want


class TestQuery:
    @pytest.fixture
    def corpus(self, rng):
        return random_corpus(rng, rng.integers(40, 600, 30), records=2)

    @pytest.mark.parametrize("kind", ["classic", "compact"])
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_scores_equal_column_oracle(self, rng, corpus, kind, k):
        params = IndexParams(q=8, k=k, p=0.3, block_size=7)
        docs = termsets(corpus, params)
        ix = build_classic(docs, params) if kind == "classic" else build_compact(docs, params)
        widths = widths_of(ix)
        patterns = [corpus[i][1][0][5:70] for i in range(0, 30, 4)] + [random_dna(rng, 50)]
        for pattern in patterns:
            want, ell = oracle_scores(corpus, widths, pattern, params)
            assert document_scores(ix, pattern) == want
            hits = query(ix, pattern, QueryOptions(K=0.3))
            expected = sorted(
                ((n, s) for n, s in want.items() if s >= int(np.ceil(0.3 * ell - 1e-9))),
                key=lambda h: (-h[1], h[0]),
            )
            assert [tuple(h) for h in hits] == expected

    def test_source_document_has_full_score(self, rng, corpus):
        params = IndexParams(q=10, k=2, canonical=True)
        ix = build_compact(termsets(corpus, params), params)
        for name, strings in corpus:
            pattern = strings[0][:45]
            if len(pattern) < 10:
                continue
            hits = dict(query(ix, pattern, QueryOptions(K=1.0)))
            assert hits[name] == len(oracle_grams([pattern], 10, True))

    def test_no_false_negatives_at_full_threshold(self, rng, corpus):
        params = IndexParams(q=9, k=1)
        docs = termsets(corpus, params)
        ix = build_compact(docs, params)
        for d, (name, strings) in zip(docs, corpus):
            s = max(strings, key=len)
            if len(s) < 9:
                continue
            start = int(rng.integers(0, len(s) - 9 + 1))
            pattern = s[start:start + 40]
            ell = len(set(pattern[i:i + 9] for i in range(len(pattern) - 8)))
            assert dict(query(ix, pattern, QueryOptions(K=1.0)))[name] == ell

    def test_reverse_complement_query_on_canonical_index(self, rng):
        from cobsindex import revcomp
        corpus = random_corpus(rng, [300, 300, 300])
        params = IndexParams(q=11, canonical=True)
        ix = build_classic(termsets(corpus, params), params)
        pattern = revcomp(corpus[1][1][0][20:80])
        top = query(ix, pattern, QueryOptions(K=1.0))
        assert "doc0001" in dict(top)

    def test_ranking_and_top(self, rng):
        params = IndexParams(q=4, k=1, p=0.1)
        base = random_dna(rng, 80)
        corpus = [("b", [base]), ("a", [base]), ("c", [base[:40]]), ("d", [random_dna(rng, 60)])]
        ix = build_classic(termsets(corpus, params), params)
        hits = query(ix, base, QueryOptions(K=0.01))
        scores = [h.score for h in hits]
        assert scores == sorted(scores, reverse=True)
        assert [h.doc_name for h in hits[:2]] == ["a", "b"]
        assert query(ix, base, QueryOptions(K=0.01, top_t=2)) == hits[:2]

    def test_duplicate_pattern_grams_count_once(self):
        params = IndexParams(q=3)
        ix = build_classic(termsets([("x", ["ABCABCABC"])], params), params)
        (hit,) = query(ix, "ABCABCABCABC", QueryOptions(K=1.0))
        assert hit.score == 3

    def test_pattern_too_short(self):
        params = IndexParams(q=5)
        ix = build_classic(termsets([("x", ["ABCDEFG"])], params), params)
        with pytest.raises(QueryError):
            query(ix, "ABC")

    def test_all_grams_skipped(self):
        params = IndexParams(q=3, canonical=True)
        ix = build_classic(termsets([("x", ["ACGTACGT"])], params), params)
        with pytest.raises(QueryError):
            query(ix, "NNNNNN")

    def test_options_validated(self):
        with pytest.raises(ValueError):
            QueryOptions(K=0.0)
        with pytest.raises(ValueError):
            QueryOptions(K=1.5)
        with pytest.raises(ValueError):
            QueryOptions(top_t=0)

    @pytest.mark.parametrize("workers", [2, 3, 8])
    def test_query_parallelism_is_deterministic(self, rng, workers):
        params = IndexParams(q=8, k=2, block_size=13)
        corpus = random_corpus(rng, rng.integers(20, 300, 90))
        ix = build_compact(termsets(corpus, params), params)
        for name, strings in corpus[:10]:
            pattern = strings[0][:60]
            assert query(ix, pattern, QueryOptions(K=0.2), workers=workers) == query(
                ix, pattern, QueryOptions(K=0.2)
            )

    def test_scores_never_exceed_ell(self, rng, corpus):
        params = IndexParams(q=6, k=1, p=0.5)
        ix = build_compact(termsets(corpus, params), params)
        for _ in range(10):
            pattern = random_dna(rng, 80)
            ell = len(set(pattern[i:i + 6] for i in range(75)))
            assert max(document_scores(ix, pattern).values()) <= ell

    def test_many_terms_use_wide_counters(self, rng):
        params = IndexParams(q=12, k=1, p=0.9)
        ix = build_classic(termsets([("x", [random_dna(rng, 200)])], params), params)
        grams = np.frombuffer(b"ACGT", dtype=np.uint8)[rng.integers(0, 4, size=(70_000, 12))]
        terms = TermSet("many", np.unique(grams.view("V12").ravel()).view(np.uint8).reshape(-1, 12))
        assert len(terms) > 0xFFFF
        (scores,) = score_terms(ix, terms)
        assert scores.dtype == np.uint32
        # brute force over the single column
        col = ix.column(0)
        rows = (terms.hashes(1)[0] % np.uint64(ix.w)).astype(np.int64)
        assert int(scores[0]) == int(col[rows].sum())


class TestBatch:
    @pytest.mark.parametrize("top", [None, 3])
    def test_equals_single_queries(self, rng, top):
        params = IndexParams(q=7, k=2, p=0.4, canonical=True, block_size=6)
        corpus = random_corpus(rng, rng.integers(20, 400, 25))
        ix = build_compact(termsets(corpus, params), params)
        patterns = [random_dna(rng, int(n)) for n in rng.integers(7, 60, 300)]
        patterns += ["NNNNNNNN", "ACG", corpus[2][1][0][:30]]
        opts = QueryOptions(K=0.4, top_t=top)
        for pattern, (ell, hits) in zip(patterns, query_batch(ix, patterns, opts)):
            if ell == 0:
                assert isinstance(hits, QueryError)
                with pytest.raises(QueryError):
                    query(ix, pattern, opts)
            else:
                assert hits == query(ix, pattern, opts)

    def test_large_pattern_falls_back(self, rng, monkeypatch):
        monkeypatch.setattr(sys.modules["cobsindex.query"], "_EXPAND_BUDGET", 64)
        params = IndexParams(q=5, block_size=4)
        corpus = random_corpus(rng, [300] * 9)
        ix = build_compact(termsets(corpus, params), params)
        patterns = [corpus[0][1][0], random_dna(rng, 9), corpus[5][1][0][:12]]
        got = query_batch(ix, patterns, QueryOptions(K=0.5))
        assert [h for _, h in got] == [query(ix, p, QueryOptions(K=0.5)) for p in patterns]
