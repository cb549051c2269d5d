"""Compact bit-sliced signature index for approximate q-gram search."""

from .bloom_math import (
    BloomSpec,
    QuerySpec,
    coverage_threshold,
    fpr_approx,
    fpr_exact,
    match_probability,
    optimal_k,
    optimal_parameters,
    query_fpr,
    query_fpr_chernoff,
    size_filter,
)
from .classic import ClassicIndex, build_classic, merge_classic
from .compact import CompactIndex, build_compact, index_footprint
from .query import (
    QueryError,
    QueryOptions,
    ScoredHit,
    and_rows,
    expand_byte,
    query,
    query_batch,
)
from .storage import (
    IndexFormatError,
    open_index,
    open_random_access,
    open_resident,
    read_index,
    write_index,
)
from .termizer import IndexParams, TermSet, extract_terms, hash_rows, load_document, revcomp

__version__ = "0.1.0"
