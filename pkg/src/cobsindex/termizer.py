"""Documents and query patterns to distinct q-gram sets, and q-grams to rows."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import xxhash
from numpy.lib.stride_tricks import sliding_window_view

from ._xxh64 import xxh64_rows

HASH_XXH64 = 0
HASH_SCHEMES = {HASH_XXH64: "xxh64"}

FASTA_EXTENSIONS = frozenset({".fa", ".fasta", ".fna"})

_COMPLEMENT = np.arange(256, dtype=np.uint8)
for _a, _b in (b"AT", b"TA", b"CG", b"GC"):
    _COMPLEMENT[_a] = _b
_IS_ACGT = np.zeros(256, dtype=bool)
_IS_ACGT[list(b"ACGT")] = True
_REVCOMP_TABLE = str.maketrans("ACGT", "TGCA")


@dataclass(frozen=True)
class IndexParams:
    """Build parameters shared by every document of an index."""

    q: int = 31
    k: int = 1
    p: float = 0.3
    canonical: bool = False
    block_size: int = 1024
    hash_scheme: int = HASH_XXH64

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if self.block_size < 1:
            raise ValueError(f"block size must be >= 1, got {self.block_size}")
        if self.hash_scheme not in HASH_SCHEMES:
            raise ValueError(f"unknown hash scheme {self.hash_scheme}")


@dataclass(eq=False)
class TermSet:
    """Distinct q-grams of one document, held as a sorted ``(n, q)`` byte matrix.

    ``skipped`` counts gram occurrences dropped by canonicalization because
    they contained a character outside ``ACGT``.
    """

    name: str
    grams: np.ndarray
    skipped: int = 0
    _hash_cache: dict = field(default_factory=dict, repr=False)

    @property
    def q(self) -> int:
        return self.grams.shape[1]

    @property
    def term_count(self) -> int:
        return self.grams.shape[0]

    def __len__(self) -> int:
        return self.grams.shape[0]

    @property
    def terms(self) -> set[bytes]:
        return {bytes(row) for row in self.grams}

    def __contains__(self, term: bytes) -> bool:
        if len(term) != self.q:
            return False
        row = np.frombuffer(term, dtype=np.uint8)
        i = np.searchsorted(_as_void(self.grams), _as_void(row[None, :])[0])
        return i < len(self) and bytes(self.grams[i]) == bytes(term)

    def hashes(self, k: int) -> np.ndarray:
        """``(k, n)`` array of 64-bit hashes, row ``i`` under seed ``i``."""
        out = np.empty((k, len(self)), dtype=np.uint64)
        for seed in range(k):
            h = self._hash_cache.get(seed)
            if h is None:
                h = xxh64_rows(self.grams, seed)
                self._hash_cache[seed] = h
            out[seed] = h
        return out


def _as_void(grams: np.ndarray) -> np.ndarray:
    grams = np.ascontiguousarray(grams, dtype=np.uint8)
    return grams.view(np.dtype((np.void, grams.shape[1]))).ravel()


def _unique_rows(grams: np.ndarray, q: int) -> np.ndarray:
    if grams.shape[0] == 0:
        return np.zeros((0, q), dtype=np.uint8)
    uniq = np.unique(_as_void(grams))
    return uniq.view(np.uint8).reshape(-1, q)


def _to_bytes(s: str | bytes) -> bytes:
    return s.encode("utf-8") if isinstance(s, str) else bytes(s)


def canonicalize(grams: np.ndarray) -> np.ndarray:
    """Replace each ACGT row by the lexicographic minimum of it and its reverse complement."""
    if grams.shape[0] == 0:
        return grams
    rc = _COMPLEMENT[grams[:, ::-1]]
    differs = grams != rc
    first = differs.argmax(axis=1)
    rows = np.arange(grams.shape[0])
    take_rc = rc[rows, first] < grams[rows, first]
    return np.where(take_rc[:, None], rc, grams)


def extract_terms(
    content: Iterable[str | bytes], q: int, canonical: bool = False, name: str = ""
) -> TermSet:
    """Distinct q-grams of every string in ``content``; grams never span strings."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    parts = []
    skipped = 0
    for s in content:
        data = np.frombuffer(_to_bytes(s), dtype=np.uint8)
        if data.shape[0] < q:
            continue
        win = sliding_window_view(data, q)
        if canonical:
            bad = np.concatenate(([0], np.cumsum(~_IS_ACGT[data])))
            ok = (bad[q:] - bad[:-q]) == 0
            skipped += int(win.shape[0] - ok.sum())
            win = canonicalize(win[ok])
        parts.append(np.ascontiguousarray(win))
    grams = np.concatenate(parts) if parts else np.zeros((0, q), dtype=np.uint8)
    return TermSet(name=name, grams=_unique_rows(grams, q), skipped=skipped)


def revcomp(s: str) -> str:
    """Reverse complement of a DNA string over ``ACGT``."""
    if s.strip("ACGT"):
        bad = sorted(set(s) - set("ACGT"))
        raise ValueError(f"not a DNA string over ACGT: unexpected {bad!r}")
    return s.translate(_REVCOMP_TABLE)[::-1]


def hash_rows(term: bytes, k: int, w: int, hash_scheme: int = HASH_XXH64) -> list[int]:
    """Rows ``xxh64(term, seed=i) mod w`` for seeds ``0..k-1``."""
    if w < 1:
        raise ValueError(f"w must be >= 1, got {w}")
    if hash_scheme != HASH_XXH64:
        raise ValueError(f"unknown hash scheme {hash_scheme}")
    term = _to_bytes(term)
    return [xxhash.xxh64_intdigest(term, seed=i) % w for i in range(k)]


# -- document input ---------------------------------------------------------


def read_fasta(text: str) -> list[str]:
    """Sequences of a FASTA file, one uppercased string per record."""
    records: list[str] = []
    current: list[str] | None = None
    for line in text.splitlines():
        if line.startswith(">"):
            if current is not None:
                records.append("".join(current))
            current = []
        else:
            if current is None:
                current = []
            current.append(line.strip().upper())
    if current is not None:
        records.append("".join(current))
    return records


def read_fasta_records(text: str) -> list[tuple[str, str]]:
    """``(header, sequence)`` pairs, header without the leading ``>``."""
    out: list[tuple[str, str]] = []
    header = None
    seq: list[str] = []
    for line in text.splitlines():
        if line.startswith(">"):
            if header is not None:
                out.append((header, "".join(seq)))
            header, seq = line[1:].strip(), []
        elif header is not None:
            seq.append(line.strip().upper())
    if header is not None:
        out.append((header, "".join(seq)))
    return out


def detect_format(path: str | os.PathLike) -> str:
    return "fasta" if Path(path).suffix.lower() in FASTA_EXTENSIONS else "text"


def read_document(path: str | os.PathLike, fmt: str | None = None) -> list[str | bytes]:
    """Strings of one document file; ``fmt`` is ``"fasta"``, ``"text"`` or None to guess.

    Text documents are taken as raw bytes so q-grams are byte-exact.
    """
    fmt = fmt or detect_format(path)
    raw = Path(path).read_bytes()
    if fmt == "fasta":
        return [r.encode("latin-1") for r in read_fasta(raw.decode("latin-1"))]
    if fmt == "text":
        return [raw]
    raise ValueError(f"unknown document format {fmt!r}")


def document_name(path: str | os.PathLike) -> str:
    return Path(path).stem


def load_document(
    path: str | os.PathLike, q: int, canonical: bool = False, fmt: str | None = None
) -> TermSet:
    return extract_terms(read_document(path, fmt), q, canonical, name=document_name(path))


def expand_inputs(paths: Sequence[str | os.PathLike]) -> list[Path]:
    """Files named directly, plus every file below named directories, in sorted order."""
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(f for f in p.rglob("*") if f.is_file()))
        else:
            out.append(p)
    return out
