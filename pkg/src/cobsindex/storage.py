"""On-disk index format and the two readers.

Layout (all integers little-endian; see FORMAT.md for a worked example)::

    header      magic "COBSIDX1", version u8, kind u8, hash_scheme u8,
                flags u8 (bit 0: canonical), q u32, k u32, p f64,
                block_size u32, num_blocks u32
    blocks      per block: doc_count u32, w u64, then per document
                name_len u16, name (UTF-8), term_count u64
    order       per stored document: input position u32
    offsets     per block: absolute payload offset u64
    payload     per block: w rows of ceil(doc_count / 8) bytes

A classic index is written as a one-block file of kind 0.
"""

from __future__ import annotations

import mmap
import os
import struct
from pathlib import Path

import numpy as np

from .classic import ClassicIndex, row_bytes
from .compact import CompactIndex
from .termizer import HASH_SCHEMES, IndexParams

MAGIC = b"COBSIDX1"
VERSION = 1
KIND_CLASSIC = 0
KIND_COMPACT = 1

_HEADER = struct.Struct("<8sBBBBIIdII")
_BLOCK = struct.Struct("<IQ")
_NAME_LEN = struct.Struct("<H")
_TERM_COUNT = struct.Struct("<Q")


class IndexFormatError(ValueError):
    pass


def _encode(index: ClassicIndex | CompactIndex) -> tuple[bytes, list[np.ndarray]]:
    params = index.params
    if isinstance(index, CompactIndex):
        kind, blocks, order = KIND_COMPACT, index.blocks, index.order
    elif isinstance(index, ClassicIndex):
        kind, blocks, order = KIND_CLASSIC, [index], np.arange(index.num_docs)
    else:
        raise TypeError(f"cannot serialize {type(index).__name__}")

    parts = [
        _HEADER.pack(
            MAGIC, VERSION, kind, params.hash_scheme, int(params.canonical),
            params.q, params.k, params.p, params.block_size, len(blocks),
        )
    ]
    for block in blocks:
        parts.append(_BLOCK.pack(block.num_docs, block.w))
        for name, count in zip(block.names, block.term_counts):
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"document name too long: {name[:40]!r}...")
            parts += [_NAME_LEN.pack(len(raw)), raw, _TERM_COUNT.pack(int(count))]
    parts.append(np.asarray(order, dtype="<u4").tobytes())

    head = b"".join(parts)
    offset = len(head) + 8 * len(blocks)
    offsets = []
    for block in blocks:
        offsets.append(offset)
        offset += block.w * block.row_bytes
    head += np.asarray(offsets, dtype="<u8").tobytes()
    return head, [np.ascontiguousarray(b.matrix, dtype=np.uint8) for b in blocks]


def write_index(index: ClassicIndex | CompactIndex, path: str | os.PathLike) -> None:
    head, payloads = _encode(index)
    try:
        with open(path, "wb") as f:
            f.write(head)
            for m in payloads:
                f.write(m.tobytes())
    except OSError as e:
        raise OSError(f"cannot write index {path}: {e}") from e


def index_bytes(index: ClassicIndex | CompactIndex) -> bytes:
    head, payloads = _encode(index)
    return head + b"".join(m.tobytes() for m in payloads)


# -- reading ----------------------------------------------------------------


class _Cursor:
    def __init__(self, buf, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, fmt: struct.Struct):
        end = self.pos + fmt.size
        if end > len(self.buf):
            raise IndexFormatError(f"{self.path}: truncated header")
        out = fmt.unpack_from(self.buf, self.pos)
        self.pos = end
        return out

    def raw(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.buf):
            raise IndexFormatError(f"{self.path}: truncated header")
        out = bytes(self.buf[self.pos : end])
        self.pos = end
        return out


def _parse_header(buf, path):
    cur = _Cursor(buf, path)
    magic, version, kind, scheme, flags, q, k, p, bsize, nblocks = cur.take(_HEADER)
    if magic != MAGIC:
        raise IndexFormatError(f"{path}: not an index file (bad magic {magic!r})")
    if version != VERSION:
        raise IndexFormatError(f"{path}: unsupported format version {version}")
    if kind not in (KIND_CLASSIC, KIND_COMPACT):
        raise IndexFormatError(f"{path}: unknown index kind {kind}")
    if scheme not in HASH_SCHEMES:
        raise IndexFormatError(f"{path}: unknown hash scheme {scheme}")
    if kind == KIND_CLASSIC and nblocks != 1:
        raise IndexFormatError(f"{path}: classic index must have one block, has {nblocks}")
    try:
        params = IndexParams(q=q, k=k, p=p, canonical=bool(flags & 1),
                             block_size=bsize, hash_scheme=scheme)
    except ValueError as e:
        raise IndexFormatError(f"{path}: {e}") from e

    tables = []
    for _ in range(nblocks):
        count, w = cur.take(_BLOCK)
        if w < 1:
            raise IndexFormatError(f"{path}: block width must be positive")
        names, counts = [], []
        for _ in range(count):
            (n,) = cur.take(_NAME_LEN)
            try:
                names.append(cur.raw(n).decode("utf-8"))
            except UnicodeDecodeError:
                raise IndexFormatError(f"{path}: document name is not UTF-8") from None
            counts.append(cur.take(_TERM_COUNT)[0])
        tables.append((w, names, counts))
    total = sum(len(t[1]) for t in tables)
    order = np.frombuffer(cur.raw(4 * total), dtype="<u4").astype(np.int64)
    offsets = np.frombuffer(cur.raw(8 * nblocks), dtype="<u8").astype(np.int64)
    if not np.array_equal(np.sort(order), np.arange(total)):
        raise IndexFormatError(f"{path}: document order is not a permutation")

    expected = cur.pos
    for (w, names, _), off in zip(tables, offsets):
        if off != expected:
            raise IndexFormatError(f"{path}: block offset {off} does not follow layout")
        expected += w * row_bytes(len(names))
    if expected != len(buf):
        raise IndexFormatError(
            f"{path}: file holds {len(buf)} bytes, layout needs {expected} (truncated or padded)"
        )
    return kind, params, tables, order, offsets


class BlockView:
    """One block of an opened index; rows come from a shared byte buffer."""

    def __init__(self, reader, w, names, term_counts, offset):
        self._reader = reader
        self.w = w
        self.names = names
        self.term_counts = np.asarray(term_counts, dtype=np.uint64)
        self.offset = offset
        self.row_bytes = row_bytes(len(names))

    @property
    def num_docs(self) -> int:
        return len(self.names)

    @property
    def matrix(self) -> np.ndarray:
        return self._reader._matrix(self)

    def read_rows(self, rows: np.ndarray) -> np.ndarray:
        return self._reader._read_rows(self, np.asarray(rows, dtype=np.intp))


class IndexReader:
    """Base for opened index files; immutable after open."""

    mode = ""

    def __init__(self, path, buf):
        self.path = Path(path)
        kind, params, tables, order, offsets = _parse_header(buf, self.path)
        self.kind = kind
        self.params = params
        self.order = order
        self.blocks = [
            BlockView(self, w, names, counts, int(off))
            for (w, names, counts), off in zip(tables, offsets)
        ]
        self.bytes_read = 0

    @property
    def num_docs(self) -> int:
        return sum(b.num_docs for b in self.blocks)

    @property
    def names(self) -> list[str]:
        return [n for b in self.blocks for n in b.names]

    def _matrix(self, block: BlockView) -> np.ndarray:
        start = block.offset
        size = block.w * block.row_bytes
        return np.frombuffer(self._buf, dtype=np.uint8, count=size, offset=start).reshape(
            block.w, block.row_bytes
        )

    def _read_rows(self, block: BlockView, rows: np.ndarray) -> np.ndarray:
        return self._matrix(block)[rows]

    def to_index(self) -> ClassicIndex | CompactIndex:
        """Copy the file contents into an in-memory index object."""
        classics = [
            ClassicIndex(self.params, b.w, list(b.names), b.term_counts.copy(),
                         np.array(self._matrix(b)))
            for b in self.blocks
        ]
        if self.kind == KIND_CLASSIC:
            return classics[0]
        return CompactIndex(self.params, classics, self.order.copy())

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ResidentReader(IndexReader):
    """Whole file loaded into memory at open."""

    mode = "resident"

    def __init__(self, path):
        try:
            buf = Path(path).read_bytes()
        except OSError as e:
            raise OSError(f"cannot read index {path}: {e}") from e
        self._buf = buf
        super().__init__(path, buf)


class RandomAccessReader(IndexReader):
    """File mapped into memory; a query touches only the rows it asks for.

    ``bytes_read`` accumulates the payload bytes copied out of the mapping.
    """

    mode = "random-access"

    def __init__(self, path):
        try:
            self._file = open(path, "rb")
        except OSError as e:
            raise OSError(f"cannot open index {path}: {e}") from e
        try:
            size = os.fstat(self._file.fileno()).st_size
            self._buf = mmap.mmap(self._file.fileno(), 0, access=mmap.ACCESS_READ) if size else b""
            super().__init__(path, self._buf)
        except BaseException:
            self.close()
            raise

    def _read_rows(self, block: BlockView, rows: np.ndarray) -> np.ndarray:
        rb = block.row_bytes
        out = np.empty((len(rows), rb), dtype=np.uint8)
        base = block.offset
        buf = self._buf
        for i, r in enumerate(rows.tolist()):
            start = base + r * rb
            out[i] = np.frombuffer(buf[start : start + rb], dtype=np.uint8)
        self.bytes_read += len(rows) * rb
        return out

    def _matrix(self, block: BlockView) -> np.ndarray:
        size = block.w * block.row_bytes
        data = self._buf[block.offset : block.offset + size]
        self.bytes_read += size
        return np.frombuffer(data, dtype=np.uint8).reshape(block.w, block.row_bytes)

    def close(self) -> None:
        buf = getattr(self, "_buf", None)
        if isinstance(buf, mmap.mmap):
            try:
                buf.close()
            except BufferError:
                pass
        f = getattr(self, "_file", None)
        if f is not None:
            f.close()


def open_resident(path: str | os.PathLike) -> ResidentReader:
    return ResidentReader(path)


def open_random_access(path: str | os.PathLike) -> RandomAccessReader:
    return RandomAccessReader(path)


def open_index(path: str | os.PathLike, memory: str = "resident") -> IndexReader:
    if memory == "resident":
        return open_resident(path)
    if memory in ("random-access", "mmap"):
        return open_random_access(path)
    raise ValueError(f"unknown memory mode {memory!r}")


def read_index(path: str | os.PathLike) -> ClassicIndex | CompactIndex:
    with open_resident(path) as reader:
        return reader.to_index()
