"""Command line front end: ``build``, ``query``, ``stats``, ``validate`` and ``plan``.

Results go to stdout, progress and timings to stderr. Exit codes:
0 success, 1 usage error, 2 data or format error, 3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .bloom_math import fpr_approx, fpr_exact, optimal_parameters, query_fpr, size_filter
from .classic import build_classic
from .compact import build_compact, index_footprint
from .query import QueryError, QueryOptions, query, query_batch
from .storage import IndexFormatError, open_index, write_index
from .termizer import (
    IndexParams,
    detect_format,
    document_name,
    expand_inputs,
    extract_terms,
    read_document,
    read_fasta_records,
)
from .validate import validate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VALIDATION = 0, 1, 2, 3

# Patterns read per batch in --file mode.
_BATCH = 4096


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_workers() -> int:
    env = os.environ.get("COBS_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"COBS_WORKERS must be an integer, got {env!r}") from None
        if n < 1:
            raise UsageError("COBS_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_corpus(paths, fmt):
    files = expand_inputs(paths)
    if not files:
        raise UsageError("no input documents found")
    docs = []
    for f in files:
        try:
            docs.append((document_name(f), read_document(f, fmt)))
        except OSError as e:
            raise OSError(f"cannot read {f}: {e.strerror or e}") from e
    return docs


def _check_range(args):
    if getattr(args, "q", 1) < 1:
        raise UsageError("-q must be >= 1")
    k = getattr(args, "k", 1)
    if k is not None and k < 1:
        raise UsageError("-k must be >= 1")
    if not 0.0 < getattr(args, "p", 0.5) < 1.0:
        raise UsageError("-p must lie in (0, 1)")
    if getattr(args, "block_size", 1) < 1:
        raise UsageError("-B must be >= 1")
    if not 0.0 < getattr(args, "threshold", 0.5) <= 1.0:
        raise UsageError("-K must lie in (0, 1]")
    top = getattr(args, "top", None)
    if top is not None and top < 1:
        raise UsageError("--top must be >= 1")
    if getattr(args, "trials", 1) < 1:
        raise UsageError("--trials must be >= 1")


def cmd_build(args) -> int:
    params = IndexParams(q=args.q, k=args.k, p=args.p, canonical=args.canonical,
                         block_size=args.block_size)
    workers = args.workers or default_workers()
    t0 = time.perf_counter()
    raw = _load_corpus(args.inputs, args.format)
    names = [n for n, _ in raw]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate document names: {', '.join(dup[:5])}")
    documents = [extract_terms(strings, params.q, params.canonical, name) for name, strings in raw]
    t1 = time.perf_counter()
    _log(f"read {len(documents)} documents, {sum(map(len, documents))} terms in {t1 - t0:.3f}s")
    skipped = sum(d.skipped for d in documents)
    if skipped:
        _log(f"skipped {skipped} q-grams with non-ACGT characters")

    if args.mode == "classic":
        index = build_classic(documents, params, workers=workers)
    else:
        index = build_compact(documents, params, workers=workers)
    t2 = time.perf_counter()
    _log(f"built {args.mode} index with {len(index.blocks)} block(s) in {t2 - t1:.3f}s")
    write_index(index, args.output)
    t3 = time.perf_counter()
    _log(f"wrote {args.output} ({index_footprint(index)} payload bytes) in {t3 - t2:.3f}s")
    return EXIT_OK


def _query_batches(args):
    if args.file:
        text = Path(args.file).read_text(encoding="latin-1")
        if detect_format(args.file) == "fasta" or text.lstrip().startswith(">"):
            return read_fasta_records(text), True
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        return [(f"q{i}", ln) for i, ln in enumerate(lines)], True
    if args.pattern is None:
        raise UsageError("give a pattern or --file")
    return [("query", args.pattern)], False


def cmd_query(args) -> int:
    opts = QueryOptions(K=args.threshold, top_t=args.top)
    workers = args.workers or 1
    batch, labelled = _query_batches(args)
    out = sys.stdout
    failed = 0
    with open_index(args.index, args.memory) as index:
        if not labelled:
            try:
                hits = query(index, args.pattern, opts, workers=workers)
            except QueryError as e:
                _log(f"query: {e}")
                return EXIT_DATA
            ell = len(extract_terms([args.pattern], index.params.q, index.params.canonical))
            for h in hits:
                out.write(f"{h.doc_name}\t{h.score}\t{ell}\n")
        for lo in range(0, len(batch), _BATCH) if labelled else ():
            chunk = batch[lo:lo + _BATCH]
            results = query_batch(index, [p for _, p in chunk], opts, workers=workers)
            for (name, _), (ell, hits) in zip(chunk, results):
                if isinstance(hits, QueryError):
                    failed += 1
                    _log(f"{name}: {hits}")
                    hits = []
                out.write(f"*{name}\t{len(hits)}\n")
                for h in hits:
                    out.write(f"{h.doc_name}\t{h.score}\t{ell}\n")
        if args.memory == "random-access":
            _log(f"read {index.bytes_read} payload bytes")
    if failed:
        _log(f"{failed} of {len(batch)} queries yielded no q-grams")
    return EXIT_OK


def block_stats(index) -> list[dict]:
    p, k = index.params.p, index.params.k
    rows = []
    for i, b in enumerate(index.blocks):
        largest = int(max(b.term_counts)) if b.num_docs else 0
        rows.append({
            "block": i,
            "doc_count": b.num_docs,
            "w": b.w,
            "max_terms": largest,
            "fill": largest / b.w,
            "predicted_fpr": fpr_approx(b.w, k, largest),
        })
    return rows


def cmd_stats(args) -> int:
    with open_index(args.index) as index:
        params = index.params
        info = {
            "kind": "classic" if index.kind == 0 else "compact",
            "q": params.q, "k": params.k, "p": params.p,
            "canonical": params.canonical, "block_size": params.block_size,
            "hash_scheme": params.hash_scheme,
            "documents": index.num_docs,
            "footprint": index_footprint(index),
            "blocks": block_stats(index),
        }
    if args.json:
        print(json.dumps(info, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"kind\t{info['kind']}")
    for key in ("q", "k", "p", "canonical", "block_size", "documents", "footprint"):
        print(f"{key}\t{info[key]}")
    print("block\tdoc_count\tw\tmax_terms\tfill\tpredicted_fpr")
    for r in info["blocks"]:
        print(f"{r['block']}\t{r['doc_count']}\t{r['w']}\t{r['max_terms']}\t"
              f"{r['fill']:.4f}\t{r['predicted_fpr']:.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    corpus = _load_corpus(args.corpus, args.format)
    with open_index(args.index, args.memory) as index:
        report = validate(index, corpus, trials=args.trials, seed=args.seed)
    for suite in report.suites:
        print(f"{'PASS' if suite.passed else 'FAIL'}\t{suite.name}\t{suite.detail}")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_plan(args) -> int:
    if args.terms < 0:
        raise UsageError("--terms must be >= 0")
    if args.k is None:
        w, k = optimal_parameters(args.terms, args.p)
    else:
        k = args.k
        w = size_filter(args.terms, args.p, k)
    print(f"terms\t{args.terms}")
    print(f"k\t{k}")
    print(f"w\t{w}")
    print(f"fpr_approx\t{fpr_approx(w, k, args.terms):.6g}")
    print(f"fpr_exact\t{fpr_exact(w, k, args.terms):.6g}")
    if args.ell is not None:
        if args.ell < 1:
            raise UsageError("--ell must be >= 1")
        print(f"query_fpr\t{query_fpr(args.ell, args.threshold, args.p):.6g}")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cobs", description="Compact bit-sliced signature index.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="build an index from documents")
    b.add_argument("inputs", nargs="+", help="document files or directories")
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--mode", choices=("compact", "classic"), default="compact")
    b.add_argument("-q", type=int, default=31, help="q-gram length")
    b.add_argument("-k", type=int, default=1, help="hash functions")
    b.add_argument("-p", type=float, default=0.3, help="target false-positive rate")
    b.add_argument("-B", "--block-size", type=int, default=1024)
    b.add_argument("--canonical", action="store_true", help="merge reverse complements")
    b.add_argument("--format", choices=("fasta", "text"), default=None,
                   help="override detection by file extension")
    b.add_argument("--workers", type=int, default=None)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="search an index")
    q.add_argument("index")
    q.add_argument("pattern", nargs="?")
    q.add_argument("-f", "--file", help="FASTA (or one pattern per line) query file")
    q.add_argument("-K", "--threshold", type=float, default=0.9)
    q.add_argument("-t", "--top", type=int, default=None)
    q.add_argument("--memory", choices=("resident", "random-access"), default="resident")
    q.add_argument("--workers", type=int, default=None)
    q.set_defaults(func=cmd_query)

    s = sub.add_parser("stats", help="describe an index")
    s.add_argument("index")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_stats)

    v = sub.add_parser("validate", help="check an index against its corpus")
    v.add_argument("index")
    v.add_argument("corpus", nargs="+")
    v.add_argument("--trials", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--format", choices=("fasta", "text"), default=None)
    v.add_argument("--memory", choices=("resident", "random-access"), default="resident")
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plan", help="size a filter and predict query false positives")
    pl.add_argument("-n", "--terms", type=int, required=True, help="distinct terms per document")
    pl.add_argument("-p", type=float, default=0.3, help="target false-positive rate")
    pl.add_argument("-k", type=int, default=None, help="hash functions (default: optimal)")
    pl.add_argument("--ell", type=int, default=None, help="distinct q-grams per query")
    pl.add_argument("-K", "--threshold", type=float, default=0.9)
    pl.set_defaults(func=cmd_plan)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        _check_range(args)
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except UsageError as e:
        _log(f"cobs: error: {e}")
        return EXIT_USAGE
    except (IndexFormatError, OSError, ValueError) as e:
        _log(f"cobs: error: {e}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
