#!/usr/bin/env python3
"""Measured page-I/O behaviour of the storage and operator layers.

Three experiments, each printing one table:

  readahead    read requests and page reads for a cold sequential scan
               as the read-ahead window grows
  sort         runs, merge passes, and temp traffic as the sort budget
               varies over a fixed input
  projection   temp pages and total I/O for the four duplicate
               eliminating projection strategies on the same input

Everything runs against scratch files under --workdir (a fresh temp
directory by default), so the script is safe to re-run anywhere.
"""

from __future__ import annotations

import argparse
import random
import tempfile
from pathlib import Path

from relq.buffer import BufferPool
from relq.config import EngineConfig
from relq.context import ExecContext
from relq.heap import HeapFile, TupleWriter, scan_heap
from relq.index import build_index
from relq.operators import (ProjectionSpec, project_hash, project_sort_fused,
                            project_sort_naive, project_via_index)
from relq.schema import Schema
from relq.sort import SortKey, generate_runs, merge_runs

PAGE_SIZE = 512
EXTENT = 8


def make_ctx(root: Path, name: str, **cfg) -> ExecContext:
    cfg.setdefault("page_size", PAGE_SIZE)
    cfg.setdefault("extent_length", EXTENT)
    config = EngineConfig(**cfg)
    tmp = root / name
    tmp.mkdir(parents=True, exist_ok=True)
    return ExecContext(config, tmp)


def build_table(path: Path, schema: Schema, rows) -> HeapFile:
    heap = HeapFile.create(str(path), schema, PAGE_SIZE, EXTENT)
    with TupleWriter(heap) as w:
        for t in rows:
            w.append(t)
    return heap


def predicted_requests(pages: int, extent: int, window: int) -> int:
    # one request serves the demand page plus up to `window` followers,
    # never crossing an extent boundary
    total = 0
    for start in range(0, pages, extent):
        span = min(extent, pages - start)
        total += -(-span // (window + 1))
    return total


def row(cells, widths):
    print("  ".join(str(c).rjust(w) for c, w in zip(cells, widths)))


def experiment_readahead(root: Path, pages: int) -> None:
    schema = Schema.parse("k:int,pad:str100")
    tpp = (PAGE_SIZE - 4) // schema.width
    table = build_table(root / "ra.heap", schema,
                        ((i, f"p{i:04d}") for i in range(pages * tpp)))
    print(f"\ncold sequential scan of {pages} pages, extent length {EXTENT}")
    widths = (8, 10, 10, 11, 10)
    row(("window", "requests", "predicted", "readahead", "reads"), widths)
    for window in (0, 1, 2, 3, 7, None):
        pool = BufferPool(EXTENT + 2, window)
        for _ in scan_heap(pool, table):
            pass
        st = pool.stats
        eff = EXTENT - 1 if window is None else window
        row((f"{window}", st.read_requests, predicted_requests(pages, EXTENT, eff),
             st.readahead_pages, st.page_reads), widths)


def experiment_sort(root: Path, pages: int, rng: random.Random) -> None:
    schema = Schema.parse("k:int,pad:str100")
    tpp = (PAGE_SIZE - 4) // schema.width
    n = pages * tpp
    table = build_table(root / "sort.heap", schema,
                        ((rng.randrange(10 * n), f"p{rng.randrange(10_000):04d}")
                         for _ in range(n)))
    print(f"\nexternal sort of {pages} pages ({n} tuples) under varying budgets")
    widths = (3, 6, 10, 8, 10, 11, 11)
    row(("m", "runs", "pred runs", "passes", "pred pass", "temp wrts", "page reads"),
        widths)
    for m in (3, 4, 5, 6, 8):
        ctx = make_ctx(root, f"sort-m{m}", buffers=m)
        key = SortKey(schema)
        runs = generate_runs(ctx, table, key, m=m)
        out = merge_runs(ctx, runs, schema, key)
        st = ctx.stats
        pred_runs = -(-pages // m)
        pred_passes = (pred_runs - 1).bit_length() if pred_runs else 0
        row((m, st.runs_created, pred_runs, st.merge_passes, pred_passes,
             st.temp_pages_written, st.page_reads), widths)
        ctx.drop_temp(out)
        ctx.cleanup()


def experiment_projection(root: Path, n_rows: int, rng: random.Random) -> None:
    schema = Schema.parse("a:int,b:str40,c:int,d:str40")
    rows = [(rng.randrange(40), f"b{rng.randrange(8)}",
             rng.randrange(3), f"d{rng.randrange(8)}") for _ in range(n_rows)]
    table = build_table(root / "proj.heap", schema, rows)
    spec = ProjectionSpec(("a", "c"))
    idx = build_index(table, ("a", "c"), root / "proj.idx")
    print(f"\ndistinct (a, c) over {n_rows} rows / {table.page_count} pages, m = 4")
    print("(index build cost excluded; the entry file already exists)")
    widths = (10, 10, 11, 11, 12)
    row(("strategy", "out rows", "temp wrts", "page reads", "page writes"), widths)
    runs = [
        ("naive", lambda ctx: project_sort_naive(ctx, table, spec, m=4)),
        ("fused", lambda ctx: project_sort_fused(ctx, table, spec, m=4)),
        ("hash", lambda ctx: project_hash(ctx, table, spec, m=4)),
        ("index", lambda ctx: project_via_index(ctx, idx, 2)),
    ]
    for name, run in runs:
        ctx = make_ctx(root, f"proj-{name}", buffers=8)
        out = run(ctx)
        got = list(out.scan_direct())
        st = ctx.stats
        row((name, len(got), st.temp_pages_written, st.page_reads, st.page_writes),
            widths)
        ctx.drop_temp(out)
        ctx.cleanup()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("which", nargs="?", default="all",
                    choices=("readahead", "sort", "projection", "all"))
    ap.add_argument("--pages", type=int, default=64,
                    help="heap size for the scan and sort experiments")
    ap.add_argument("--rows", type=int, default=600,
                    help="row count for the projection experiment")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workdir", type=Path, default=None,
                    help="scratch directory (default: a fresh temp dir)")
    args = ap.parse_args(argv)

    rng = random.Random(args.seed)
    with tempfile.TemporaryDirectory() as td:
        root = args.workdir or Path(td)
        root.mkdir(parents=True, exist_ok=True)
        if args.which in ("readahead", "all"):
            experiment_readahead(root, args.pages)
        if args.which in ("sort", "all"):
            experiment_sort(root, args.pages, rng)
        if args.which in ("projection", "all"):
            experiment_projection(root, args.rows, rng)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
