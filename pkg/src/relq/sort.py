"""External merge sort under an M-frame budget.

Phase 1 reads M pages at a time, sorts them in memory, and writes each
batch out as one run, so a B-page input yields ceil(B/M) runs of at
most M pages each.  Phase 2 merges runs two at a time, left to right,
carrying an odd run into the next pass unchanged; the run count halves
(rounded up) per pass, giving exactly ceil(log2 R) passes.  Runs are
write-through temporaries, deleted as soon as both consumers of a merge
have finished with them.

The in-memory sort is a quicksort: median-of-three pivot, Hoare
partitioning, an explicit segment stack instead of recursion, and
insertion sort below a small cutoff.  No stability is promised; ties
may land in either order.

Merging trusts its inputs to be sorted and verifies that trust: an
adjacent inversion inside a run raises ContractViolationError rather
than producing silently unsorted output.
"""

from __future__ import annotations

from typing import Callable, Iterator

from .context import ExecContext
from .errors import ContractViolationError
from .heap import HeapFile, TupleWriter
from .pagefile import decode_page, tuples_per_page
from .schema import Schema

INSERTION_CUTOFF = 16

_EOF = object()
_NONE = object()


class SortKey:
    """Ordering over tuples by a subset of attributes, schema order by default."""

    def __init__(self, schema: Schema, attr_names: list[str] | tuple[str, ...] | None = None):
        if attr_names is None:
            self.positions = tuple(range(len(schema.attrs)))
        else:
            self.positions = tuple(schema.index_of(n) for n in attr_names)
        self.attr_names = tuple(schema.names[p] for p in self.positions)
        if self.positions == tuple(range(len(schema.attrs))):
            self.func: Callable[[tuple], tuple] = _identity
        else:
            self.func = _selector(self.positions)


def _identity(t: tuple) -> tuple:
    return t


def _selector(positions: tuple[int, ...]) -> Callable[[tuple], tuple]:
    def pick(t: tuple) -> tuple:
        return tuple(t[p] for p in positions)
    return pick


# -- in-memory sort ----------------------------------------------------------

def quicksort(items: list, keyf: Callable[[tuple], tuple] = _identity) -> None:
    """In-place sort; iterative, smaller partition first, bounded stack."""
    stack = [(0, len(items) - 1)]
    while stack:
        lo, hi = stack.pop()
        while hi - lo + 1 > INSERTION_CUTOFF:
            j = _hoare_partition(items, lo, hi, keyf)
            # keep the smaller side in the loop, defer the larger one
            if j - lo < hi - j:
                stack.append((j + 1, hi))
                hi = j
            else:
                stack.append((lo, j))
                lo = j + 1
        _insertion_sort(items, lo, hi, keyf)


def _hoare_partition(a: list, lo: int, hi: int, keyf) -> int:
    mid = (lo + hi) // 2
    k0, k1, k2 = keyf(a[lo]), keyf(a[mid]), keyf(a[hi])
    # median of the three sampled keys becomes the pivot value
    if k1 < k0:
        k0, k1 = k1, k0
    if k2 < k1:
        k1 = k2 if k0 <= k2 else k0
    pivot = k1
    i, j = lo - 1, hi + 1
    while True:
        i += 1
        while keyf(a[i]) < pivot:
            i += 1
        j -= 1
        while keyf(a[j]) > pivot:
            j -= 1
        if i >= j:
            return j
        a[i], a[j] = a[j], a[i]


def _insertion_sort(a: list, lo: int, hi: int, keyf) -> None:
    for i in range(lo + 1, hi + 1):
        v = a[i]
        kv = keyf(v)
        j = i - 1
        while j >= lo and keyf(a[j]) > kv:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


# -- phase 1: run generation --------------------------------------------------

def generate_runs(ctx: ExecContext, heap: HeapFile, key: SortKey,
                  m: int | None = None) -> list[HeapFile]:
    """Sort m-page batches of ``heap`` into runs; pins all batch pages at once."""
    runs: list[HeapFile] = []
    m = ctx.config.buffers if m is None else m
    pid = 0
    while pid < heap.page_count:
        n = min(m, heap.page_count - pid)
        handles = [ctx.pool.get_page(heap, pid + i, sequential=True) for i in range(n)]
        batch: list[tuple] = []
        for h in handles:
            batch.extend(decode_page(heap.schema, h.data))
        quicksort(batch, key.func)
        for h in handles:
            h.close()
        runs.append(_write_run(ctx, heap.schema, batch, len(runs)))
        pid += n
    return runs


def generate_runs_from_stream(ctx: ExecContext, tuples: Iterator[tuple], schema: Schema,
                              key: SortKey, *, dedup: bool = False,
                              m: int | None = None) -> list[HeapFile]:
    """Phase 1 over produced tuples: each run holds m output pages' worth.

    Batching by output pages keeps the run geometry of sorting a
    materialized copy of the stream.  With dedup, adjacent duplicates
    inside the sorted batch are dropped before the run is written.
    """
    m = ctx.config.buffers if m is None else m
    per_run = m * tuples_per_page(schema, ctx.config.page_size)
    runs: list[HeapFile] = []
    batch: list[tuple] = []
    for t in tuples:
        batch.append(t)
        if len(batch) == per_run:
            runs.append(_write_run(ctx, schema, batch, len(runs), key=key, dedup=dedup))
            batch = []
    if batch:
        runs.append(_write_run(ctx, schema, batch, len(runs), key=key, dedup=dedup))
    return runs


def _write_run(ctx: ExecContext, schema: Schema, batch: list[tuple], seq: int,
               key: SortKey | None = None, dedup: bool = False) -> HeapFile:
    if key is not None:
        quicksort(batch, key.func)
    run = ctx.make_temp(schema, f"run{seq}")
    with TupleWriter(run, ctx.pool) as w:
        last = _NONE
        for t in batch:
            if dedup:
                if t == last:
                    continue
                last = t
            w.append(t)
    ctx.stats.runs_created += 1
    return run


# -- phase 2: merging -----------------------------------------------------------

def _run_tuples(ctx: ExecContext, run: HeapFile, keyf) -> Iterator[tuple]:
    """Stream a run in order, verifying sortedness as it goes."""
    prev_key = _NONE
    for pid in range(run.page_count):
        with ctx.pool.get_page(run, pid) as page:
            tuples = decode_page(run.schema, page)
        for t in tuples:
            k = keyf(t)
            if prev_key is not _NONE and prev_key > k:
                raise ContractViolationError(
                    f"merge input {run.file_id} not sorted: adjacent inversion")
            prev_key = k
            yield t


def merge_two(ctx: ExecContext, a: HeapFile, b: HeapFile, key: SortKey,
              *, dedup: bool = False) -> HeapFile:
    """Two-run merge with one input buffer each plus the output buffer."""
    out = ctx.make_temp(a.schema, "merge")
    keyf = key.func
    ia = _run_tuples(ctx, a, keyf)
    ib = _run_tuples(ctx, b, keyf)
    last = _NONE
    with TupleWriter(out, ctx.pool) as w:
        ta = next(ia, _EOF)
        tb = next(ib, _EOF)
        while ta is not _EOF or tb is not _EOF:
            if tb is _EOF or (ta is not _EOF and keyf(ta) <= keyf(tb)):
                t, ta = ta, next(ia, _EOF)
            else:
                t, tb = tb, next(ib, _EOF)
            if dedup:
                if t == last:
                    continue
                last = t
            w.append(t)
    return out


def merge_runs(ctx: ExecContext, runs: list[HeapFile], schema: Schema, key: SortKey,
               *, dedup: bool = False, stage_prefix: str = "sort") -> HeapFile:
    """Pairwise passes until one run remains; returns the surviving temp file."""
    if not runs:
        return ctx.make_temp(schema, "sorted")
    pass_no = 0
    while len(runs) > 1:
        pass_no += 1
        with ctx.stats.stage(f"{stage_prefix}:pass{pass_no}"):
            nxt: list[HeapFile] = []
            i = 0
            while i + 1 < len(runs):
                merged = merge_two(ctx, runs[i], runs[i + 1], key, dedup=dedup)
                ctx.drop_temp(runs[i])
                ctx.drop_temp(runs[i + 1])
                nxt.append(merged)
                i += 2
            if i < len(runs):
                nxt.append(runs[i])
            runs = nxt
        ctx.stats.merge_passes += 1
    return runs[0]


def external_sort(ctx: ExecContext, heap: HeapFile,
                  attr_names: list[str] | tuple[str, ...] | None = None,
                  *, stage_prefix: str = "sort", m: int | None = None) -> HeapFile:
    """Sort ``heap`` into a temp file; the caller owns (and drops) the result."""
    key = SortKey(heap.schema, attr_names)
    with ctx.stats.stage(f"{stage_prefix}:runs"):
        runs = generate_runs(ctx, heap, key, m=m)
    return merge_runs(ctx, runs, heap.schema, key, stage_prefix=stage_prefix)
