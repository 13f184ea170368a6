"""Physical operators: scans and duplicate-eliminating projections.

Three interchangeable strategies produce the distinct projection of a
heap file, all within the M-frame budget:

* sort, naive: materialize the projected table (T pages), external-sort
  it on all output attributes, rewrite it dropping adjacent duplicates.
* sort, fused: project while generating runs and drop duplicates inside
  every sorted batch and every merge, skipping the T-page pre-pass
  entirely; same output file, never more temp pages than naive.
* hash: scatter projected tuples into M-1 partitions by a seeded hash
  of their encoding (equal tuples cannot land apart), then deduplicate
  each partition in memory; a partition wider than M-1 pages is
  re-partitioned with a derived seed, at most 3 times.

The sort strategies and the index-leaf strategy emit sorted output; the
hash strategy emits partitions in index order with arrival order inside
each partition, documented as unspecified.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator

from .context import ExecContext
from .errors import ContractViolationError, PathologicalDataError, SchemaError, UsageError
from .heap import HeapFile, TupleWriter, scan_heap
from .schema import Schema
from .sort import (SortKey, external_sort, generate_runs_from_stream, merge_runs)

MAX_HASH_DEPTH = 4
_MASK64 = (1 << 64) - 1
_SEED_STEP = 0x9E3779B97F4A7C15

_NONE = object()


@dataclass(frozen=True)
class ProjectionSpec:
    """Ordered attribute subset to keep; the output schema derives from it."""

    attrs: tuple[str, ...]

    def __post_init__(self):
        if not self.attrs:
            raise SchemaError("projection needs at least one attribute")
        if len(set(self.attrs)) != len(self.attrs):
            raise SchemaError(f"repeated attribute in projection {list(self.attrs)}")

    def bind(self, schema: Schema) -> tuple[tuple[int, ...], Schema]:
        positions = tuple(schema.index_of(a) for a in self.attrs)
        return positions, schema.project(self.attrs)


def seq_scan(ctx: ExecContext, heap: HeapFile) -> Iterator[tuple]:
    """Every tuple in storage order; sequential requests, so read-ahead applies."""
    return scan_heap(ctx.pool, heap, sequential=True)


def project_stream(tuples: Iterator[tuple], positions: tuple[int, ...]) -> Iterator[tuple]:
    """Attribute restriction only; cardinality (and duplicates) preserved."""
    for t in tuples:
        yield tuple(t[p] for p in positions)


def dedup_adjacent(tuples: Iterator[tuple]) -> Iterator[tuple]:
    """First occurrence of each distinct tuple from a fully sorted stream."""
    last = _NONE
    for t in tuples:
        if last is not _NONE:
            if t < last:
                raise ContractViolationError(
                    "dedup input not sorted: adjacent inversion")
            if t == last:
                continue
        last = t
        yield t


def materialize(ctx: ExecContext, tuples: Iterator[tuple], schema: Schema,
                tag: str = "mat") -> HeapFile:
    """Write a stream into a fresh temp heap the caller owns."""
    out = ctx.make_temp(schema, tag)
    with TupleWriter(out, ctx.pool) as w:
        for t in tuples:
            w.append(t)
    return out


# -- projection by sorting ------------------------------------------------------

def project_sort_naive(ctx: ExecContext, heap: HeapFile, spec: ProjectionSpec,
                       m: int | None = None) -> HeapFile:
    """Three separate steps: project to a T-page temp, sort it, dedup-rewrite."""
    positions, out_schema = spec.bind(heap.schema)
    with ctx.stats.stage("naive:project"):
        projected = materialize(
            ctx, project_stream(seq_scan(ctx, heap), positions), out_schema, "proj")
    sorted_heap = external_sort(ctx, projected, stage_prefix="naive:sort", m=m)
    ctx.drop_temp(projected)
    with ctx.stats.stage("naive:dedup"):
        out = materialize(
            ctx, dedup_adjacent(scan_heap(ctx.pool, sorted_heap)), out_schema, "distinct")
    ctx.drop_temp(sorted_heap)
    return out


def project_sort_fused(ctx: ExecContext, heap: HeapFile, spec: ProjectionSpec,
                       m: int | None = None) -> HeapFile:
    """Projection folded into the sort: runs hold projected tuples already
    deduplicated, and every merge drops a tuple equal to the last emitted.

    Runs are batched by output pages (m of them), the geometry the naive
    strategy gets from sorting its materialized T-page temp, so the fused
    strategy never writes more temp pages than the naive one.
    """
    positions, out_schema = spec.bind(heap.schema)
    key = SortKey(out_schema)
    with ctx.stats.stage("fused:runs"):
        runs = generate_runs_from_stream(
            ctx, project_stream(seq_scan(ctx, heap), positions), out_schema, key,
            dedup=True, m=m)
    if len(runs) == 1:
        return runs[0]
    return merge_runs(ctx, runs, out_schema, key, dedup=True, stage_prefix="fused")


# -- projection by hashing --------------------------------------------------------

def partition_of(encoded: bytes, seed: int, nparts: int) -> int:
    """Map a tuple encoding to a partition number in 1..nparts."""
    key = (seed & _MASK64).to_bytes(8, "little")
    h = int.from_bytes(hashlib.blake2b(encoded, digest_size=8, key=key).digest(),
                       "little")
    return 1 + h % nparts


def derive_seed(seed: int, depth: int) -> int:
    return (seed ^ (depth * _SEED_STEP)) & _MASK64


def hash_partition(ctx: ExecContext, heap: HeapFile, spec: ProjectionSpec,
                   seed: int, m: int | None = None) -> list[HeapFile]:
    """Phase 1: one input frame, m-1 single-page accumulators, m-1 temp files.

    Every projected tuple goes to partition partition_of(encoding); equal
    tuples therefore always share a partition, whatever the seed.
    """
    m = ctx.config.buffers if m is None else m
    positions, out_schema = spec.bind(heap.schema)
    parts = [ctx.make_temp(out_schema, f"part{i + 1}") for i in range(m - 1)]
    writers = [TupleWriter(p, ctx.pool) for p in parts]
    try:
        for t in project_stream(seq_scan(ctx, heap), positions):
            n = partition_of(out_schema.encode_tuple(t), seed, m - 1)
            writers[n - 1].append(t)
    finally:
        for w in writers:
            w.close()
    return parts


def project_hash(ctx: ExecContext, heap: HeapFile, spec: ProjectionSpec,
                 seed: int | None = None, m: int | None = None) -> HeapFile:
    """Partition, then deduplicate each partition independently in memory."""
    m_eff = ctx.config.buffers if m is None else m
    seed = ctx.seed if seed is None else seed
    _, out_schema = spec.bind(heap.schema)
    with ctx.stats.stage("hash:partition"):
        parts = hash_partition(ctx, heap, spec, seed, m=m)
    identity = ProjectionSpec(out_schema.names)
    with ctx.stats.stage("hash:dedup"):
        out = ctx.make_temp(out_schema, "distinct")
        with TupleWriter(out, ctx.pool) as w:
            for part in parts:
                _dedup_partition(ctx, part, w, identity, seed, m_eff, 1)
    return out


def _dedup_partition(ctx: ExecContext, part: HeapFile, w: TupleWriter,
                     identity: ProjectionSpec, seed: int, m: int, depth: int) -> None:
    if part.page_count <= m - 1:
        seen = set()
        for t in scan_heap(ctx.pool, part, sequential=False):
            if t not in seen:
                seen.add(t)
                w.append(t)
        ctx.drop_temp(part)
        return
    if depth >= MAX_HASH_DEPTH:
        raise PathologicalDataError(
            f"partition of {part.page_count} pages still exceeds {m - 1} pages "
            f"after {depth} levels of hashing; data is constant or adversarial")
    sub_seed = derive_seed(seed, depth)
    subs = hash_partition(ctx, part, identity, sub_seed, m=m)
    ctx.drop_temp(part)
    for s in subs:
        _dedup_partition(ctx, s, w, identity, sub_seed, m, depth + 1)


# -- projection from index leaves ----------------------------------------------------

def project_via_index(ctx: ExecContext, idx: HeapFile, prefix_len: int) -> HeapFile:
    """Walk sorted index leaves, keep the key prefix, drop adjacent duplicates.

    Never touches the base heap file: the dense leaves already hold every
    key value in sorted order.
    """
    from .index import ADDRESS_ATTRS

    key_arity = len(idx.schema.attrs) - len(ADDRESS_ATTRS)
    if not 1 <= prefix_len <= key_arity:
        raise UsageError(
            f"prefix length {prefix_len} outside 1..{key_arity} for this index")
    out_schema = Schema(idx.schema.attrs[:prefix_len])
    out = ctx.make_temp(out_schema, "ixproj")
    last = _NONE
    with ctx.stats.stage("via_index:leaves"), TupleWriter(out, ctx.pool) as w:
        for entry in scan_heap(ctx.pool, idx, sequential=True):
            p = entry[:prefix_len]
            if p != last:
                last = p
                w.append(p)
    return out
