"""Dense non-clustered index stored as a sorted paged file.

One entry per base tuple: the key attributes followed by the tuple's
address as two int columns, #page and #slot.  Entries are kept sorted
by key with the address as tiebreaker, so scanning the file start to
end ("walking the leaves") yields every key in order, and duplicate
keys sit adjacent.  The '#' prefix keeps the address columns out of the
user attribute namespace; schema strings cannot produce it.
"""

from __future__ import annotations

import os
from typing import Iterator

from .errors import UsageError
from .heap import HeapFile, TupleWriter, scan_heap
from .schema import Attr, IntType, Schema

ADDRESS_ATTRS = (Attr("#page", IntType()), Attr("#slot", IntType()))


def index_schema(base: Schema, keys: list[str] | tuple[str, ...]) -> Schema:
    if not keys:
        raise UsageError("an index needs at least one key attribute")
    if len(set(keys)) != len(keys):
        raise UsageError(f"duplicate key attributes in {list(keys)}")
    attrs = tuple(base.attrs[base.index_of(k)] for k in keys)
    return Schema(attrs + ADDRESS_ATTRS)


def build_index(heap: HeapFile, keys: list[str] | tuple[str, ...],
                path: str | os.PathLike) -> HeapFile:
    """Build the sorted entry file for ``heap`` on ``keys``.

    Construction is a maintenance operation, not a query: entries are
    collected and sorted in memory and written directly, outside any
    buffer pool.  Queries only ever read the finished file.
    """
    schema = index_schema(heap.schema, keys)
    key_pos = [heap.schema.index_of(k) for k in keys]
    entries: list[tuple] = []
    per_page = heap.tuples_per_page
    for i, t in enumerate(heap.scan_direct()):
        addr = (i // per_page, i % per_page)
        entries.append(tuple(t[p] for p in key_pos) + addr)
    entries.sort()
    idx = HeapFile.create(path, schema, page_size=heap.page_size,
                          extent_length=heap.extent_length)
    with TupleWriter(idx) as w:
        for e in entries:
            w.append(e)
    return idx


def leaf_scan(pool, idx: HeapFile) -> Iterator[tuple]:
    """All index entries in key order, read sequentially through the pool."""
    return scan_heap(pool, idx, sequential=True)
