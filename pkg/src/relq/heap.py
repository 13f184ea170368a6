"""Heap files: schema-typed paged files holding tuples in insertion order."""

from __future__ import annotations

from typing import Iterator, NamedTuple

from .errors import AddressError
from .pagefile import PAGE_HEADER_SIZE, PagedFile, decode_page, pack_page, page_tuple_count
from .schema import Schema


class Rid(NamedTuple):
    page_id: int
    slot: int


class HeapFile(PagedFile):
    """A PagedFile whose pages hold fixed-width tuples of one schema.

    Appends fill the current page completely before opening the next, so
    every page except the last holds exactly tuples_per_page tuples and
    page_count == ceil(tuple_count / tuples_per_page).
    """

    def __init__(self, path: str, schema: Schema, page_size: int, extent_length: int):
        super().__init__(path, page_size, extent_length)
        from .pagefile import tuples_per_page

        self.schema = schema
        self.tuples_per_page = tuples_per_page(schema, page_size)

    @classmethod
    def create(cls, path: str, schema: Schema, page_size: int, extent_length: int) -> "HeapFile":
        with open(path, "wb"):
            pass
        return cls(path, schema, page_size, extent_length)

    def page_tuples(self, page_id: int) -> list[tuple]:
        """Direct (unpooled, unaccounted) page read; bulk paths go via the pool."""
        return decode_page(self.schema, self.read_pages(page_id, 1))

    def append_tuple(self, t: tuple) -> Rid:
        """Append one tuple, extending or replacing the last partial page.

        Direct I/O for loaders and tests; execution-time writes go through
        TupleWriter so whole pages hit the disk once.
        """
        encoded = self.schema.encode_tuple(t)
        if self.page_count:
            last = bytearray(self.read_pages(self.page_count - 1, 1))
            count = page_tuple_count(last)
            if count < self.tuples_per_page:
                off = PAGE_HEADER_SIZE + count * self.schema.width
                last[off : off + len(encoded)] = encoded
                last[0:2] = (count + 1).to_bytes(2, "little")
                self.write_page(self.page_count - 1, bytes(last))
                return Rid(self.page_count - 1, count)
        self.append_pages(pack_page([encoded], self.page_size))
        return Rid(self.page_count - 1, 0)

    def tuple_count(self) -> int:
        if not self.page_count:
            return 0
        last = page_tuple_count(self.read_pages(self.page_count - 1, 1))
        return (self.page_count - 1) * self.tuples_per_page + last

    def scan_direct(self) -> Iterator[tuple]:
        """Unpooled full scan, used by loaders and oracles."""
        for pid in range(self.page_count):
            yield from self.page_tuples(pid)


def scan_heap(pool, heap: HeapFile, *, sequential: bool = True) -> Iterator[tuple]:
    """Full scan through the buffer pool, one pinned page at a time.

    Sequential mode lets the pool read ahead within each extent; the page
    is unpinned before its tuples are yielded, so a consumer that blocks
    never holds more than transient pins.
    """
    for pid in range(heap.page_count):
        with pool.get_page(heap, pid, sequential=sequential) as page:
            tuples = decode_page(heap.schema, page)
        yield from tuples


def fetch_by_rid(pool, heap: HeapFile, rid: Rid) -> tuple:
    """Fetch one tuple by address through the buffer pool (random mode)."""
    if rid.page_id < 0 or rid.page_id >= heap.page_count:
        raise AddressError(f"page {rid.page_id} outside 0..{heap.page_count}")
    with pool.get_page(heap, rid.page_id) as page:
        count = page_tuple_count(page)
        if rid.slot < 0 or rid.slot >= count:
            raise AddressError(f"slot {rid.slot} outside page {rid.page_id} (count {count})")
        return heap.schema.decode_tuple(page, PAGE_HEADER_SIZE + rid.slot * heap.schema.width)


class TupleWriter:
    """Buffers encoded tuples and emits full pages as they fill.

    With a pool the pages are appended through flush_temp (counted as
    temporary I/O); without one they are written directly, for ingestion
    and index construction which run outside an execution.
    """

    def __init__(self, heap: HeapFile, pool=None):
        self.heap = heap
        self.pool = pool
        self._pending: list[bytes] = []
        self._next_rid = Rid(heap.page_count, 0)

    def append(self, t: tuple) -> Rid:
        rid = self._next_rid
        self._pending.append(self.heap.schema.encode_tuple(t))
        if len(self._pending) == self.heap.tuples_per_page:
            self._emit()
            self._next_rid = Rid(rid.page_id + 1, 0)
        else:
            self._next_rid = Rid(rid.page_id, rid.slot + 1)
        return rid

    def _emit(self) -> None:
        page = pack_page(self._pending, self.heap.page_size)
        if self.pool is not None:
            self.pool.flush_temp(self.heap, [page])
        else:
            self.heap.append_pages(page)
        self._pending = []

    def close(self) -> None:
        if self._pending:
            self._emit()

    def __enter__(self) -> "TupleWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
