"""Page codec and raw page-granular file I/O.

Page layout (page_size bytes):

  [0:2]   tuple count, uint16 little-endian
  [2:4]   reserved, zero
  [4:..]  tuples, fixed width schema.width each, back to back
  rest    zero padding

A file is the raw concatenation of page_size-byte pages.  Pages are
grouped into extents of extent_length contiguous pages: page p belongs
to extent p // extent_length, so the byte offset of any page is simply
p * page_size and extents are contiguous by construction.  Read-ahead
never crosses an extent boundary.
"""

from __future__ import annotations

import os
import struct

from .errors import AddressError, StorageError, UnsupportedTupleError
from .schema import Schema

PAGE_HEADER_SIZE = 4
_HEADER = struct.Struct("<HH")


def tuples_per_page(schema: Schema, page_size: int) -> int:
    tpp = (page_size - PAGE_HEADER_SIZE) // schema.width
    if tpp < 1:
        raise UnsupportedTupleError(
            f"tuple width {schema.width} does not fit a {page_size}-byte page"
        )
    return tpp


def pack_page(encoded: list[bytes], page_size: int) -> bytes:
    body = b"".join(encoded)
    if PAGE_HEADER_SIZE + len(body) > page_size:
        raise UnsupportedTupleError("tuples overflow the page")
    return _HEADER.pack(len(encoded), 0) + body + b"\x00" * (
        page_size - PAGE_HEADER_SIZE - len(body)
    )


def page_tuple_count(page: bytes | memoryview) -> int:
    count, _ = _HEADER.unpack_from(page, 0)
    return count


def decode_page(schema: Schema, page: bytes | memoryview) -> list[tuple]:
    count = page_tuple_count(page)
    if PAGE_HEADER_SIZE + count * schema.width > len(page):
        raise StorageError(f"slot count {count} overflows the page")
    return [
        schema.decode_tuple(page, PAGE_HEADER_SIZE + i * schema.width) for i in range(count)
    ]


class PagedFile:
    """A file addressed in fixed-size pages with a lazily opened handle."""

    def __init__(self, path: str, page_size: int, extent_length: int):
        self.path = str(path)
        self.page_size = page_size
        self.extent_length = extent_length
        self.file_id = self.path
        self._fh = None
        self.page_count = 0
        if os.path.exists(self.path):
            size = os.path.getsize(self.path)
            if size % page_size:
                raise StorageError(f"{self.path}: size {size} is not a page multiple")
            self.page_count = size // page_size

    @classmethod
    def create(cls, path: str, page_size: int, extent_length: int) -> "PagedFile":
        with open(path, "wb"):
            pass
        return cls(path, page_size, extent_length)

    def _handle(self):
        if self._fh is None:
            try:
                self._fh = open(self.path, "r+b")
            except FileNotFoundError:
                raise StorageError(f"{self.path}: file does not exist") from None
        return self._fh

    def read_pages(self, start: int, count: int) -> bytes:
        if start < 0 or count < 1 or start + count > self.page_count:
            raise AddressError(
                f"{self.path}: pages [{start}, {start + count}) outside 0..{self.page_count}"
            )
        fh = self._handle()
        fh.seek(start * self.page_size)
        data = fh.read(count * self.page_size)
        if len(data) != count * self.page_size:
            raise StorageError(f"{self.path}: short read at page {start}")
        return data

    def append_pages(self, data: bytes) -> None:
        if len(data) % self.page_size:
            raise StorageError("append must be a whole number of pages")
        fh = self._handle()
        fh.seek(self.page_count * self.page_size)
        fh.write(data)
        fh.flush()
        self.page_count += len(data) // self.page_size

    def write_page(self, page_id: int, data: bytes) -> None:
        if page_id < 0 or page_id > self.page_count:
            raise AddressError(f"{self.path}: page {page_id} outside 0..{self.page_count}")
        if len(data) != self.page_size:
            raise StorageError("page write must be exactly one page")
        fh = self._handle()
        fh.seek(page_id * self.page_size)
        fh.write(data)
        fh.flush()
        if page_id == self.page_count:
            self.page_count += 1

    def extent_of(self, page_id: int) -> int:
        return page_id // self.extent_length

    def extent_end(self, page_id: int) -> int:
        """First page id past the extent containing page_id."""
        return (self.extent_of(page_id) + 1) * self.extent_length

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def delete(self) -> None:
        self.close()
        if os.path.exists(self.path):
            os.remove(self.path)
