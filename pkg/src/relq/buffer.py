"""Buffer pool: M page frames, read-ahead, and exact I/O accounting.

All execution-time page reads flow through one pool of at most
``capacity`` frames.  Replacement is least-recently-unpinned; a pinned
frame is never evicted.  In sequential mode a cold read also fetches up
to ``window`` following pages of the same extent in the same request
("read the rest of the extent"); prefetched pages arrive unpinned so
they never consume the requesting operator's pin budget.  Prefetching
stops early at the extent boundary, at end of file, at an already
resident page, and when making room would require evicting a pinned
frame.

Temporary-file writes are write-through: flush_temp appends whole pages
straight to the file without caching them, so a later pass re-reading a
run is a cold, counted read.
"""

from __future__ import annotations

from collections import Counter, OrderedDict
from contextlib import contextmanager
from dataclasses import dataclass, field

from .errors import AddressError, PoolExhaustedError, UsageError
from .pagefile import PagedFile

MIN_CAPACITY = 3


@dataclass
class IoStats:
    """Execution-wide I/O counters; all monotonically non-decreasing.

    The serialized block carries exactly the five page counters plus the
    sort counters; reads_by_file and stage marks are in-memory detail for
    tests and the JSON report.
    """

    page_reads: int = 0
    page_writes: int = 0
    read_requests: int = 0
    readahead_pages: int = 0
    temp_pages_written: int = 0
    runs_created: int = 0
    merge_passes: int = 0
    reads_by_file: Counter = field(default_factory=Counter)
    stage_marks: list = field(default_factory=list)
    current_step: str | None = None

    _COUNTERS = ("page_reads", "page_writes", "read_requests", "readahead_pages",
                 "temp_pages_written")

    def snapshot(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in self._COUNTERS}

    def as_dict(self) -> dict[str, int]:
        return self.snapshot()

    @contextmanager
    def stage(self, label: str):
        """Record the counter deltas of one named stage of an operator."""
        before = self.snapshot()
        yield
        delta = {k: getattr(self, k) - before[k] for k in self._COUNTERS}
        self.stage_marks.append({"step": self.current_step, "label": label, **delta})


class _Frame:
    __slots__ = ("data", "pin_count")

    def __init__(self, data: bytes):
        self.data = data
        self.pin_count = 0


class PageHandle:
    """A pinned page.  Close (or leave a with-block) to unpin."""

    __slots__ = ("_pool", "key", "_frame", "_open")

    def __init__(self, pool: BufferPool, key: tuple[str, int], frame: _Frame):
        self._pool = pool
        self.key = key
        self._frame = frame
        self._open = True

    @property
    def data(self) -> bytes:
        return self._frame.data

    def close(self) -> None:
        if not self._open:
            raise UsageError(f"page {self.key} already unpinned")
        self._open = False
        self._pool._unpin(self.key, self._frame)

    def __enter__(self) -> bytes:
        return self._frame.data

    def __exit__(self, *exc) -> None:
        self.close()


class BufferPool:
    def __init__(self, capacity: int, readahead_window: int | None = None,
                 stats: IoStats | None = None):
        if capacity < MIN_CAPACITY:
            raise UsageError(f"pool capacity must be >= {MIN_CAPACITY}, got {capacity}")
        self.capacity = capacity
        self.readahead_window = readahead_window
        self.stats = stats if stats is not None else IoStats()
        self._frames: dict[tuple[str, int], _Frame] = {}
        # unpinned residents in least-recently-unpinned order (front = victim)
        self._evictable: OrderedDict[tuple[str, int], _Frame] = OrderedDict()
        self.pinned_frames = 0
        self.peak_pinned = 0

    # -- pinning -----------------------------------------------------------

    def get_page(self, f: PagedFile, page_id: int, *, sequential: bool = False) -> PageHandle:
        if page_id < 0 or page_id >= f.page_count:
            raise AddressError(f"{f.file_id}: page {page_id} outside 0..{f.page_count - 1}")
        key = (f.file_id, page_id)
        frame = self._frames.get(key)
        if frame is not None:
            if frame.pin_count == 0:
                del self._evictable[key]
            self._pin(frame)
            return PageHandle(self, key, frame)
        return self._miss(f, page_id, sequential)

    def _miss(self, f: PagedFile, page_id: int, sequential: bool) -> PageHandle:
        free = self.capacity - len(self._frames)
        if free == 0:
            if not self._evict_lru():
                raise PoolExhaustedError(
                    f"all {self.capacity} frames pinned; an operator exceeded its budget")
            free = 1

        window = 0
        if sequential:
            window = self.readahead_window
            if window is None:
                window = f.extent_length - 1
        limit = min(f.extent_end(page_id), f.page_count, page_id + 1 + window)
        batch = [page_id]
        for q in range(page_id + 1, limit):
            if (f.file_id, q) in self._frames:
                break
            if len(batch) + 1 > free:
                if not self._evict_lru():
                    break
                free += 1
            batch.append(q)

        data = f.read_pages(page_id, len(batch))
        st = self.stats
        st.read_requests += 1
        st.page_reads += len(batch)
        st.readahead_pages += len(batch) - 1
        st.reads_by_file[f.file_id] += len(batch)

        ps = f.page_size
        first = _Frame(data[:ps])
        self._install(f.file_id, page_id, first)
        self._pin(first)
        for i, q in enumerate(batch[1:], start=1):
            fr = _Frame(data[i * ps:(i + 1) * ps])
            self._install(f.file_id, q, fr)
            self._evictable[(f.file_id, q)] = fr
        return PageHandle(self, (f.file_id, page_id), first)

    def _install(self, file_id: str, page_id: int, frame: _Frame) -> None:
        assert len(self._frames) < self.capacity, "no reserved slot for install"
        self._frames[(file_id, page_id)] = frame

    def _evict_lru(self) -> bool:
        if not self._evictable:
            return False
        key, frame = self._evictable.popitem(last=False)
        assert frame.pin_count == 0, "evicting a pinned frame"
        del self._frames[key]
        return True

    def _pin(self, frame: _Frame) -> None:
        frame.pin_count += 1
        if frame.pin_count == 1:
            self.pinned_frames += 1
            if self.pinned_frames > self.peak_pinned:
                self.peak_pinned = self.pinned_frames

    def _unpin(self, key: tuple[str, int], frame: _Frame) -> None:
        if frame.pin_count <= 0:
            raise UsageError(f"unpin below zero for page {key}")
        frame.pin_count -= 1
        if frame.pin_count == 0:
            self.pinned_frames -= 1
            if self._frames.get(key) is frame:
                self._evictable[key] = frame

    # -- temporary writes ----------------------------------------------------

    def flush_temp(self, f: PagedFile, pages: list[bytes]) -> None:
        """Append whole pages to a temporary file, write-through."""
        if not pages:
            return
        f.append_pages(b"".join(pages))
        self.stats.page_writes += len(pages)
        self.stats.temp_pages_written += len(pages)

    # -- lifecycle -------------------------------------------------------------

    def invalidate(self, file_id: str) -> None:
        """Drop resident frames of a deleted file; none may be pinned."""
        for key in [k for k in self._frames if k[0] == file_id]:
            if self._frames[key].pin_count:
                raise UsageError(f"invalidate of pinned page {key}")
            self._evictable.pop(key, None)
            del self._frames[key]

    @property
    def resident(self) -> int:
        return len(self._frames)
