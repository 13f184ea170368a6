"""Engine configuration."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UsageError

DEFAULT_PAGE_SIZE = 4096
DEFAULT_EXTENT_LENGTH = 8
DEFAULT_BUFFERS = 8
MIN_BUFFERS = 3
MIN_PAGE_SIZE = 512


def validate_geometry(page_size: int, extent_length: int) -> None:
    if page_size < MIN_PAGE_SIZE or page_size & (page_size - 1):
        raise UsageError(
            f"page_size must be a power of two >= {MIN_PAGE_SIZE}, got {page_size}")
    if extent_length < 1:
        raise UsageError(f"extent_length must be >= 1, got {extent_length}")


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for one execution.

    ``buffers`` is the frame budget every operator must respect.
    ``readahead_window`` is the number of extra pages fetched after a
    sequential read; None means "rest of the extent" (extent_length - 1),
    0 disables read-ahead.
    """

    buffers: int = DEFAULT_BUFFERS
    page_size: int = DEFAULT_PAGE_SIZE
    extent_length: int = DEFAULT_EXTENT_LENGTH
    readahead_window: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.buffers < MIN_BUFFERS:
            raise UsageError(f"buffers must be >= {MIN_BUFFERS}, got {self.buffers}")
        validate_geometry(self.page_size, self.extent_length)
        if self.readahead_window is not None and self.readahead_window < 0:
            raise UsageError("readahead_window must be >= 0")

    def effective_window(self, extent_length: int) -> int:
        if self.readahead_window is None:
            return extent_length - 1
        return self.readahead_window
