"""Shared execution state: one pool, one stats block, one temp-file space.

Temp files get deterministic names from a per-context counter, so a
repeated run of the same plan touches identical paths.  Deleting a temp
invalidates its pooled frames first; cleanup() sweeps whatever is left,
on success (where it should be a no-op) and on failure alike.
"""

from __future__ import annotations

import os
from pathlib import Path

from .buffer import BufferPool, IoStats
from .config import EngineConfig
from .heap import HeapFile
from .schema import Schema


class TempManager:
    def __init__(self, root: str | os.PathLike, page_size: int, extent_length: int):
        self.root = Path(root)
        self.page_size = page_size
        self.extent_length = extent_length
        self._counter = 0
        self._live: dict[str, HeapFile] = {}

    def create(self, schema: Schema, tag: str) -> HeapFile:
        self.root.mkdir(parents=True, exist_ok=True)
        name = f"t{self._counter:04d}-{tag}.run"
        self._counter += 1
        hf = HeapFile.create(self.root / name, schema,
                             page_size=self.page_size,
                             extent_length=self.extent_length)
        self._live[hf.file_id] = hf
        return hf

    def delete(self, hf: HeapFile) -> None:
        self._live.pop(hf.file_id, None)
        hf.delete()

    def live_files(self) -> list[HeapFile]:
        return list(self._live.values())


class ExecContext:
    def __init__(self, config: EngineConfig, tmp_dir: str | os.PathLike,
                 stats: IoStats | None = None):
        self.config = config
        self.stats = stats if stats is not None else IoStats()
        self.pool = BufferPool(config.buffers, config.readahead_window, self.stats)
        self.temps = TempManager(tmp_dir, config.page_size, config.extent_length)
        self.seed = config.seed

    def make_temp(self, schema: Schema, tag: str) -> HeapFile:
        return self.temps.create(schema, tag)

    def drop_temp(self, hf: HeapFile) -> None:
        self.pool.invalidate(hf.file_id)
        self.temps.delete(hf)

    def cleanup(self) -> None:
        for hf in self.temps.live_files():
            self.drop_temp(hf)
