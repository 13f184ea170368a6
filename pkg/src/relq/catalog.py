"""On-disk database directory: heap files plus a JSON catalog.

Layout::

    <root>/catalog.meta     geometry and the relation/index registry
    <root>/<name>.heap      one paged heap file per relation
    <root>/<name>.idx       one paged file per index (sorted leaf pages)
    <root>/tmp/             scratch space for runs and partitions

Page size and extent length are fixed when the database is created and
recorded in catalog.meta; opening with conflicting values is an error,
since existing files would be unreadable under different geometry.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .config import DEFAULT_EXTENT_LENGTH, DEFAULT_PAGE_SIZE, validate_geometry
from .errors import StorageError, UsageError
from .heap import HeapFile
from .schema import Schema, _NAME_RE

META_NAME = "catalog.meta"


class Database:
    def __init__(self, root: str | os.PathLike, *, page_size: int | None = None,
                 extent_length: int | None = None, create: bool = False):
        self.root = Path(root)
        self._open_files: dict[str, HeapFile] = {}
        meta_path = self.root / META_NAME
        if meta_path.exists():
            self._load(meta_path)
            for label, asked, actual in (("page size", page_size, self.page_size),
                                         ("extent length", extent_length, self.extent_length)):
                if asked is not None and asked != actual:
                    raise UsageError(
                        f"database was created with {label} {actual}, not {asked}")
        elif create:
            self.page_size = page_size if page_size is not None else DEFAULT_PAGE_SIZE
            self.extent_length = extent_length if extent_length is not None else DEFAULT_EXTENT_LENGTH
            validate_geometry(self.page_size, self.extent_length)
            self.relations: dict[str, dict] = {}
            self.indexes: dict[str, dict] = {}
            self.root.mkdir(parents=True, exist_ok=True)
            self._save()
        else:
            raise StorageError(f"no database at {self.root} (missing {META_NAME})")

    def _load(self, meta_path: Path) -> None:
        try:
            meta = json.loads(meta_path.read_text("utf-8"))
            self.page_size = int(meta["page_size"])
            self.extent_length = int(meta["extent_length"])
            self.relations = dict(meta.get("relations", {}))
            self.indexes = dict(meta.get("indexes", {}))
        except (OSError, ValueError, KeyError) as e:
            raise StorageError(f"unreadable catalog at {meta_path}: {e}") from e

    def _save(self) -> None:
        meta = {
            "page_size": self.page_size,
            "extent_length": self.extent_length,
            "relations": self.relations,
            "indexes": self.indexes,
        }
        (self.root / META_NAME).write_text(json.dumps(meta, indent=2) + "\n", "utf-8")

    # -- relations -----------------------------------------------------------

    def create_relation(self, name: str, schema: Schema) -> HeapFile:
        self._check_new_name(name)
        hf = HeapFile.create(self.root / f"{name}.heap", schema,
                             page_size=self.page_size, extent_length=self.extent_length)
        self.relations[name] = {"file": f"{name}.heap", "schema": schema.type_string(),
                                "pages": 0, "tuples": 0}
        self._save()
        self._open_files[name] = hf
        return hf

    def set_relation_stats(self, name: str, pages: int, tuples: int) -> None:
        self.relations[name].update(pages=pages, tuples=tuples)
        self._save()

    def open_relation(self, name: str) -> HeapFile:
        if name not in self.relations:
            raise UsageError(f"no relation named {name!r}")
        if name not in self._open_files:
            entry = self.relations[name]
            self._open_files[name] = HeapFile(
                self.root / entry["file"], Schema.parse(entry["schema"]),
                page_size=self.page_size, extent_length=self.extent_length)
        return self._open_files[name]

    # -- indexes ---------------------------------------------------------------

    def register_index(self, relation: str, keys: list[str] | tuple[str, ...],
                       pages: int, entries: int) -> str:
        """Record a built index; its name is ``<relation>.<key>+<key>``."""
        if relation not in self.relations:
            raise UsageError(f"no relation named {relation!r}")
        name = f"{relation}.{'+'.join(keys)}"
        if name in self.indexes:
            raise UsageError(f"index {name!r} already exists")
        self.indexes[name] = {"file": f"{name}.idx", "relation": relation,
                              "keys": list(keys), "pages": pages, "entries": entries}
        self._save()
        return name

    def index_path(self, relation: str, keys: list[str] | tuple[str, ...]) -> Path:
        return self.root / f"{relation}.{'+'.join(keys)}.idx"

    def open_index(self, name: str) -> tuple[HeapFile, dict]:
        from .index import index_schema  # deferred: index imports catalog-adjacent types

        if name not in self.indexes:
            raise UsageError(f"no index named {name!r}")
        entry = self.indexes[name]
        key = "idx:" + name
        if key not in self._open_files:
            base = self.open_relation(entry["relation"])
            schema = index_schema(base.schema, entry["keys"])
            self._open_files[key] = HeapFile(
                self.root / entry["file"], schema,
                page_size=self.page_size, extent_length=self.extent_length)
        return self._open_files[key], entry

    # -- misc ----------------------------------------------------------------------

    def _check_new_name(self, name: str) -> None:
        if not _NAME_RE.fullmatch(name):
            raise UsageError(f"invalid name {name!r}")
        if name in self.relations or name in self.indexes:
            raise UsageError(f"name {name!r} already in use")

    @property
    def tmp_dir(self) -> Path:
        return self.root / "tmp"

    def close(self) -> None:
        for hf in self._open_files.values():
            hf.close()
        self._open_files.clear()

    def __enter__(self) -> Database:
        return self

    def __exit__(self, *exc) -> None:
        self.close()
