"""Shared builders and reference oracles for the test suite.

Tables are built with a tiny 512-byte page so page-count laws are cheap
to exercise; schemas below are sized to give a handful of tuples per
page.  Oracles recompute expected values independently of the engine:
python's sorted() for orderings, Counter for multisets, and a direct
reimplementation of the documented partition-placement formula.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from pathlib import Path

import pytest

from relq.config import EngineConfig
from relq.context import ExecContext
from relq.heap import HeapFile, TupleWriter
from relq.schema import Schema

SMALL_PAGE = 512


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def build_heap(path: Path, schema: Schema, rows, page_size: int = SMALL_PAGE,
               extent_length: int = 8) -> HeapFile:
    heap = HeapFile.create(str(path), schema, page_size=page_size,
                           extent_length=extent_length)
    with TupleWriter(heap) as w:
        for t in rows:
            w.append(t)
    return heap


def make_ctx(tmp_path: Path, buffers: int = 8, page_size: int = SMALL_PAGE,
             extent_length: int = 8, readahead_window: int | None = None,
             seed: int = 0) -> ExecContext:
    config = EngineConfig(buffers=buffers, page_size=page_size,
                          extent_length=extent_length,
                          readahead_window=readahead_window, seed=seed)
    return ExecContext(config, tmp_path / "tmp")


@pytest.fixture
def ctx(tmp_path):
    return make_ctx(tmp_path)


# -- synthetic data ------------------------------------------------------------

PAD_SCHEMA = Schema.parse("k:int,pad:str100")      # 4 tuples per 512-byte page
NARROW_SCHEMA = Schema.parse("k:int,v:int")        # 31 tuples per 512-byte page


def pad_rows(n: int, rng: random.Random, key_range: int | None = None):
    """Rows for PAD_SCHEMA with controllable duplicate pressure."""
    kr = key_range if key_range is not None else max(1, n * 2)
    return [(rng.randrange(kr), f"p{rng.randrange(kr):04d}") for _ in range(n)]


def exact_pages_heap(path: Path, pages: int, rng: random.Random,
                     extent_length: int = 8) -> HeapFile:
    """A heap of exactly ``pages`` pages (PAD_SCHEMA, 4 tuples/page)."""
    rows = pad_rows(4 * pages, rng)
    heap = build_heap(path, PAD_SCHEMA, rows, extent_length=extent_length)
    assert heap.page_count == pages
    return heap


def random_schema(rng: random.Random) -> Schema:
    specs = [
        "a:int,b:int",
        "a:int,b:str8,c:int",
        "a:str6,b:int,c:str10,d:int",
        "a:int,b:str4",
    ]
    return Schema.parse(rng.choice(specs))


def random_rows(schema: Schema, n: int, rng: random.Random, key_range: int = 12):
    from relq.schema import IntType

    rows = []
    for _ in range(n):
        vals = []
        for attr in schema.attrs:
            if isinstance(attr.type, IntType):
                vals.append(rng.randrange(key_range))
            else:
                vals.append(f"s{rng.randrange(key_range)}")
        rows.append(tuple(vals))
    return rows


# -- oracles ----------------------------------------------------------------------

def oracle_partition(encoded: bytes, seed: int, nparts: int) -> int:
    """The documented placement rule, recomputed from scratch."""
    key = (seed & ((1 << 64) - 1)).to_bytes(8, "little")
    h = int.from_bytes(hashlib.blake2b(encoded, digest_size=8, key=key).digest(),
                       "little")
    return 1 + h % nparts


def distinct_sorted(rows, positions):
    return sorted(set(tuple(t[p] for p in positions) for t in rows))


def is_sorted(seq, keyf=lambda t: t) -> bool:
    return all(keyf(a) <= keyf(b) for a, b in itertools.pairwise(seq))


def temp_dir_empty(ctx: ExecContext) -> bool:
    root = ctx.temps.root
    return (not root.exists()) or not any(root.iterdir())
