"""CSV loading with a schema string and line-exact diagnostics.

The header row must name the schema attributes exactly and in order.
Values are total: an empty field is treated as NULL and rejected, since
schemas have no NULL and comparison semantics stay unambiguous.  All
rows are validated before anything is written, so a failed load leaves
the catalog and the directory untouched.
"""

from __future__ import annotations

import csv
import os

from .catalog import Database
from .errors import EncodingError, IngestError, SchemaError
from .heap import TupleWriter
from .schema import IntType, Schema


def read_rows(csv_path: str | os.PathLike, schema: Schema) -> list[tuple]:
    try:
        fh = open(csv_path, newline="", encoding="utf-8")
    except OSError as e:
        raise IngestError(f"cannot open {csv_path}: {e}") from e
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise IngestError(f"{csv_path} is empty (no header row)")
        if tuple(header) != schema.names:
            raise IngestError(
                f"header {header} does not match schema attributes {list(schema.names)}")
        rows: list[tuple] = []
        for row in reader:
            line = reader.line_num
            if len(row) != len(schema.attrs):
                raise IngestError(
                    f"expected {len(schema.attrs)} fields, got {len(row)}", line=line)
            values = []
            for text, attr in zip(row, schema.attrs):
                if text == "":
                    raise IngestError(
                        f"empty field for attribute {attr.name!r} (NULL is not allowed)",
                        line=line)
                if isinstance(attr.type, IntType):
                    try:
                        values.append(int(text, 10))
                    except ValueError:
                        raise IngestError(
                            f"attribute {attr.name!r}: {text!r} is not an integer",
                            line=line) from None
                else:
                    values.append(text)
            t = tuple(values)
            try:
                schema.validate_tuple(t)
            except (SchemaError, EncodingError) as e:
                raise IngestError(str(e), line=line) from None
            rows.append(t)
    return rows


def ingest_csv(db: Database, relation: str, csv_path: str | os.PathLike,
               schema_text: str) -> dict:
    """Load a CSV into a new relation; returns {relation, pages, tuples}."""
    schema = Schema.parse(schema_text)
    rows = read_rows(csv_path, schema)
    heap = db.create_relation(relation, schema)
    with TupleWriter(heap) as w:
        for t in rows:
            w.append(t)
    db.set_relation_stats(relation, heap.page_count, len(rows))
    return {"relation": relation, "pages": heap.page_count, "tuples": len(rows)}
