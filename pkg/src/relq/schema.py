"""Relation schemas and fixed-width tuple encoding.

Two attribute types exist:

  int      signed 64-bit integer; 8 bytes little-endian
  strN     UTF-8 string of at most N bytes; a uint16 little-endian byte
           length followed by exactly N data bytes, zero padded

A tuple encodes to the concatenation of its attribute slots in schema
order, so every tuple of a schema has the same byte width and slot
positions are pure offset arithmetic.  decode(encode(t)) == t for every
conforming tuple.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass

from .errors import EncodingError, SchemaError, StorageError

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_TYPE_RE = re.compile(r"^(int|str([1-9][0-9]*))$")


@dataclass(frozen=True)
class IntType:
    code = "int"
    width = 8


@dataclass(frozen=True)
class StrType:
    max_bytes: int

    @property
    def code(self) -> str:
        return f"str{self.max_bytes}"

    @property
    def width(self) -> int:
        return 2 + self.max_bytes


AttrType = IntType | StrType


def parse_type(text: str) -> AttrType:
    m = _TYPE_RE.match(text)
    if not m:
        raise SchemaError(f"unknown attribute type {text!r} (expected 'int' or 'strN')")
    if m.group(2) is None:
        return IntType()
    n = int(m.group(2))
    if n > 65535:
        raise SchemaError(f"str width {n} exceeds 65535")
    return StrType(n)


@dataclass(frozen=True)
class Attr:
    name: str
    type: AttrType


class Schema:
    """Ordered, uniquely named attributes plus the tuple codec."""

    def __init__(self, attrs: tuple[Attr, ...] | list[Attr]):
        attrs = tuple(attrs)
        if not attrs:
            raise SchemaError("schema needs at least one attribute")
        names = [a.name for a in attrs]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate attribute names in {names}")
        self.attrs = attrs
        self.names = tuple(names)
        self.width = sum(a.type.width for a in attrs)
        self._index = {a.name: i for i, a in enumerate(attrs)}
        fmt = "<"
        for a in attrs:
            fmt += "q" if isinstance(a.type, IntType) else f"H{a.type.max_bytes}s"
        self._struct = struct.Struct(fmt)
        assert self._struct.size == self.width

    @classmethod
    def parse(cls, text: str) -> Schema:
        """Parse the micro-format ``name:int,name:strN``."""
        attrs = []
        for part in text.split(","):
            part = part.strip()
            if ":" not in part:
                raise SchemaError(f"bad attribute declaration {part!r} (expected name:type)")
            name, _, type_text = part.partition(":")
            name = name.strip()
            if not _NAME_RE.match(name):
                raise SchemaError(f"bad attribute name {name!r}")
            attrs.append(Attr(name, parse_type(type_text.strip())))
        return cls(tuple(attrs))

    def type_string(self) -> str:
        return ",".join(f"{a.name}:{a.type.code}" for a in self.attrs)

    def index_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"unknown attribute {name!r}") from None

    def project(self, names: tuple[str, ...] | list[str]) -> Schema:
        return Schema(tuple(self.attrs[self.index_of(n)] for n in names))

    def validate_tuple(self, t: tuple) -> None:
        if len(t) != len(self.attrs):
            raise SchemaError(f"arity {len(t)} does not match schema arity {len(self.attrs)}")
        for v, a in zip(t, self.attrs):
            if isinstance(a.type, IntType):
                if isinstance(v, bool) or not isinstance(v, int):
                    raise SchemaError(f"attribute {a.name!r} expects int, got {type(v).__name__}")
                if not INT64_MIN <= v <= INT64_MAX:
                    raise EncodingError(f"attribute {a.name!r}: {v} outside 64-bit range")
            else:
                if not isinstance(v, str):
                    raise SchemaError(f"attribute {a.name!r} expects str, got {type(v).__name__}")
                if len(v.encode("utf-8")) > a.type.max_bytes:
                    raise EncodingError(
                        f"attribute {a.name!r}: value exceeds {a.type.max_bytes} bytes"
                    )

    def encode_tuple(self, t: tuple) -> bytes:
        self.validate_tuple(t)
        args = []
        for v, a in zip(t, self.attrs):
            if isinstance(a.type, IntType):
                args.append(v)
            else:
                data = v.encode("utf-8")
                args.append(len(data))
                args.append(data)
        return self._struct.pack(*args)

    def decode_tuple(self, buf: bytes | memoryview, offset: int = 0) -> tuple:
        try:
            raw = self._struct.unpack_from(buf, offset)
        except struct.error as e:
            raise StorageError(f"short tuple slot: {e}") from None
        values = []
        i = 0
        for a in self.attrs:
            if isinstance(a.type, IntType):
                values.append(raw[i])
                i += 1
            else:
                length, data = raw[i], raw[i + 1]
                i += 2
                if length > a.type.max_bytes:
                    raise StorageError(
                        f"corrupt length prefix {length} for attribute {a.name!r}"
                    )
                try:
                    values.append(data[:length].decode("utf-8"))
                except UnicodeDecodeError as e:
                    raise StorageError(f"corrupt utf-8 in attribute {a.name!r}: {e}") from None
        return tuple(values)

    def __eq__(self, other) -> bool:
        return isinstance(other, Schema) and self.attrs == other.attrs

    def __hash__(self) -> int:
        return hash(self.attrs)

    def __len__(self) -> int:
        return len(self.attrs)

    def __repr__(self) -> str:
        return f"Schema({self.type_string()!r})"
