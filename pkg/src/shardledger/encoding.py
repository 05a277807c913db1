"""Canonical tag-length-value encoding.

Every value is a 1-byte type tag followed by a 4-byte big-endian length
and the payload. Lists carry an element count instead of a byte length,
and so do records (frozen dataclasses registered with :func:`record`),
whose fields are encoded in declaration order.

The encoding is injective and is the only byte format used for hashing,
signing and the wire.
"""

from __future__ import annotations

import dataclasses
import struct
from typing import Any, Callable, TypeVar

TAG_BYTES = 0x01
TAG_STR = 0x02
TAG_INT = 0x03
TAG_LIST = 0x04
TAG_BOOL = 0x05
TAG_NONE = 0x06

_MAX_LEN = 2**32 - 1
_INT_MIN = -(2**63)
_INT_MAX = 2**63 - 1

_RECORDS_BY_TAG: dict[int, type] = {}
_TAGS_BY_RECORD: dict[type, int] = {}
_FIELD_NAMES: dict[type, tuple[str, ...]] = {}
_FROZEN: set[type] = set()
_MEMO = "_canonical_bytes"

T = TypeVar("T")


class EncodingError(ValueError):
    pass


class Oversize(EncodingError):
    """A field or list does not fit the 4-byte length prefix."""


def record(tag: int) -> Callable[[type[T]], type[T]]:
    """Register a frozen dataclass under a 1-byte record tag."""
    if not 0x20 <= tag <= 0xEF:
        raise ValueError(f"record tag out of range: {tag:#x}")

    def wrap(cls: type[T]) -> type[T]:
        if not dataclasses.is_dataclass(cls):
            raise TypeError(f"{cls.__name__} is not a dataclass")
        if tag in _RECORDS_BY_TAG and _RECORDS_BY_TAG[tag] is not cls:
            raise ValueError(f"record tag {tag:#x} already used by {_RECORDS_BY_TAG[tag].__name__}")
        _RECORDS_BY_TAG[tag] = cls
        _TAGS_BY_RECORD[cls] = tag
        _FIELD_NAMES[cls] = tuple(f.name for f in dataclasses.fields(cls))
        if cls.__dataclass_params__.frozen and hasattr(cls, "__dict__"):
            _FROZEN.add(cls)
        return cls

    return wrap


def _length(n: int) -> bytes:
    if n > _MAX_LEN:
        raise Oversize(f"length {n} does not fit in 4 bytes")
    return struct.pack(">I", n)


def _encode_record(value: Any, out: list[bytes]) -> None:
    cls = type(value)
    frozen = cls in _FROZEN
    # frozen records are immutable, so their encoding is memoised on the instance
    if frozen:
        memo = value.__dict__.get(_MEMO)
        if memo is not None:
            out.append(memo)
            return
    names = _FIELD_NAMES[cls]
    sub: list[bytes] = [bytes([_TAGS_BY_RECORD[cls]]) + _length(len(names))]
    for name in names:
        _encode_into(getattr(value, name), sub)
    data = b"".join(sub)
    if frozen:
        object.__setattr__(value, _MEMO, data)
    out.append(data)


_BOOL_TRUE = bytes([TAG_BOOL]) + struct.pack(">I", 1) + b"\x01"
_BOOL_FALSE = bytes([TAG_BOOL]) + struct.pack(">I", 1) + b"\x00"
_NONE = bytes([TAG_NONE]) + struct.pack(">I", 0)
_INT_HEAD = bytes([TAG_INT]) + struct.pack(">I", 8)
_INT = struct.Struct(">q")
_LEN = struct.Struct(">I")


def _encode_into(value: Any, out: list[bytes]) -> None:
    t = type(value)
    # exact-type fast paths; subclasses fall through to the isinstance chain
    if t is bytes:
        n = len(value)
        if n > _MAX_LEN:
            raise Oversize(f"length {n} does not fit in 4 bytes")
        out.append(b"\x01" + _LEN.pack(n))
        out.append(value)
    elif t is tuple or t is list:
        out.append(bytes([TAG_LIST]) + _length(len(value)))
        for item in value:
            _encode_into(item, out)
    elif t in _TAGS_BY_RECORD:
        _encode_record(value, out)
    elif t is bool:
        out.append(_BOOL_TRUE if value else _BOOL_FALSE)
    elif isinstance(value, bool):
        out.append(_BOOL_TRUE if value else _BOOL_FALSE)
    elif isinstance(value, int):
        if not _INT_MIN <= value <= _INT_MAX:
            raise Oversize(f"integer {value} does not fit in 8 bytes")
        out.append(_INT_HEAD + _INT.pack(value))
    elif isinstance(value, (bytes, bytearray, memoryview)):
        data = bytes(value)
        out.append(bytes([TAG_BYTES]) + _length(len(data)))
        out.append(data)
    elif isinstance(value, str):
        data = value.encode("utf-8")
        out.append(bytes([TAG_STR]) + _length(len(data)))
        out.append(data)
    elif value is None:
        out.append(_NONE)
    elif isinstance(value, (list, tuple)):
        out.append(bytes([TAG_LIST]) + _length(len(value)))
        for item in value:
            _encode_into(item, out)
    else:
        raise EncodingError(f"cannot encode {type(value).__name__}")


def canonical_encode(value: Any) -> bytes:
    out: list[bytes] = []
    _encode_into(value, out)
    return b"".join(out)


def _decode_at(data: bytes, pos: int) -> tuple[Any, int]:
    if pos + 5 > len(data):
        raise EncodingError("truncated header")
    tag = data[pos]
    (n,) = struct.unpack_from(">I", data, pos + 1)
    pos += 5
    if tag == TAG_LIST:
        items = []
        for _ in range(n):
            item, pos = _decode_at(data, pos)
            items.append(item)
        return tuple(items), pos
    if tag in _RECORDS_BY_TAG:
        cls = _RECORDS_BY_TAG[tag]
        fields = dataclasses.fields(cls)
        if n != len(fields):
            raise EncodingError(f"{cls.__name__}: expected {len(fields)} fields, got {n}")
        values = []
        for _ in range(n):
            v, pos = _decode_at(data, pos)
            values.append(v)
        return cls(*values), pos
    end = pos + n
    if end > len(data):
        raise EncodingError("truncated payload")
    payload = data[pos:end]
    if tag == TAG_BYTES:
        return payload, end
    if tag == TAG_STR:
        return payload.decode("utf-8"), end
    if tag == TAG_INT:
        if n != 8:
            raise EncodingError("integer payload must be 8 bytes")
        return struct.unpack(">q", payload)[0], end
    if tag == TAG_BOOL:
        if payload not in (b"\x00", b"\x01"):
            raise EncodingError("bad boolean")
        return payload == b"\x01", end
    if tag == TAG_NONE:
        if n:
            raise EncodingError("none carries no payload")
        return None, end
    raise EncodingError(f"unknown tag {tag:#x}")


def canonical_decode(data: bytes) -> Any:
    """Inverse of :func:`canonical_encode`; lists come back as tuples."""
    value, pos = _decode_at(bytes(data), 0)
    if pos != len(data):
        raise EncodingError(f"{len(data) - pos} trailing bytes")
    return value


def decode_as(cls: type[T], data: bytes) -> T:
    value = canonical_decode(data)
    if not isinstance(value, cls):
        raise EncodingError(f"expected {cls.__name__}, got {type(value).__name__}")
    return value


def encode_stream(values) -> bytes:
    """Length-prefixed concatenation, one canonical encoding per item."""
    out = []
    for v in values:
        blob = canonical_encode(v)
        out.append(_length(len(blob)))
        out.append(blob)
    return b"".join(out)


def decode_stream(data: bytes) -> list[Any]:
    items = []
    pos = 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise EncodingError("truncated stream length")
        (n,) = struct.unpack_from(">I", data, pos)
        pos += 4
        if pos + n > len(data):
            raise EncodingError("truncated stream item")
        items.append(canonical_decode(data[pos:pos + n]))
        pos += n
    return items
