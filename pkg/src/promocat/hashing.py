"""Deterministic 64-bit string hashing (FNV-1a).

Python's builtin ``hash`` is salted per process, so everything that must be
reproducible across runs (feature bucketing, glyph patterns) goes through
this module instead.
"""

from __future__ import annotations

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: str | bytes) -> int:
    """Hash a string (UTF-8) or byte sequence to an unsigned 64-bit integer."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def bucket_of(token: str, bucket_count: int) -> int:
    """Map a token into ``[0, bucket_count)``."""
    return fnv1a_64(token) % bucket_count
