"""Per-packet lossless body compression with stored-raw fallback.

DEFLATE (zlib) stands in for the LZ77-family per-packet codec: it is
deterministic at a fixed level and nothing downstream depends on a
particular bitstream. A body is sent compressed only if that strictly
shrinks it, so incompressible traffic costs nothing beyond the flag byte
already present in every record.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

from .errors import DecompressError, FormatError
from .wire_codec import MAX_BODY, CompFlag

ZLIB_LEVEL = 6


@dataclass(frozen=True)
class CompressedBody:
    comp_flag: CompFlag
    data: bytes


def compress_body(body: bytes) -> CompressedBody:
    """Compress if strictly smaller, otherwise fall back to the raw body."""
    if len(body) > MAX_BODY:
        raise FormatError("body exceeds 65535 bytes")
    if body:
        compressed = zlib.compress(body, ZLIB_LEVEL)
        if len(compressed) < len(body):
            return CompressedBody(CompFlag.COMPRESSED, compressed)
    return CompressedBody(CompFlag.RAW, body)


def decompress_body(flag: CompFlag, data: bytes, cap: int = MAX_BODY) -> bytes:
    """Inverse of compress_body; raw bodies pass through unchanged."""
    if cap > MAX_BODY:
        raise FormatError("cap exceeds 65535")
    if flag is CompFlag.RAW or flag == CompFlag.RAW:
        return data
    d = zlib.decompressobj()
    try:
        out = d.decompress(data, cap + 1)
    except zlib.error as exc:
        raise DecompressError("malformed compressed stream") from exc
    if len(out) > cap:
        raise DecompressError("expansion beyond cap")
    if not d.eof:
        raise DecompressError("truncated compressed stream")
    if d.unused_data:
        raise DecompressError("trailing bytes after compressed stream")
    return out
