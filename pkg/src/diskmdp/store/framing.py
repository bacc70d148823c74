"""Framed block compression for sequential streams.

A compressed file starts with a one-byte codec id and is followed by
independent frames::

    u32 compressed_len | u32 raw_len | payload[compressed_len]

Each frame holds at most ``FRAME_RAW_SIZE`` raw bytes, so both directions
run in bounded memory and frames may be appended to an existing file.
"""
from __future__ import annotations

import struct
import zlib
from typing import Iterable, Iterator

from ..errors import FrameError

CODEC_NONE = 0
CODEC_ZLIB = 1
DEFAULT_CODEC = CODEC_ZLIB
FRAME_RAW_SIZE = 256 * 1024
ZLIB_LEVEL = 1

_HEADER = struct.Struct("<II")


def _compress(codec: int, raw: bytes) -> bytes:
    if codec == CODEC_ZLIB:
        return zlib.compress(raw, ZLIB_LEVEL)
    if codec == CODEC_NONE:
        return bytes(raw)
    raise FrameError(f"unknown codec id {codec}")


def _decompress(codec: int, payload: bytes, raw_len: int, offset: int) -> bytes:
    if codec == CODEC_ZLIB:
        try:
            raw = zlib.decompress(payload)
        except zlib.error as exc:
            raise FrameError(f"corrupt frame payload ({exc})", offset) from None
    elif codec == CODEC_NONE:
        raw = bytes(payload)
    else:
        raise FrameError(f"unknown codec id {codec}", offset)
    if len(raw) != raw_len:
        raise FrameError(f"frame size mismatch: header says {raw_len}, got {len(raw)}", offset)
    return raw


def encode_frame(raw: bytes, codec: int = DEFAULT_CODEC) -> bytes:
    payload = _compress(codec, raw)
    return _HEADER.pack(len(payload), len(raw)) + payload


def frame_compress(chunks: Iterable[bytes], codec: int = DEFAULT_CODEC) -> Iterator[bytes]:
    """Re-block a raw byte stream into compressed frames (without file header)."""
    pending = bytearray()
    for chunk in chunks:
        pending += chunk
        while len(pending) >= FRAME_RAW_SIZE:
            yield encode_frame(bytes(pending[:FRAME_RAW_SIZE]), codec)
            del pending[:FRAME_RAW_SIZE]
    if pending:
        yield encode_frame(bytes(pending), codec)


def frame_decompress(chunks: Iterable[bytes], codec: int = DEFAULT_CODEC) -> Iterator[bytes]:
    """Inverse of :func:`frame_compress`; yields one raw block per frame."""
    buf = bytearray()
    offset = 0
    for chunk in chunks:
        buf += chunk
        while True:
            if len(buf) < _HEADER.size:
                break
            clen, rlen = _HEADER.unpack_from(buf, 0)
            if rlen > FRAME_RAW_SIZE or (codec == CODEC_NONE and clen != rlen):
                raise FrameError(f"corrupt frame header (compressed {clen}, raw {rlen})", offset)
            end = _HEADER.size + clen
            if len(buf) < end:
                break
            yield _decompress(codec, bytes(buf[_HEADER.size:end]), rlen, offset)
            del buf[:end]
            offset += end
    if buf:
        raise FrameError(f"truncated frame ({len(buf)} trailing bytes)", offset)
