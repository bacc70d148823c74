"""Inverse-sequential record codec.

A matrix stream is a sequence of tagged records.  The branches of a
transition precede its ``TransitionEnd`` record, and the transitions of a
state precede its ``StateEnd`` record, so no counts or offsets are stored.

=====  ===========================================================  =====
tag    payload                                                      bytes
=====  ===========================================================  =====
0x01   f64 probability, f64 reward, i32 partition, i32 index        25
0x02   none (end of transition)                                     1
0x03   u8 is_target (end of state)                                  2
0x04   i32 index: probability 1, reward 0, same partition (opt-in)  5
=====  ===========================================================  =====

All integers and floats are little-endian.  A negative branch index is a
preliminary reference into the target partition's queue file.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from ..errors import FormatError

TAG_BRANCH = 0x01
TAG_TRANSITION = 0x02
TAG_STATE = 0x03
TAG_COMPACT = 0x04

BRANCH_SIZE = 25
TRANSITION_SIZE = 1
STATE_SIZE = 2
COMPACT_SIZE = 5

_BRANCH_BODY = struct.Struct("<ddii")
_COMPACT_BODY = struct.Struct("<i")


@dataclass(frozen=True, slots=True)
class Branch:
    probability: float
    reward: float
    partition: int
    index: int


@dataclass(frozen=True, slots=True)
class TransitionEnd:
    pass


@dataclass(frozen=True, slots=True)
class StateEnd:
    is_target: bool


Record = Union[Branch, TransitionEnd, StateEnd]

TRANSITION_END = TransitionEnd()
_STATE_END = {False: b"\x03\x00", True: b"\x03\x01"}


def stream_size(branches: int, transitions: int, states: int) -> int:
    """Byte length of a stream using only tags 1-3."""
    return BRANCH_SIZE * branches + TRANSITION_SIZE * transitions + STATE_SIZE * states


def encode_branch(probability: float, reward: float, partition: int, index: int) -> bytes:
    return b"\x01" + _BRANCH_BODY.pack(probability, reward, partition, index)


def encode_compact(index: int) -> bytes:
    return b"\x04" + _COMPACT_BODY.pack(index)


def encode_state_end(is_target: bool) -> bytes:
    return _STATE_END[bool(is_target)]


def encode_record(r: Record, compact_partition: Optional[int] = None) -> bytes:
    """Encode one record.

    With ``compact_partition`` set, a branch with probability 1, reward 0 and
    a final index into that same partition is written as a 5-byte compact
    record.
    """
    if isinstance(r, Branch):
        if (compact_partition is not None and r.probability == 1.0 and r.reward == 0.0
                and r.partition == compact_partition and r.index >= 0):
            return encode_compact(r.index)
        return encode_branch(r.probability, r.reward, r.partition, r.index)
    if isinstance(r, TransitionEnd):
        return b"\x02"
    if isinstance(r, StateEnd):
        return _STATE_END[bool(r.is_target)]
    raise TypeError(f"not a record: {r!r}")


def encode_records(records: Iterable[Record], compact_partition: Optional[int] = None) -> bytes:
    return b"".join(encode_record(r, compact_partition) for r in records)


def decode_stream(data: Union[bytes, Iterable[bytes]],
                  partition: Optional[int] = None) -> Iterator[Record]:
    """Decode records from a byte string or an iterable of byte chunks.

    Holds at most one partial record between chunks.  ``partition`` is the
    stream's own partition id, needed only to expand compact records.
    """
    chunks = (data,) if isinstance(data, (bytes, bytearray, memoryview)) else data
    buf = b""
    base = 0  # absolute offset of buf[0]
    unpack_branch = _BRANCH_BODY.unpack_from
    for chunk in chunks:
        buf = buf + bytes(chunk) if buf else bytes(chunk)
        pos = 0
        n = len(buf)
        while pos < n:
            tag = buf[pos]
            if tag == TAG_BRANCH:
                if pos + BRANCH_SIZE > n:
                    break
                p, r, j, k = unpack_branch(buf, pos + 1)
                yield Branch(p, r, j, k)
                pos += BRANCH_SIZE
            elif tag == TAG_TRANSITION:
                yield TRANSITION_END
                pos += 1
            elif tag == TAG_STATE:
                if pos + STATE_SIZE > n:
                    break
                flag = buf[pos + 1]
                if flag > 1:
                    raise FormatError(f"invalid is-target flag {flag}", base + pos + 1)
                yield StateEnd(flag == 1)
                pos += STATE_SIZE
            elif tag == TAG_COMPACT:
                if pos + COMPACT_SIZE > n:
                    break
                if partition is None:
                    raise FormatError("compact branch record without partition context", base + pos)
                (k,) = _COMPACT_BODY.unpack_from(buf, pos + 1)
                yield Branch(1.0, 0.0, partition, k)
                pos += COMPACT_SIZE
            else:
                raise FormatError(f"unknown record tag 0x{tag:02x}", base + pos)
        base += pos
        buf = buf[pos:]
    if buf:
        raise FormatError(f"truncated record (tag 0x{buf[0]:02x}, {len(buf)} bytes present)", base)
