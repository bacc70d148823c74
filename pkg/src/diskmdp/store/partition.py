"""Random-access partition layout and its conversion to and from matrix streams.

In memory a partition is three parallel arrays::

    states       transition_count u32 | first_transition u32 | is_target u32   12 bytes
    transitions  branch_count u32 | first_branch u32                            8 bytes
    branches     probability f64 | reward f64 | partition i32 | index i32      24 bytes

:func:`load_partition` rebuilds them from one sequential read of a matrix
stream; :func:`store_partition` writes them back in one pass.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

import numba
import numpy as np

from ..errors import FormatError
from .records import (BRANCH_SIZE, COMPACT_SIZE, STATE_SIZE, TAG_BRANCH,
                      TAG_STATE, TAG_TRANSITION, Branch, Record, StateEnd, TransitionEnd)

STATE_DTYPE = np.dtype([("transition_count", "<u4"), ("first_transition", "<u4"),
                        ("is_target", "<u4")])
TRANSITION_DTYPE = np.dtype([("branch_count", "<u4"), ("first_branch", "<u4")])
BRANCH_DTYPE = np.dtype([("probability", "<f8"), ("reward", "<f8"), ("partition", "<i4"),
                         ("index", "<i4")])
# on-disk branch record, tag included; numpy packs unaligned fields
_BRANCH_RECORD = np.dtype([("tag", "u1"), ("probability", "<f8"), ("reward", "<f8"),
                           ("partition", "<i4"), ("index", "<i4")])
assert STATE_DTYPE.itemsize == 12 and TRANSITION_DTYPE.itemsize == 8
assert BRANCH_DTYPE.itemsize == 24 and _BRANCH_RECORD.itemsize == BRANCH_SIZE

OK, BAD_TAG, TRUNCATED, UNTERMINATED, BAD_FLAG, NEEDS_PARTITION, BAD_PRELIMINARY = range(7)


@dataclass
class RandomAccessPartition:
    states: np.ndarray
    transitions: np.ndarray
    branches: np.ndarray
    partition: Optional[int] = None

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_transitions(self) -> int:
        return len(self.transitions)

    @property
    def num_branches(self) -> int:
        return len(self.branches)

    @property
    def nbytes(self) -> int:
        """Layout accounting: 12 bytes per state, 8 per transition, 24 per branch."""
        return self.states.nbytes + self.transitions.nbytes + self.branches.nbytes

    def state_transitions(self, k: int) -> list[list[tuple[float, float, int, int]]]:
        st = self.states[k]
        out = []
        for t in range(int(st["first_transition"]), int(st["first_transition"] + st["transition_count"])):
            tr = self.transitions[t]
            fb, bc = int(tr["first_branch"]), int(tr["branch_count"])
            out.append([(float(b["probability"]), float(b["reward"]), int(b["partition"]),
                         int(b["index"])) for b in self.branches[fb:fb + bc]])
        return out

    def records(self) -> Iterator[Record]:
        for k in range(self.num_states):
            for trans in self.state_transitions(k):
                for b in trans:
                    yield Branch(*b)
                yield TransitionEnd()
            yield StateEnd(bool(self.states[k]["is_target"]))


def empty_partition(partition: Optional[int] = None) -> RandomAccessPartition:
    return RandomAccessPartition(np.zeros(0, STATE_DTYPE), np.zeros(0, TRANSITION_DTYPE),
                                 np.zeros(0, BRANCH_DTYPE), partition)


@numba.njit(cache=True)
def _count(buf):
    n = buf.shape[0]
    pos = 0
    ns = 0
    nt = 0
    nb = 0
    open_t = False  # records seen since the last StateEnd
    while pos < n:
        tag = buf[pos]
        if tag == 1:
            if pos + 25 > n:
                return TRUNCATED, pos, ns, nt, nb
            nb += 1
            pos += 25
            open_t = True
        elif tag == 2:
            nt += 1
            pos += 1
            open_t = True
        elif tag == 3:
            if pos + 2 > n:
                return TRUNCATED, pos, ns, nt, nb
            if buf[pos + 1] > 1:
                return BAD_FLAG, pos + 1, ns, nt, nb
            ns += 1
            pos += 2
            open_t = False
        elif tag == 4:
            if pos + 5 > n:
                return TRUNCATED, pos, ns, nt, nb
            nb += 1
            pos += 5
            open_t = True
        else:
            return BAD_TAG, pos, ns, nt, nb
    if open_t:
        return UNTERMINATED, pos, ns, nt, nb
    return OK, pos, ns, nt, nb


@numba.njit(cache=True)
def _fill(buf, st_tc, st_tgt, tr_bc, br_off, br_compact):
    pos = 0
    n = buf.shape[0]
    s = 0
    t = 0
    b = 0
    tc = 0
    bc = 0
    while pos < n:
        tag = buf[pos]
        if tag == 1 or tag == 4:
            br_off[b] = pos
            br_compact[b] = tag == 4
            b += 1
            bc += 1
            pos += 25 if tag == 1 else 5
        elif tag == 2:
            tr_bc[t] = bc
            t += 1
            bc = 0
            tc += 1
            pos += 1
        else:
            st_tc[s] = tc
            st_tgt[s] = buf[pos + 1]
            s += 1
            tc = 0
            pos += 2


def _exclusive_cumsum(counts: np.ndarray) -> np.ndarray:
    out = np.zeros(len(counts), dtype=np.uint64)
    if len(counts) > 1:
        np.cumsum(counts[:-1], dtype=np.uint64, out=out[1:])
    return out


_MESSAGES = {BAD_TAG: "unknown record tag", TRUNCATED: "truncated record",
             UNTERMINATED: "stream ends inside an unterminated state",
             BAD_FLAG: "invalid is-target flag"}


def load_partition_bytes(data: bytes, partition: Optional[int] = None,
                         allow_preliminary: bool = False) -> RandomAccessPartition:
    buf = np.frombuffer(data, dtype=np.uint8)
    status, off, ns, nt, nb = _count(buf)
    if status != OK:
        if status == BAD_TAG:
            raise FormatError(f"unknown record tag 0x{buf[off]:02x}", int(off))
        raise FormatError(_MESSAGES[status], int(off))
    states = np.zeros(ns, STATE_DTYPE)
    transitions = np.zeros(nt, TRANSITION_DTYPE)
    branches = np.zeros(nb, BRANCH_DTYPE)
    st_tc = np.zeros(ns, np.uint32)
    st_tgt = np.zeros(ns, np.uint32)
    tr_bc = np.zeros(nt, np.uint32)
    br_off = np.zeros(nb, np.int64)
    br_compact = np.zeros(nb, np.bool_)
    _fill(buf, st_tc, st_tgt, tr_bc, br_off, br_compact)
    states["transition_count"] = st_tc
    states["first_transition"] = _exclusive_cumsum(st_tc)
    states["is_target"] = st_tgt
    transitions["branch_count"] = tr_bc
    transitions["first_branch"] = _exclusive_cumsum(tr_bc)

    full = br_off[~br_compact]
    if len(full):
        raw = buf[full[:, None] + np.arange(BRANCH_SIZE)].reshape(-1)
        recs = raw.view(_BRANCH_RECORD)
        sel = ~br_compact
        for name in ("probability", "reward", "partition", "index"):
            branches[name][sel] = recs[name]
    if br_compact.any():
        if partition is None:
            raise FormatError("compact branch record without partition context",
                              int(br_off[br_compact][0]))
        comp = br_off[br_compact]
        raw = buf[comp[:, None] + np.arange(1, COMPACT_SIZE)].reshape(-1)
        branches["probability"][br_compact] = 1.0
        branches["reward"][br_compact] = 0.0
        branches["partition"][br_compact] = partition
        branches["index"][br_compact] = raw.view("<i4")
    if not allow_preliminary and nb and branches["index"].min() < 0:
        first = int(np.argmax(branches["index"] < 0))
        raise FormatError("preliminary index in final matrix", int(br_off[first]))
    return RandomAccessPartition(states, transitions, branches, partition)


def load_partition(chunks: Iterable[bytes], partition: Optional[int] = None,
                   allow_preliminary: bool = False) -> RandomAccessPartition:
    """Rebuild the random-access arrays from a sequential matrix stream."""
    if isinstance(chunks, (bytes, bytearray, memoryview)):
        return load_partition_bytes(bytes(chunks), partition, allow_preliminary)
    return load_partition_bytes(b"".join(chunks), partition, allow_preliminary)


def partition_from_records(records: Iterable[Record],
                           partition: Optional[int] = None) -> RandomAccessPartition:
    """Straightforward record-at-a-time builder (reference for :func:`load_partition`)."""
    states, transitions, branches = [], [], []
    tc = 0
    bc = 0
    for r in records:
        if isinstance(r, Branch):
            branches.append((r.probability, r.reward, r.partition, r.index))
            bc += 1
        elif isinstance(r, TransitionEnd):
            transitions.append((bc, len(branches) - bc))
            bc = 0
            tc += 1
        else:
            states.append((tc, len(transitions) - tc, int(r.is_target)))
            tc = 0
    if tc or bc:
        raise FormatError("stream ends inside an unterminated state")
    return RandomAccessPartition(np.array(states, STATE_DTYPE), np.array(transitions, TRANSITION_DTYPE),
                                 np.array(branches, BRANCH_DTYPE), partition)


def store_partition(p: RandomAccessPartition) -> bytes:
    """Serialise the arrays as a matrix stream (tags 1-3 only)."""
    st, tr, br = p.states, p.transitions, p.branches
    tc = st["transition_count"].astype(np.int64)
    ft = st["first_transition"].astype(np.int64)
    if len(st) and (ft + tc > len(tr)).any():
        raise FormatError("inconsistent transition range in state array")
    nseq = int(tc.sum())
    owner = np.repeat(np.arange(len(st)), tc)
    seq_t = np.repeat(ft - _exclusive_cumsum(tc).astype(np.int64), tc) + np.arange(nseq)
    bc = tr["branch_count"][seq_t].astype(np.int64)
    fb = tr["first_branch"][seq_t].astype(np.int64)
    if nseq and (fb + bc > len(br)).any():
        raise FormatError("inconsistent branch range in transition array")
    nbr = int(bc.sum())
    seq_b = np.repeat(fb - _exclusive_cumsum(bc).astype(np.int64), bc) + np.arange(nbr)

    tsize = 1 + BRANCH_SIZE * bc
    tstart = _exclusive_cumsum(tsize).astype(np.int64) + STATE_SIZE * owner
    # end of state k = bytes of all transitions of states <= k plus earlier state records
    per_state = np.zeros(len(st), np.int64)
    np.add.at(per_state, owner, tsize)
    send = np.cumsum(per_state) + STATE_SIZE * np.arange(len(st))
    total = int(send[-1] + STATE_SIZE) if len(st) else 0
    out = np.zeros(total, np.uint8)

    tend = tstart + BRANCH_SIZE * bc
    out[tend] = TAG_TRANSITION
    out[send] = TAG_STATE
    out[send + 1] = (st["is_target"] != 0).astype(np.uint8)
    if nbr:
        t_of_b = np.repeat(np.arange(nseq), bc)
        bpos = tstart[t_of_b] + BRANCH_SIZE * (np.arange(nbr) - _exclusive_cumsum(bc).astype(np.int64)[t_of_b])
        recs = np.zeros(nbr, _BRANCH_RECORD)
        recs["tag"] = TAG_BRANCH
        src = br[seq_b]
        for name in ("probability", "reward", "partition", "index"):
            recs[name] = src[name]
        out[bpos[:, None] + np.arange(BRANCH_SIZE)] = recs.view(np.uint8).reshape(-1, BRANCH_SIZE)
    return out.tobytes()


# -- preliminary index correction --------------------------------------------

@numba.njit(cache=True)
def _patch(buf, upd_flat, upd_off, upd_len):
    """Patch negative branch indices in the complete records of ``buf`` in place.

    Returns (status, consumed bytes, patched count, error offset).
    """
    n = buf.shape[0]
    pos = 0
    patched = 0
    while pos < n:
        tag = buf[pos]
        if tag == 1:
            if pos + 25 > n:
                break
            k = np.int64(buf[pos + 21]) | (np.int64(buf[pos + 22]) << 8) | \
                (np.int64(buf[pos + 23]) << 16) | (np.int64(buf[pos + 24]) << 24)
            if k >= 2147483648:
                k -= 4294967296
            if k < 0:
                j = np.int64(buf[pos + 17]) | (np.int64(buf[pos + 18]) << 8) | \
                    (np.int64(buf[pos + 19]) << 16) | (np.int64(buf[pos + 20]) << 24)
                if j < 0 or j >= upd_off.shape[0] or upd_off[j] < 0 or -k > upd_len[j]:
                    return BAD_PRELIMINARY, pos, patched, pos
                v = upd_flat[upd_off[j] - k - 1]
                buf[pos + 21] = v & 0xFF
                buf[pos + 22] = (v >> 8) & 0xFF
                buf[pos + 23] = (v >> 16) & 0xFF
                buf[pos + 24] = (v >> 24) & 0xFF
                patched += 1
            pos += 25
        elif tag == 2:
            pos += 1
        elif tag == 3:
            if pos + 2 > n:
                break
            pos += 2
        elif tag == 4:
            if pos + 5 > n:
                break
            pos += 5
        else:
            return BAD_TAG, pos, patched, pos
    return OK, pos, patched, 0


class IndexCorrector:
    """Streams a matrix, replacing each preliminary index ``-k`` of a branch into
    partition ``j`` by ``updates[j][k - 1]``."""

    def __init__(self, updates: Mapping[int, np.ndarray]):
        top = max(updates, default=0)
        self.upd_off = np.full(top + 1, -1, np.int64)
        self.upd_len = np.zeros(top + 1, np.int64)
        parts, off = [], 0
        for j in sorted(updates):
            arr = np.asarray(updates[j], dtype=np.int64)
            self.upd_off[j] = off
            self.upd_len[j] = len(arr)
            parts.append(arr)
            off += len(arr)
        self.upd_flat = np.concatenate(parts) if parts else np.zeros(0, np.int64)
        self.patched = 0

    def correct(self, chunks: Iterable[bytes]) -> Iterator[bytes]:
        carry = b""
        base = 0
        for chunk in chunks:
            buf = np.frombuffer(carry + chunk, dtype=np.uint8).copy()
            status, consumed, patched, err = _patch(buf, self.upd_flat, self.upd_off, self.upd_len)
            if status == BAD_PRELIMINARY:
                raise FormatError("preliminary index references a position beyond the updates "
                                  "of its target partition", base + int(err))
            if status == BAD_TAG:
                raise FormatError(f"unknown record tag 0x{buf[err]:02x}", base + int(err))
            self.patched += int(patched)
            yield buf[:consumed].tobytes()
            carry = buf[consumed:].tobytes()
            base += int(consumed)
        if carry:
            raise FormatError("truncated record", base)
