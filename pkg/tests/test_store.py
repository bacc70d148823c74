import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diskmdp.errors import BackwardSeekError, FormatError, FrameError
from diskmdp.store import framing
from diskmdp.store.files import (ChunkWriter, IOStats, PartitionFileSet, PartitionMeta, SeqFile,
                                 decode_meta, encode_meta, iter_raw, read_meta, write_meta)
from diskmdp.store.partition import (BRANCH_DTYPE, STATE_DTYPE, TRANSITION_DTYPE, IndexCorrector,
                                     load_partition, partition_from_records, store_partition)
from diskmdp.store.records import (TRANSITION_END, Branch, StateEnd, TransitionEnd, decode_stream,
                                   encode_record, encode_records, stream_size)

COIN_RECORDS = [Branch(0.5, 0.0, 1, 1), Branch(0.5, 0.0, 1, 2), TRANSITION_END,
                StateEnd(False), StateEnd(True), StateEnd(True)]


# -- records -------------------------------------------------------------------------

def test_state_end_bytes():
    assert encode_record(StateEnd(True)) == b"\x03\x01"
    assert encode_record(StateEnd(False)) == b"\x03\x00"


def test_transition_end_bytes():
    assert encode_record(TransitionEnd()) == b"\x02"


def test_branch_bytes_against_hand_dump():
    data = encode_record(Branch(1.0, 0.0, 1, 0))
    # IEEE-754 binary64 1.0 is 0x3FF0000000000000, little-endian
    want = (b"\x01" + b"\x00\x00\x00\x00\x00\x00\xf0\x3f" + b"\x00" * 8
            + b"\x01\x00\x00\x00" + b"\x00\x00\x00\x00")
    assert data == want and len(data) == 25


def test_negative_index_encoding():
    data = encode_record(Branch(0.25, 1.5, 3, -2))
    assert struct.unpack("<ddii", data[1:]) == (0.25, 1.5, 3, -2)


def test_empty_stream():
    assert list(decode_stream(b"")) == []


def test_truncated_branch_reports_offset():
    data = encode_records([StateEnd(False)]) + encode_record(Branch(0.5, 0, 1, 1))[:11]
    with pytest.raises(FormatError, match="truncated record.*at byte offset 2"):
        list(decode_stream(data))


def test_unknown_tag_and_bad_flag():
    with pytest.raises(FormatError, match="unknown record tag 0x07 at byte offset 1"):
        list(decode_stream(b"\x02\x07"))
    with pytest.raises(FormatError, match="invalid is-target flag"):
        list(decode_stream(b"\x03\x05"))


def test_compact_record_needs_partition():
    data = encode_record(Branch(1.0, 0.0, 4, 9), compact_partition=4)
    assert len(data) == 5
    assert list(decode_stream(data, partition=4)) == [Branch(1.0, 0.0, 4, 9)]
    with pytest.raises(FormatError):
        list(decode_stream(data))


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
branches = st.builds(Branch, finite, finite, st.integers(-2**31, 2**31 - 1),
                     st.integers(-2**31, 2**31 - 1))
records = st.lists(st.one_of(branches, st.just(TRANSITION_END),
                             st.booleans().map(StateEnd)), max_size=60)


@given(records, st.integers(1, 64))
@settings(max_examples=200, deadline=None)
def test_decode_inverts_encode_for_any_chunking(recs, chunk):
    data = encode_records(recs)
    chunks = [data[k:k + chunk] for k in range(0, len(data), chunk)]
    assert list(decode_stream(chunks)) == recs
    assert encode_records(decode_stream(data)) == data


def test_size_law():
    recs = [Branch(0.5, 0, 1, 0)] * 7 + [TRANSITION_END] * 3 + [StateEnd(False)] * 5
    assert len(encode_records(recs)) == stream_size(7, 3, 5) == 25 * 7 + 3 + 2 * 5


# -- random-access layout -------------------------------------------------------------

def test_entry_sizes():
    assert (STATE_DTYPE.itemsize, TRANSITION_DTYPE.itemsize, BRANCH_DTYPE.itemsize) == (12, 8, 24)


def test_load_coin_stream():
    p = load_partition(encode_records(COIN_RECORDS))
    assert p.num_states == 3
    assert p.states["transition_count"].tolist() == [1, 0, 0]
    assert p.states["is_target"].tolist() == [0, 1, 1]
    assert p.transitions["branch_count"].tolist() == [2]
    assert p.state_transitions(0) == [[(0.5, 0.0, 1, 1), (0.5, 0.0, 1, 2)]]
    assert p.nbytes == 3 * 12 + 8 + 2 * 24


def test_load_rejects_preliminary_index():
    data = encode_records([Branch(1.0, 0, 2, -1), TRANSITION_END, StateEnd(False)])
    with pytest.raises(FormatError, match="preliminary index in final matrix"):
        load_partition(data)
    assert load_partition(data, allow_preliminary=True).branches["index"][0] == -1


def test_load_rejects_unterminated_state():
    data = encode_records([StateEnd(False), Branch(1.0, 0, 1, 0), TRANSITION_END])
    with pytest.raises(FormatError, match="unterminated state"):
        load_partition(data)


def test_store_load_round_trip_and_reference_builder():
    data = encode_records(COIN_RECORDS)
    p = load_partition(data)
    assert store_partition(p) == data
    q = partition_from_records(COIN_RECORDS)
    for name in ("states", "transitions", "branches"):
        assert getattr(p, name).tobytes() == getattr(q, name).tobytes()


def test_load_expands_compact_records():
    data = encode_records([Branch(1.0, 0.0, 3, 0), TRANSITION_END, StateEnd(False)],
                          compact_partition=3)
    p = load_partition(data, partition=3)
    assert p.branches.tolist() == [(1.0, 0.0, 3, 0)]


def random_well_formed(rng: np.random.Generator, states: int) -> list:
    out = []
    for _ in range(states):
        for _ in range(rng.integers(0, 4)):
            for _ in range(rng.integers(1, 5)):
                out.append(Branch(float(rng.random()), float(rng.integers(0, 4)),
                                  int(rng.integers(1, 9)), int(rng.integers(0, 1000))))
            out.append(TRANSITION_END)
        out.append(StateEnd(bool(rng.integers(0, 2))))
    return out


def test_random_streams_round_trip():
    rng = np.random.default_rng(7)
    for n in (0, 1, 5, 300):
        recs = random_well_formed(rng, n)
        data = encode_records(recs)
        p = load_partition([data[k:k + 100] for k in range(0, len(data), 100)])
        assert store_partition(p) == data
        assert list(p.records()) == recs


# -- index correction ----------------------------------------------------------------

def _correct(data, updates, chunk=7):
    c = IndexCorrector(updates)
    out = b"".join(c.correct([data[k:k + chunk] for k in range(0, len(data), chunk)]))
    return out, c.patched


def test_correction_without_negatives_is_identity():
    data = encode_records(COIN_RECORDS)
    assert _correct(data, {2: np.array([5])}) == (data, 0)


def test_single_preliminary_index():
    data = encode_record(Branch(0.5, 0, 2, -1))
    out, n = _correct(data, {2: np.array([7], np.uint32)})
    assert list(decode_stream(out)) == [Branch(0.5, 0, 2, 7)] and n == 1


def test_interleaved_partitions_use_their_own_updates():
    recs = [Branch(0.25, 0, 2, -1), Branch(0.25, 0, 3, -1), Branch(0.25, 0, 2, -2),
            Branch(0.25, 1, 3, -3), TRANSITION_END, StateEnd(False)]
    out, n = _correct(encode_records(recs), {2: np.array([4, 0]), 3: np.array([9, 9, 1])})
    got = [(r.partition, r.index) for r in decode_stream(out) if isinstance(r, Branch)]
    assert got == [(2, 4), (3, 9), (2, 0), (3, 1)] and n == 4
    # everything except the index fields is untouched
    a, b = encode_records(recs), out
    diff = [k for k in range(len(a)) if a[k] != b[k]]
    assert all(k % 25 >= 21 for k in diff)


def test_preliminary_index_beyond_updates():
    data = encode_record(Branch(0.5, 0, 2, -3))
    with pytest.raises(FormatError, match="beyond the updates"):
        _correct(data, {2: np.array([1, 2])})


# -- framing and files ----------------------------------------------------------------------

@given(st.binary(max_size=5000), st.integers(1, 999))
@settings(max_examples=50, deadline=None)
def test_frames_round_trip(raw, chunk):
    frames = b"".join(framing.frame_compress([raw]))
    parts = [frames[k:k + chunk] for k in range(0, len(frames), chunk)]
    assert b"".join(framing.frame_decompress(parts)) == raw


def test_large_input_splits_into_bounded_frames():
    raw = bytes(range(256)) * 3000
    frames = list(framing.frame_compress([raw]))
    assert len(frames) == -(-len(raw) // framing.FRAME_RAW_SIZE)
    assert b"".join(framing.frame_decompress(frames)) == raw


def test_corrupt_frames():
    frame = framing.encode_frame(b"hello world" * 10)
    with pytest.raises(FrameError, match="truncated frame"):
        list(framing.frame_decompress([frame[:-3]]))
    bad = frame[:8] + bytes(len(frame) - 8)
    with pytest.raises(FrameError, match="corrupt frame payload"):
        list(framing.frame_decompress([bad]))
    lying = struct.pack("<II", len(frame) - 8, 5) + frame[8:]
    with pytest.raises(FrameError, match="size mismatch"):
        list(framing.frame_decompress([lying]))


def test_compressed_append_and_codec_header(tmp_path):
    path = tmp_path / "f.z"
    with ChunkWriter(path, compress=True) as w:
        w.write(b"abc")
    with ChunkWriter(path, compress=True, append=True) as w:
        w.write(b"def")
    assert path.read_bytes()[0] == framing.CODEC_ZLIB
    assert b"".join(iter_raw(path)) == b"abcdef"
    path.write_bytes(b"\x09")
    with pytest.raises(FrameError, match="unknown codec"):
        list(iter_raw(path))


def test_seqfile_rejects_backward_seek(tmp_path):
    path = tmp_path / "f"
    path.write_bytes(b"0123456789")
    stats = IOStats()
    with SeqFile(path, "rb", stats) as f:
        f.read(5)
        f.seek(7)
        with pytest.raises(BackwardSeekError):
            f.seek(2)
    assert stats.backward_seeks == 1 and stats.seeks == 2
    lenient = IOStats(strict=False)
    with SeqFile(path, "rb", lenient) as f:
        f.read(4)
        f.seek(0)
    assert lenient.backward_seeks == 1


@pytest.mark.parametrize("compress", [False, True])
def test_values_and_updates_files(tmp_path, compress):
    fs = PartitionFileSet(tmp_path, 1, compress)
    targets = np.array([False, False, True])
    fs.store_values(targets.astype(np.float64))
    assert fs.read_bytes("values") == np.array([0.0, 0.0, 1.0], "<f8").tobytes()
    with fs.writer("updates") as w:
        w.write(struct.pack("<2I", 4, 7))
    assert fs.read_bytes("updates") == b"\x04\x00\x00\x00\x07\x00\x00\x00"
    assert fs.load_updates().tolist() == [4, 7]
    with fs.writer("updates") as w:
        w.write(b"\x01")
    with pytest.raises(FormatError, match="not a multiple"):
        fs.load_updates()


@pytest.mark.parametrize("compress", [False, True])
def test_queue_round_trip(tmp_path, compress):
    rng = np.random.default_rng(3)
    states = [tuple(int(v) for v in rng.integers(-1000, 1000, 3)) for _ in range(1000)]
    fs = PartitionFileSet(tmp_path, 2, compress)
    with fs.writer("queue") as w:
        for s in states[:600]:
            w.write(struct.pack("<3i", *s))
    with fs.writer("queue") as w:
        for s in states[600:]:
            w.write(struct.pack("<3i", *s))
    assert list(fs.iter_states("queue", 3)) == states


def test_meta_round_trip(tmp_path):
    parts = [PartitionMeta(3, 0, [2, 5]), PartitionMeta(0, 4, []), PartitionMeta(1, 1, [1])]
    data = encode_meta(parts)
    assert data[:4] == b"\x03\x00\x00\x00"
    assert decode_meta(data) == parts
    write_meta(tmp_path, parts)
    assert read_meta(tmp_path) == parts
    with pytest.raises(FormatError):
        decode_meta(data[:-2])
    with pytest.raises(FormatError, match="trailing"):
        decode_meta(data + b"\x00")
