"""Sequential file layer and the per-partition file set.

Every file access in diskmdp goes through :class:`SeqFile`, which counts
bytes and rejects (or in lenient mode, records) backward seeks.  Files are
only ever appended to, read front to back, or replaced wholesale.

Layout of a working directory::

    meta                   partition table (see :func:`write_meta`)
    p<i>.matrix[.z]        inverse-sequential matrix stream
    p<i>.states[.z]        explicit states, index order
    p<i>.queue[.z]         explicit states waiting to be explored
    p<i>.updates[.z]       u32 final index per queue position
    p<i>.values[.z]        f64 value per state
    p<i>.<mask>[.z]        u8 flag per state (graph precomputations)

The ``.z`` suffix marks framed-compressed files (see :mod:`.framing`).
"""
from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from ..errors import BackwardSeekError, FormatError, FrameError
from . import framing

CHUNK_SIZE = 256 * 1024
KINDS = ("matrix", "states", "queue", "updates", "values")


@dataclass
class IOStats:
    """Global instrumentation counters for the sequential-access contract."""

    strict: bool = True
    opened: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    seeks: int = 0
    backward_seeks: int = 0

    def reset(self):
        self.opened = self.bytes_read = self.bytes_written = 0
        self.seeks = self.backward_seeks = 0


IO_STATS = IOStats()


class SeqFile:
    """A binary file handle that only moves forward."""

    def __init__(self, path: Path, mode: str, stats: IOStats = IO_STATS):
        if mode not in ("rb", "wb", "ab"):
            raise ValueError(f"unsupported mode {mode!r}")
        self.path = Path(path)
        self.stats = stats
        self._f = open(self.path, mode, buffering=0)
        self._pos = self._f.tell()
        stats.opened += 1

    def read(self, n: int = -1) -> bytes:
        data = self._f.read(n) if n >= 0 else self._f.readall()
        self._pos += len(data)
        self.stats.bytes_read += len(data)
        return data

    def write(self, data) -> int:
        view = memoryview(data)
        try:
            while view:
                written = self._f.write(view)
                view = view[written:]
        except OSError as exc:
            raise OSError(exc.errno, f"{exc.strerror} while writing", str(self.path)) from exc
        n = len(data)
        self._pos += n
        self.stats.bytes_written += n
        return n

    def tell(self) -> int:
        return self._pos

    def seek(self, offset: int, whence: int = io.SEEK_SET) -> int:
        if whence == io.SEEK_SET:
            target = offset
        elif whence == io.SEEK_CUR:
            target = self._pos + offset
        else:
            raise BackwardSeekError(f"{self.path}: seeking relative to end is not sequential")
        self.stats.seeks += 1
        if target < self._pos:
            self.stats.backward_seeks += 1
            if self.stats.strict:
                raise BackwardSeekError(f"{self.path}: backward seek from {self._pos} to {target}")
        self._pos = self._f.seek(target)
        return self._pos

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class ChunkWriter:
    """Buffered sequential writer, optionally producing compressed frames."""

    def __init__(self, path: Path, compress: bool = False, append: bool = False):
        self.path = Path(path)
        self.compress = compress
        fresh = not append or not self.path.exists() or self.path.stat().st_size == 0
        self._f = SeqFile(self.path, "ab" if append else "wb")
        if compress and fresh:
            self._f.write(bytes([framing.DEFAULT_CODEC]))
        self._buf = bytearray()
        self.raw_bytes = 0

    def write(self, data) -> None:
        self._buf += data
        self.raw_bytes += len(data)
        if len(self._buf) >= CHUNK_SIZE:
            self._flush()

    def _flush(self):
        if not self._buf:
            return
        if self.compress:
            for frame in framing.frame_compress((self._buf,)):
                self._f.write(frame)
        else:
            self._f.write(self._buf)
        self._buf = bytearray()

    def close(self):
        if self._f is not None:
            try:
                self._flush()
            finally:
                self._f.close()
                self._f = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def iter_raw(path: Path, compressed: Optional[bool] = None) -> Iterator[bytes]:
    """Yield the raw (decompressed) content of a file in chunks."""
    path = Path(path)
    if compressed is None:
        compressed = path.suffix == ".z"
    with SeqFile(path, "rb") as f:
        if not compressed:
            while True:
                chunk = f.read(CHUNK_SIZE)
                if not chunk:
                    return
                yield chunk
        header = f.read(1)
        if not header:
            return
        codec = header[0]
        if codec not in (framing.CODEC_NONE, framing.CODEC_ZLIB):
            raise FrameError(f"{path}: unknown codec id {codec}", 0)

        def disk_chunks():
            while True:
                chunk = f.read(CHUNK_SIZE)
                if not chunk:
                    return
                yield chunk

        yield from framing.frame_decompress(disk_chunks(), codec)


def read_all(path: Path) -> bytes:
    return b"".join(iter_raw(path))


def raw_size(path: Path) -> int:
    return sum(len(c) for c in iter_raw(path))


# -- per-partition file set ---------------------------------------------------

@dataclass
class PartitionFileSet:
    """Paths and typed accessors for the files of one partition."""

    workdir: Path
    partition: int
    compress: bool = False

    def path(self, kind: str) -> Path:
        suffix = ".z" if self.compress else ""
        return Path(self.workdir) / f"p{self.partition}.{kind}{suffix}"

    def exists(self, kind: str) -> bool:
        return self.path(kind).exists()

    def writer(self, kind: str, append: bool = True) -> ChunkWriter:
        return ChunkWriter(self.path(kind), self.compress, append=append)

    def clear(self, kind: str) -> None:
        p = self.path(kind)
        if p.exists():
            p.unlink()

    def chunks(self, kind: str) -> Iterator[bytes]:
        p = self.path(kind)
        if not p.exists():
            return iter(())
        return iter_raw(p, self.compress)

    def read_bytes(self, kind: str) -> bytes:
        return b"".join(self.chunks(kind))

    # explicit-state files (states, queue)
    def iter_states(self, kind: str, width: int) -> Iterator[tuple[int, ...]]:
        rec = 4 * width
        if rec == 0:
            raise FormatError("explicit states need at least one variable")
        carry = b""
        for chunk in self.chunks(kind):
            data = carry + chunk
            usable = len(data) - len(data) % rec
            arr = np.frombuffer(data[:usable], dtype="<i4").reshape(-1, width)
            yield from map(tuple, arr.tolist())
            carry = data[usable:]
        if carry:
            raise FormatError(f"{self.path(kind)}: length not a multiple of {rec}")

    # fixed-width numeric arrays (updates, values, masks)
    def load_array(self, kind: str, dtype: str) -> np.ndarray:
        data = self.read_bytes(kind)
        size = np.dtype(dtype).itemsize
        if len(data) % size:
            raise FormatError(f"{self.path(kind)}: length {len(data)} not a multiple of {size}")
        return np.frombuffer(data, dtype=dtype).copy()

    def store_array(self, kind: str, values: np.ndarray, dtype: str) -> None:
        """Replace a file atomically (write temporary, then rename)."""
        final = self.path(kind)
        tmp = final.with_name(final.name + ".tmp")
        with ChunkWriter(tmp, self.compress) as w:
            data = np.ascontiguousarray(values, dtype=dtype).tobytes()
            for start in range(0, len(data), CHUNK_SIZE):
                w.write(data[start:start + CHUNK_SIZE])
        os.replace(tmp, final)

    def load_updates(self) -> np.ndarray:
        return self.load_array("updates", "<u4")

    def load_values(self) -> np.ndarray:
        return self.load_array("values", "<f8")

    def store_values(self, values: np.ndarray) -> None:
        self.store_array("values", values, "<f8")


def partition_files(workdir: Path) -> dict[str, list[Path]]:
    """Group the partition files of a working directory by kind."""
    out: dict[str, list[Path]] = {}
    for p in sorted(Path(workdir).glob("p*.*")):
        kind = p.name.split(".")[1]
        out.setdefault(kind, []).append(p)
    return out


def detect_compression(workdir: Path) -> bool:
    return any(Path(workdir).glob("p*.*.z"))


# -- meta table ---------------------------------------------------------------

@dataclass
class PartitionMeta:
    state_count: int = 0
    qlen: int = 0
    successors: list[int] = field(default_factory=list)


META_NAME = "meta"


def encode_meta(parts: Sequence[PartitionMeta]) -> bytes:
    out = [struct.pack("<I", len(parts))]
    for m in parts:
        succ = sorted(m.successors)
        out.append(struct.pack(f"<III{len(succ)}I", m.state_count, m.qlen, len(succ), *succ))
    return b"".join(out)


def decode_meta(data: bytes) -> list[PartitionMeta]:
    try:
        (count,), pos = struct.unpack_from("<I", data, 0), 4
        parts = []
        for _ in range(count):
            n, q, ns = struct.unpack_from("<III", data, pos)
            pos += 12
            succ = list(struct.unpack_from(f"<{ns}I", data, pos))
            pos += 4 * ns
            parts.append(PartitionMeta(n, q, succ))
    except struct.error as exc:
        raise FormatError(f"truncated meta file ({exc})") from None
    if pos != len(data):
        raise FormatError("trailing bytes in meta file", pos)
    return parts


def write_meta(workdir: Path, parts: Sequence[PartitionMeta]) -> None:
    path = Path(workdir) / META_NAME
    tmp = path.with_name(META_NAME + ".tmp")
    with SeqFile(tmp, "wb") as f:
        f.write(encode_meta(parts))
    os.replace(tmp, path)


def read_meta(workdir: Path) -> list[PartitionMeta]:
    """Partition table; entry ``k`` describes partition ``k + 1``."""
    with SeqFile(Path(workdir) / META_NAME, "rb") as f:
        return decode_meta(f.read())
