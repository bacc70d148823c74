"""Partition-at-a-time access to an explored working directory.

A *visit* loads one partition's matrix plus per-state arrays of the
partition and its successors, concatenated own-first.  The outer driver
visits partitions in descending id order and repeats while a visit changed
values that an already-visited partition depends on.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..errors import DiskMdpError, FormatError, NonConvergenceError
from ..store.files import PartitionFileSet, detect_compression, read_meta
from ..store.partition import load_partition


@dataclass
class LoadedPartition:
    """Columns of one partition's random-access arrays, ready for the kernels."""

    partition: int
    tc: np.ndarray
    ft: np.ndarray
    bc: np.ndarray
    fb: np.ndarray
    prob: np.ndarray
    rew: np.ndarray
    pos: np.ndarray
    is_target: np.ndarray
    layout: list[int]        # partition ids in concatenation order, own first
    offsets: dict[int, int]

    @property
    def num_states(self) -> int:
        return len(self.tc)


class PartitionedWorkdir:
    def __init__(self, workdir: Path, compress: Optional[bool] = None):
        self.workdir = Path(workdir)
        if not (self.workdir / "meta").exists():
            raise DiskMdpError(f"{self.workdir} holds no explored model (meta file missing)")
        self.meta = read_meta(self.workdir)
        self.compress = detect_compression(self.workdir) if compress is None else compress
        self.count = len(self.meta)
        self.counts = [m.state_count for m in self.meta]
        self.successors = [sorted(m.successors) for m in self.meta]
        # a partition needs another outer pass when it has a predecessor with a
        # higher id: that predecessor was visited first and read stale values
        self.revisit = [False] * (self.count + 1)
        for i, succ in enumerate(self.successors, 1):
            for j in succ:
                if j < i:
                    self.revisit[j] = True
        self.loads = 0

    def files(self, i: int) -> PartitionFileSet:
        return PartitionFileSet(self.workdir, i, self.compress)

    def state_count(self, i: int) -> int:
        return self.counts[i - 1]

    @property
    def forward_acyclic(self) -> bool:
        return not any(self.revisit)

    def load(self, i: int) -> LoadedPartition:
        fs = self.files(i)
        if not fs.exists("matrix"):
            raise FormatError(f"missing matrix file {fs.path('matrix')}")
        part = load_partition(fs.chunks("matrix"), i)
        self.loads += 1
        n = part.num_states
        if n != self.state_count(i):
            raise FormatError(f"partition {i}: matrix holds {n} states, meta says "
                              f"{self.state_count(i)}")
        layout = [i] + self.successors[i - 1]
        offsets, off = {}, 0
        for j in layout:
            offsets[j] = off
            off += self.state_count(j)
        br = part.branches
        table = np.full(self.count + 1, -1, np.int64)
        sizes = np.zeros(self.count + 1, np.int64)
        for j, o in offsets.items():
            table[j] = o
            sizes[j] = self.state_count(j)
        bp = br["partition"].astype(np.int64)
        if len(br):
            if bp.min() < 1 or bp.max() > self.count or (table[bp] < 0).any():
                raise FormatError(f"partition {i}: branch into a partition not listed as successor")
            if (br["index"] >= sizes[bp]).any() or (br["index"] < 0).any():
                raise FormatError(f"partition {i}: branch index out of range")
        pos = table[bp] + br["index"].astype(np.int64)
        st, tr = part.states, part.transitions
        return LoadedPartition(
            i, st["transition_count"].astype(np.int64), st["first_transition"].astype(np.int64),
            tr["branch_count"].astype(np.int64), tr["first_branch"].astype(np.int64),
            np.ascontiguousarray(br["probability"]), np.ascontiguousarray(br["reward"]),
            pos, st["is_target"].astype(bool), layout, offsets)

    def gather(self, lp: LoadedPartition, kind: str, dtype: str,
               own: Optional[np.ndarray] = None) -> np.ndarray:
        """Concatenate the ``kind`` arrays of a partition and its successors."""
        parts = []
        for j in lp.layout:
            if j == lp.partition and own is not None:
                arr = own
            else:
                fs = self.files(j)
                if not fs.exists(kind):
                    raise DiskMdpError(f"missing {kind} file {fs.path(kind)}")
                arr = fs.load_array(kind, dtype)
            if len(arr) != self.state_count(j):
                raise FormatError(f"{self.files(j).path(kind)}: {len(arr)} entries for "
                                  f"{self.state_count(j)} states")
            parts.append(arr)
        return np.concatenate(parts) if parts else np.zeros(0, dtype)

    def initialize(self, fill: Callable[[int, LoadedPartition], None]) -> None:
        """Call ``fill`` once per non-empty partition (ascending), e.g. to write initial arrays."""
        for i in range(1, self.count + 1):
            if self.state_count(i):
                fill(i, self.load(i))

    def drive(self, visit: Callable[[int], bool], max_outer: Optional[int] = None) -> int:
        """Descending block sweeps until stable; returns the number of outer iterations.

        ``visit(i)`` must return True when partition ``i``'s own entries moved.
        """
        outer = 0
        changed = True
        while changed:
            if max_outer is not None and outer >= max_outer:
                raise NonConvergenceError(f"no convergence within {max_outer} outer iterations")
            outer += 1
            changed = False
            for i in range(self.count, 0, -1):
                if not self.state_count(i):
                    continue
                if visit(i) and self.revisit[i]:
                    changed = True
        return outer

    def remove(self, kind: str) -> None:
        for i in range(1, self.count + 1):
            self.files(i).clear(kind)
