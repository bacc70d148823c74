"""Partitioned disk-based state-space exploration with on-the-fly matrix creation.

Partitions are visited in ascending order, repeatedly, until an outer
iteration discovers no new state.  A visit has two phases:

1. *Index correction.*  Branches into other partitions were written with a
   negative preliminary index ``-k`` meaning "the k-th state appended to
   that partition's queue".  The successor partitions' ``updates`` files
   map queue positions to final state indices; the matrix is rewritten in
   one streaming pass with every preliminary index replaced.
2. *Breadth-first search.*  The partition's queue file is consumed, each
   entry's final index is appended to ``updates``, and every new state is
   expanded.  Local successors join the in-memory queue; cross successors
   are appended to the target partition's queue file.  Matrix records are
   streamed to disk as they are produced.

Only the state set of the partition being explored is held in memory.
"""
from __future__ import annotations

import logging
import os
import struct
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import DiskMdpError, ModelError
from .lang.ast import PartitionSpec, PropertySpec
from .lang.typecheck import TypedModel, with_partition
from .semantics import (ExplicitState, enabled_transitions, encode_state, initial_state,
                        partition_of, state_struct)
from .store.files import (KINDS, PartitionFileSet, PartitionMeta, iter_raw, write_meta)
from .store.partition import IndexCorrector
from .store.records import encode_compact

log = logging.getLogger(__name__)

_BRANCH = struct.Struct("<Bddii")
_U32 = struct.Struct("<I")
_STATE_END = (b"\x03\x00", b"\x03\x01")


@dataclass
class ExplorationConfig:
    workdir: Path
    compress: bool = False
    max_resident_states: Optional[int] = None
    compact_branches: bool = False


@dataclass
class ExplorationReport:
    partition_count: int
    state_counts: list[int]
    successors: list[list[int]]
    cross_edge_count: int
    incoming_cross_edges: list[int]
    outer_iterations: int
    peak_resident_states: int
    bytes_on_disk: dict[str, int]
    matrix_bytes_raw: int
    seconds: float
    resident_bound_exceeded: bool = False

    @property
    def states_total(self) -> int:
        return sum(self.state_counts)

    @property
    def n_max(self) -> int:
        return max(self.state_counts, default=0)

    @property
    def s_max(self) -> int:
        return max((len(s) for s in self.successors), default=0)

    @property
    def c_max(self) -> int:
        return max(self.incoming_cross_edges, default=0)

    @property
    def forward_acyclic(self) -> bool:
        return all(j > i for i, succ in enumerate(self.successors, 1) for j in succ)


class Explorer:
    """State machine over the partition file sets of one working directory."""

    def __init__(self, model: TypedModel, prop: Optional[PropertySpec], cfg: ExplorationConfig):
        self.model = model
        self.cfg = cfg
        self.workdir = Path(cfg.workdir)
        self.width = len(model.variables)
        if self.width == 0:
            raise ModelError("model declares no variables")
        self.target = model.target_fn(prop) if prop is not None else (lambda s: False)
        self.count = 1
        self.meta: dict[int, PartitionMeta] = {}
        self.successors: dict[int, set[int]] = {}
        self.incoming: dict[int, int] = {}
        self.cross_edges = 0
        self.resident = 0
        self.peak_resident = 0
        self.outer_iterations = 0

    def files(self, i: int) -> PartitionFileSet:
        return PartitionFileSet(self.workdir, i, self.cfg.compress)

    def part(self, i: int) -> PartitionMeta:
        m = self.meta.get(i)
        if m is None:
            m = self.meta[i] = PartitionMeta()
        return m

    def _hold(self, n: int) -> None:
        self.resident += n
        if self.resident > self.peak_resident:
            self.peak_resident = self.resident

    # -- driver --------------------------------------------------------------
    def run(self) -> ExplorationReport:
        start = time.perf_counter()
        self.workdir.mkdir(parents=True, exist_ok=True)
        if any(self.workdir.iterdir()):
            raise DiskMdpError(f"working directory {self.workdir} is not empty")
        s0 = initial_state(self.model)
        if partition_of(self.model, s0) != 1:
            raise ModelError("the partition expression must map the initial state to 1")
        with self.files(1).writer("queue") as w:
            w.write(encode_state(s0))
        self.part(1).qlen = 1

        changed = True
        while changed:
            changed = False
            self.outer_iterations += 1
            i = 1
            while i <= self.count:  # count may grow while iterating
                self.correct_indices(i)
                if self.explore_partition(i):
                    changed = True
                i += 1
            self._write_meta()
            log.debug("exploration iteration %d: %d partitions, %d states", self.outer_iterations,
                      self.count, sum(m.state_count for m in self.meta.values()))
        return self._report(time.perf_counter() - start)

    def _write_meta(self) -> None:
        for i, succ in self.successors.items():
            self.part(i).successors = sorted(succ)
        write_meta(self.workdir, [self.part(i) for i in range(1, self.count + 1)])

    # -- phase 1 -------------------------------------------------------------
    def correct_indices(self, i: int) -> int:
        """Replace preliminary indices in partition ``i``'s matrix; returns the patch count."""
        succ = self.successors.get(i)
        fs = self.files(i)
        path = fs.path("matrix")
        if not succ or not path.exists():
            return 0
        updates = {j: self.files(j).load_updates() for j in sorted(succ)}
        old = path.with_name(path.name + ".old")
        os.replace(path, old)
        corrector = IndexCorrector(updates)
        with fs.writer("matrix", append=False) as out:
            for chunk in corrector.correct(iter_raw(old, self.cfg.compress)):
                out.write(chunk)
        old.unlink()
        return corrector.patched

    # -- phase 2 -------------------------------------------------------------
    def explore_partition(self, i: int) -> bool:
        """Breadth-first search inside partition ``i``; True if any state was expanded."""
        fs, meta = self.files(i), self.part(i)
        pack_state = state_struct(self.width).pack

        index: dict[ExplicitState, int] = {}
        states: list[ExplicitState] = []
        for s in fs.iter_states("states", self.width):
            index[s] = len(states)
            states.append(s)
        self._hold(len(states))

        queue: deque[int] = deque()
        states_out = fs.writer("states")
        try:
            with fs.writer("updates", append=False) as updates_out:
                for s in fs.iter_states("queue", self.width):
                    k = index.get(s)
                    if k is None:
                        k = index[s] = len(states)
                        states.append(s)
                        states_out.write(pack_state(*s))
                        queue.append(k)
                        self._hold(1)
                    updates_out.write(_U32.pack(k))
            fs.clear("queue")
            meta.qlen = 0
            expanded = bool(queue)
            if expanded:
                self._bfs(i, index, states, queue, states_out)
        finally:
            states_out.close()
        meta.state_count = len(states)
        self.resident -= len(states)
        if self.cfg.max_resident_states and self.peak_resident > self.cfg.max_resident_states:
            log.warning("resident explicit states %d exceeded bound %d", self.peak_resident,
                        self.cfg.max_resident_states)
        return expanded

    def _bfs(self, i, index, states, queue, states_out) -> None:
        model = self.model
        pack_state = state_struct(self.width).pack
        pack_branch = _BRANCH.pack
        compact = self.cfg.compact_branches
        succ = self.successors.setdefault(i, set())
        cross_writers: dict[int, object] = {}
        matrix = self.files(i).writer("matrix")
        try:
            while queue:
                k = queue.popleft()
                s = states[k]
                for trans in enabled_transitions(model, s):
                    for p, r, t in trans:
                        j = partition_of(model, t)
                        if j == i:
                            kt = index.get(t)
                            if kt is None:
                                kt = index[t] = len(states)
                                states.append(t)
                                states_out.write(pack_state(*t))
                                queue.append(kt)
                                self._hold(1)
                            if compact and p == 1.0 and r == 0.0:
                                matrix.write(encode_compact(kt))
                            else:
                                matrix.write(pack_branch(1, p, r, i, kt))
                        else:
                            succ.add(j)
                            self.count = max(self.count, j)
                            w = cross_writers.get(j)
                            if w is None:
                                w = cross_writers[j] = self.files(j).writer("queue")
                            w.write(pack_state(*t))
                            target = self.part(j)
                            target.qlen += 1
                            matrix.write(pack_branch(1, p, r, j, -target.qlen))
                            self.cross_edges += 1
                            self.incoming[j] = self.incoming.get(j, 0) + 1
                    matrix.write(b"\x02")
                matrix.write(_STATE_END[1 if self.target(s) else 0])
        finally:
            matrix.close()
            for w in cross_writers.values():
                w.close()

    # -- report ----------------------------------------------------------------
    def _report(self, seconds: float) -> ExplorationReport:
        counts = [self.part(i).state_count for i in range(1, self.count + 1)]
        succ = [sorted(self.successors.get(i, ())) for i in range(1, self.count + 1)]
        incoming = [self.incoming.get(i, 0) for i in range(1, self.count + 1)]
        sizes = disk_usage(self.workdir)
        raw = matrix_raw_bytes(self.workdir, self.count, self.cfg.compress)
        bound = self.cfg.max_resident_states
        return ExplorationReport(self.count, counts, succ, self.cross_edges, incoming,
                                 self.outer_iterations, self.peak_resident, sizes, raw, seconds,
                                 bool(bound and self.peak_resident > bound))


def disk_usage(workdir: Path) -> dict[str, int]:
    sizes = {kind: 0 for kind in KINDS}
    for p in Path(workdir).glob("p*.*"):
        kind = p.name.split(".")[1]
        sizes[kind] = sizes.get(kind, 0) + p.stat().st_size
    return sizes


def matrix_raw_bytes(workdir: Path, count: int, compress: bool) -> int:
    total = 0
    for i in range(1, count + 1):
        fs = PartitionFileSet(workdir, i, compress)
        if fs.exists("matrix"):
            total += sum(len(c) for c in fs.chunks("matrix")) if compress \
                else fs.path("matrix").stat().st_size
    return total


def explore(model: TypedModel, part: Optional[PartitionSpec], prop: Optional[PropertySpec],
            cfg: ExplorationConfig) -> ExplorationReport:
    """Explore ``model`` into ``cfg.workdir``; ``part`` overrides the model's partitioning."""
    if part is not None:
        model = with_partition(model, part)
    return Explorer(model, prop, cfg).run()
