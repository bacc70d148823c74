"""Block-iterative value iteration and graph precomputation over partition files."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import DiskMdpError, NonConvergenceError
from . import kernels
from .blocks import LoadedPartition, PartitionedWorkdir
from .config import ConvergenceConfig

VALUES = "values"
MASK_DTYPE = "u1"


@dataclass
class IterationStats:
    outer_iterations: int = 0
    inner_sweeps: int = 0
    partition_visits: int = 0
    decreases: int = 0
    out_of_range: int = 0
    sweeps_per_visit: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class ValueResult:
    value: float
    stats: IterationStats


def _as_workdir(files) -> PartitionedWorkdir:
    return files if isinstance(files, PartitionedWorkdir) else PartitionedWorkdir(Path(files))


# -- value iteration ------------------------------------------------------------

def _solve(wd: PartitionedWorkdir, direction: str, cfg: ConvergenceConfig, reward: bool,
           active_of) -> ValueResult:
    stats = IterationStats()
    maximize = direction == "max"

    def visit(i: int) -> bool:
        lp = wd.load(i)
        vals = wd.gather(lp, VALUES, "<f8")
        active = active_of(i, lp)
        sweeps, moved, dec, oor, ok = kernels.gauss_seidel(
            lp.tc, lp.ft, lp.bc, lp.fb, lp.prob, lp.rew, lp.pos, active, vals, maximize, reward,
            cfg.epsilon, cfg.max_sweeps)
        stats.inner_sweeps += sweeps
        stats.partition_visits += 1
        stats.decreases += dec
        stats.out_of_range += oor
        stats.sweeps_per_visit.append((i, sweeps))
        if not ok:
            raise NonConvergenceError(f"partition {i}: no convergence within {sweeps} sweeps")
        wd.files(i).store_values(vals[:lp.num_states])
        return moved

    stats.outer_iterations = wd.drive(visit, cfg.max_outer_iterations)
    value = float(wd.files(1).load_values()[0]) if wd.state_count(1) else 0.0
    return ValueResult(value, stats)


def partitioned_value_iteration(files, direction: str,
                                cfg: ConvergenceConfig = ConvergenceConfig()) -> ValueResult:
    """Max or min probability of reaching a target, read off at state 0 of partition 1."""
    wd = _as_workdir(files)

    def init(i: int, lp: LoadedPartition) -> None:
        wd.files(i).store_values(lp.is_target.astype(np.float64))

    wd.initialize(init)
    return _solve(wd, direction, cfg, False,
                  lambda i, lp: (~lp.is_target).astype(np.uint8))


def expected_reward_partitioned(files, direction: str,
                                cfg: ConvergenceConfig = ConvergenceConfig()) -> ValueResult:
    """Expected reward accumulated until the first target state; ``inf`` when not finite.

    The gating set is the probability-one set of the opposite direction: for
    a maximum every scheduler must reach the targets almost surely, for a
    minimum some scheduler must.
    """
    wd = _as_workdir(files)
    gate_kind = precompute_prob1(wd, "min" if direction == "max" else "max")
    if wd.state_count(1) and not wd.files(1).load_array(gate_kind, MASK_DTYPE)[0]:
        return ValueResult(math.inf, IterationStats())

    def init(i: int, lp: LoadedPartition) -> None:
        gate = wd.files(i).load_array(gate_kind, MASK_DTYPE).astype(bool)
        wd.files(i).store_values(np.where(gate, 0.0, np.inf))

    wd.initialize(init)

    def active(i: int, lp: LoadedPartition) -> np.ndarray:
        gate = wd.files(i).load_array(gate_kind, MASK_DTYPE).astype(bool)
        return (gate & ~lp.is_target).astype(np.uint8)

    return _solve(wd, direction, cfg, True, active)


# -- graph precomputation -----------------------------------------------------------

def _grow(wd: PartitionedWorkdir, kind: str, rule: int, z_kind: Optional[str] = None,
          block_targets: bool = False, max_outer: Optional[int] = None) -> int:
    """Grow the mask files ``kind`` to their least fixpoint under ``rule``."""
    def visit(i: int) -> bool:
        lp = wd.load(i)
        y = wd.gather(lp, kind, MASK_DTYPE)
        z = wd.gather(lp, z_kind, MASK_DTYPE) if z_kind else np.ones(len(y), np.uint8)
        blocked = lp.is_target.astype(np.uint8) if block_targets \
            else np.zeros(lp.num_states, np.uint8)
        grew = kernels.grow_set(lp.tc, lp.ft, lp.bc, lp.fb, lp.pos, y, z, blocked, rule)
        if grew:
            wd.files(i).store_array(kind, y[:lp.num_states], MASK_DTYPE)
        return grew

    return wd.drive(visit, max_outer)


def _write_masks(wd: PartitionedWorkdir, kind: str, make) -> None:
    wd.initialize(lambda i, lp: wd.files(i).store_array(kind, make(i, lp), MASK_DTYPE))


def _complement(wd: PartitionedWorkdir, src: str, dst: str) -> None:
    for i in range(1, wd.count + 1):
        if wd.state_count(i):
            m = wd.files(i).load_array(src, MASK_DTYPE)
            wd.files(i).store_array(dst, (m == 0).astype(np.uint8), MASK_DTYPE)


def precompute_prob0(files, direction: str) -> str:
    """Mark states whose reachability probability is exactly 0; returns the mask file kind."""
    wd = _as_workdir(files)
    out = f"prob0{direction}"
    _write_masks(wd, "reach", lambda i, lp: lp.is_target.astype(np.uint8))
    rule = kernels.EXISTS if direction == "max" else kernels.ALL_CHOICES
    _grow(wd, "reach", rule)
    _complement(wd, "reach", out)
    wd.remove("reach")
    return out


def precompute_prob1(files, direction: str) -> str:
    """Mark states whose reachability probability is exactly 1; returns the mask file kind."""
    wd = _as_workdir(files)
    out = f"prob1{direction}"
    if direction == "min":
        # complement of: can reach a min-probability-zero state while avoiding targets
        no = precompute_prob0(wd, "min")
        _write_masks(wd, "escape", lambda i, lp: wd.files(i).load_array(no, MASK_DTYPE))
        _grow(wd, "escape", kernels.EXISTS, block_targets=True)
        _complement(wd, "escape", out)
        wd.remove("escape")
        return out
    if direction != "max":
        raise DiskMdpError(f"unknown direction {direction!r}")
    # greatest fixpoint over Z of the least fixpoint over Y
    _write_masks(wd, "stay", lambda i, lp: np.ones(lp.num_states, np.uint8))
    while True:
        _write_masks(wd, "hit", lambda i, lp: lp.is_target.astype(np.uint8))
        _grow(wd, "hit", kernels.STAY_AND_HIT, z_kind="stay")
        shrunk = False
        for i in range(1, wd.count + 1):
            if not wd.state_count(i):
                continue
            fs = wd.files(i)
            hit = fs.load_array("hit", MASK_DTYPE)
            if int(hit.sum()) != int(fs.load_array("stay", MASK_DTYPE).sum()):
                shrunk = True
            fs.store_array("stay", hit, MASK_DTYPE)
        if not shrunk:
            break
    for i in range(1, wd.count + 1):
        fs = wd.files(i)
        if fs.exists("stay"):
            fs.path("stay").replace(fs.path(out))
    wd.remove("hit")
    return out
