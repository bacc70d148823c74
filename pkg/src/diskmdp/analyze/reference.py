"""Whole-model in-memory engine used as the oracle for the partitioned one.

Nothing here touches the disk: the reachable state space is built with a
plain breadth-first search and value iteration runs over one flat array.
It is only meant for models that fit comfortably in memory.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

from ..errors import NonConvergenceError
from ..lang.ast import PropertySpec
from ..lang.typecheck import TypedModel
from ..semantics import ExplicitState, enabled_transitions, initial_state, partition_of
from ..store.records import Branch, StateEnd, TransitionEnd, encode_records
from .config import ConvergenceConfig


@dataclass
class ExplicitMDP:
    """Reachable states in discovery order; transitions hold (probability, reward, target index)."""

    states: list[ExplicitState]
    transitions: list[list[list[tuple[float, float, int]]]]
    targets: list[bool]
    partitions: Optional[list[int]] = None

    @property
    def num_states(self) -> int:
        return len(self.states)

    def csr(self):
        """Flatten into (state_ptr, trans_ptr, prob, rew, target) arrays."""
        sp = [0]
        tp = [0]
        prob, rew, tgt = [], [], []
        for trans in self.transitions:
            for t in trans:
                for p, r, k in t:
                    prob.append(p)
                    rew.append(r)
                    tgt.append(k)
                tp.append(len(prob))
            sp.append(len(tp) - 1)
        return (np.array(sp, np.int64), np.array(tp, np.int64), np.array(prob, np.float64),
                np.array(rew, np.float64), np.array(tgt, np.int64))


def build_explicit(model: TypedModel, prop: Optional[PropertySpec] = None,
                   with_partitions: bool = True) -> ExplicitMDP:
    target = model.target_fn(prop) if prop is not None else (lambda s: False)
    s0 = initial_state(model)
    index = {s0: 0}
    states = [s0]
    transitions = []
    queue = deque([s0])
    while queue:
        s = queue.popleft()
        out = []
        for trans in enabled_transitions(model, s):
            row = []
            for p, r, t in trans:
                k = index.get(t)
                if k is None:
                    k = index[t] = len(states)
                    states.append(t)
                    queue.append(t)
                row.append((p, r, k))
            out.append(row)
        transitions.append(out)
    targets = [bool(target(s)) for s in states]
    parts = [partition_of(model, s) for s in states] if with_partitions else None
    return ExplicitMDP(states, transitions, targets, parts)


def encode_explicit(mdp: ExplicitMDP, partition: int = 1) -> bytes:
    """Matrix stream of the whole model as one partition."""
    def records():
        for k, trans in enumerate(mdp.transitions):
            for t in trans:
                for p, r, j in t:
                    yield Branch(p, r, partition, j)
                yield TransitionEnd()
            yield StateEnd(mdp.targets[k])
    return encode_records(records())


# -- value iteration ------------------------------------------------------------

@numba.njit(cache=True)
def _iterate(sp, tp, prob, rew, tgt, fixed, v, maximize, reward, eps, max_sweeps):
    n = sp.shape[0] - 1
    sweeps = 0
    decreases = 0
    out_of_range = 0
    while sweeps < max_sweeps:
        err = 0.0
        for s in range(n):
            if fixed[s] or sp[s] == sp[s + 1]:
                continue
            first = True
            best = 0.0
            for t in range(sp[s], sp[s + 1]):
                acc = 0.0
                for b in range(tp[t], tp[t + 1]):
                    if reward:
                        acc += prob[b] * (rew[b] + v[tgt[b]])
                    else:
                        acc += prob[b] * v[tgt[b]]
                if first or (maximize and acc > best) or (not maximize and acc < best):
                    best = acc
                first = False
            if best < v[s]:
                decreases += 1
            if not reward and (best < 0.0 or best > 1.0 + 1e-12):
                out_of_range += 1
            if best > 0.0 and best != v[s]:
                if np.isinf(best):
                    err = max(err, 1.0)
                else:
                    err = max(err, abs(best - v[s]) / max(v[s], best))
            v[s] = best
        sweeps += 1
        if err < eps:
            return sweeps, decreases, out_of_range, True
    return sweeps, decreases, out_of_range, False


@dataclass
class ReferenceResult:
    value: float
    values: np.ndarray
    sweeps: int
    decreases: int
    out_of_range: int


def _run(mdp: ExplicitMDP, v: np.ndarray, fixed: np.ndarray, maximize: bool, reward: bool,
         cfg: ConvergenceConfig) -> ReferenceResult:
    sp, tp, prob, rew, tgt = mdp.csr()
    sweeps, dec, oor, ok = _iterate(sp, tp, prob, rew, tgt, fixed, v, maximize, reward,
                                    cfg.epsilon, cfg.max_sweeps)
    if not ok:
        raise NonConvergenceError(f"reference value iteration did not converge in {sweeps} sweeps")
    return ReferenceResult(float(v[0]), v, sweeps, dec, oor)


def value_iteration_reference(mdp: ExplicitMDP, direction: str,
                              cfg: ConvergenceConfig = ConvergenceConfig(),
                              targets: Optional[Sequence[bool]] = None) -> ReferenceResult:
    """Gauss-Seidel iteration from 1 on targets and 0 elsewhere, ascending state order."""
    f = np.array(mdp.targets if targets is None else targets, dtype=bool)
    v = f.astype(np.float64)
    return _run(mdp, v, f, direction == "max", False, cfg)


def expected_reward_reference(mdp: ExplicitMDP, direction: str,
                              cfg: ConvergenceConfig = ConvergenceConfig()) -> ReferenceResult:
    """Expected reward until the first target visit; infinite outside the gating set.

    Maximising requires reaching the targets with probability one under every
    scheduler; minimising requires it under some scheduler.
    """
    f = np.array(mdp.targets, dtype=bool)
    gate = prob1(mdp, "min" if direction == "max" else "max")
    v = np.where(gate, 0.0, np.inf)
    fixed = f | ~gate
    return _run(mdp, v, fixed, direction == "max", True, cfg)


# -- graph fixpoints ------------------------------------------------------------

def _predecessors(mdp: ExplicitMDP) -> list[set[int]]:
    pred: list[set[int]] = [set() for _ in range(mdp.num_states)]
    for s, trans in enumerate(mdp.transitions):
        for t in trans:
            for _, _, k in t:
                pred[k].add(s)
    return pred


def _backward_closure(mdp: ExplicitMDP, seed: np.ndarray, blocked: np.ndarray) -> np.ndarray:
    """States with a path into ``seed`` that avoids ``blocked`` before arriving."""
    pred = _predecessors(mdp)
    reach = seed.copy()
    work = deque(np.flatnonzero(seed).tolist())
    while work:
        k = work.popleft()
        for s in pred[k]:
            if not reach[s] and not blocked[s]:
                reach[s] = True
                work.append(s)
    return reach


def prob0(mdp: ExplicitMDP, direction: str) -> np.ndarray:
    """States whose max (or min) probability of reaching a target is exactly zero."""
    f = np.array(mdp.targets, dtype=bool)
    n = mdp.num_states
    if direction == "max":
        return ~_backward_closure(mdp, f, np.zeros(n, bool))
    # min: positive under every scheduler iff every choice can keep the
    # probability positive; grown round by round until stable
    y = f.copy()
    changed = True
    while changed:
        changed = False
        for s, trans in enumerate(mdp.transitions):
            if y[s] or not trans:
                continue
            if all(any(y[k] for _, _, k in t) for t in trans):
                y[s] = True
                changed = True
    return ~y


def prob1(mdp: ExplicitMDP, direction: str) -> np.ndarray:
    """States whose max (or min) probability of reaching a target is exactly one."""
    f = np.array(mdp.targets, dtype=bool)
    if direction == "min":
        # some scheduler can, avoiding targets, reach a probability-zero state
        no = prob0(mdp, "min")
        return ~_backward_closure(mdp, no, f)
    z = np.ones(mdp.num_states, bool)
    while True:
        y = f.copy()
        changed = True
        while changed:
            changed = False
            for s, trans in enumerate(mdp.transitions):
                if y[s]:
                    continue
                for t in trans:
                    if all(z[k] for _, _, k in t) and any(y[k] for _, _, k in t):
                        y[s] = True
                        changed = True
                        break
        if (y == z).all():
            return y
        z = y
