"""On-the-fly expansion of a typed model into explicit MDP states and transitions.

An explicit state is a tuple of ints, one per declared variable, in
declaration order.  On disk it is stored as little-endian int32 values.
"""
from __future__ import annotations

import struct
from functools import lru_cache
from typing import NamedTuple

from .errors import EvaluationError, ModelError
from .lang.ast import PropertySpec
from .lang.typecheck import TypedModel

ExplicitState = tuple[int, ...]

PROBABILITY_TOLERANCE = 1e-9


class ExpandedBranch(NamedTuple):
    probability: float
    reward: float
    target: ExplicitState


ExpandedTransition = tuple[ExpandedBranch, ...]


@lru_cache(maxsize=None)
def state_struct(width: int) -> struct.Struct:
    return struct.Struct(f"<{width}i")


def encode_state(s: ExplicitState) -> bytes:
    return state_struct(len(s)).pack(*s)


def decode_state(data: bytes, width: int) -> ExplicitState:
    return state_struct(width).unpack(data)


def initial_state(model: TypedModel) -> ExplicitState:
    return tuple(model.init)


def _describe(model: TypedModel, s: ExplicitState) -> str:
    return "(" + ", ".join(f"{n}={v}" for n, v in zip(model.variables, s)) + ")"


def enabled_transitions(model: TypedModel, s: ExplicitState) -> list[ExpandedTransition]:
    """All transitions of ``s``, one per command whose guard holds.

    Zero-probability branches are dropped; duplicate targets are kept.
    """
    result = []
    lower, upper = model.lower, model.upper
    try:
        for cmd in model.commands:
            if not cmd.guard(s):
                continue
            branches = []
            total = 0.0
            for alt in cmd.alternatives:
                p = float(alt.probability(s))
                if p < 0.0:
                    raise ModelError(f"negative probability {p} in state {_describe(model, s)}")
                total += p
                if p == 0.0:
                    continue
                t = alt.update(s)
                for k, v in enumerate(t):
                    if not lower[k] <= v <= upper[k]:
                        raise ModelError(
                            f"update sets {model.variables[k]}={v} outside "
                            f"{lower[k]}..{upper[k]} from state {_describe(model, s)}")
                branches.append(ExpandedBranch(p, float(alt.reward(s)), t))
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                raise ModelError(f"probabilities sum to {total!r}, not 1, in state "
                                 f"{_describe(model, s)} (command at line "
                                 f"{cmd.source.pos[0] if cmd.source.pos else '?'})")
            result.append(tuple(branches))
    except EvaluationError as exc:
        raise EvaluationError(f"{exc} in state {_describe(model, s)}") from None
    return result


def partition_of(model: TypedModel, s: ExplicitState) -> int:
    try:
        i = model.partition_fn(s)
    except EvaluationError as exc:
        raise EvaluationError(f"{exc} in state {_describe(model, s)}") from None
    if not 1 <= i <= model.partition_bound:
        raise ModelError(f"partition expression yields {i} outside 1..{model.partition_bound} "
                         f"in state {_describe(model, s)}")
    return i


def is_target(model: TypedModel, s: ExplicitState, prop: PropertySpec) -> bool:
    return bool(model.target_fn(prop)(s))
