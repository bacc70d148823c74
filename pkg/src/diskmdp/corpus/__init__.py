"""Bundled example models with their known answers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional


@dataclass(frozen=True)
class CorpusCase:
    model: str
    prop: str
    expected: float
    tolerance: float
    note: str = ""


@dataclass(frozen=True)
class CorpusModel:
    name: str
    forward_acyclic: bool
    states: Optional[int]          # reachable states with default constants
    small: dict = field(default_factory=dict)   # constants for quick runs
    small_states: Optional[int] = None

    @property
    def filename(self) -> str:
        return f"{self.name}.mdp"

    def text(self) -> str:
        return resources.files(__package__).joinpath(self.filename).read_text("utf-8")


def _brp_fail(n: int, frame_loss: float, ack_loss: float = 0.01, attempts: int = 5) -> float:
    per_attempt = frame_loss + (1 - frame_loss) * ack_loss
    return 1 - (1 - per_attempt ** attempts) ** n


MODELS = {
    m.name: m for m in [
        CorpusModel("coin", True, 3),
        CorpusModel("die", False, 13),
        CorpusModel("geometric", True, 2),
        CorpusModel("infinite", True, 3),
        CorpusModel("brp", True, 124250, {"N": 20}, 4250),
        CorpusModel("consensus", False, 468),
    ]
}

CASES = [
    CorpusCase("coin", "p_heads", 0.5, 1e-8),
    CorpusCase("coin", "p_heads_min", 0.5, 1e-8),
    CorpusCase("die", "six", 1 / 6, 1e-6, "p = 1/4 + p/4 recurrence"),
    CorpusCase("die", "six_min", 1 / 6, 1e-6),
    CorpusCase("die", "flips", 11 / 3, 1e-6, "expected coin flips"),
    CorpusCase("geometric", "cost", 2.0, 1e-6, "geometric series"),
    CorpusCase("geometric", "cost_min", 2.0, 1e-6),
    CorpusCase("infinite", "cost", math.inf, 0.0),
    CorpusCase("infinite", "cost_min", math.inf, 0.0),
    CorpusCase("infinite", "reach", 0.5, 1e-8),
    CorpusCase("brp", "fail_max", _brp_fail(20, 0.1), 1e-9, "N=20, cheap channel"),
    CorpusCase("brp", "fail_min", _brp_fail(20, 0.02), 1e-9, "N=20, safe channel"),
    CorpusCase("consensus", "finish", 1.0, 1e-6),
    CorpusCase("consensus", "finish_max", 1.0, 1e-6),
]


def brp_failure_probability(n: int, frame_loss: float) -> float:
    """Closed form for the brp model: some packet loses all five attempts."""
    return _brp_fail(n, frame_loss)


def model_text(name: str) -> str:
    return MODELS[name].text()
