from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class ConvergenceConfig:
    epsilon: float = DEFAULT_EPSILON
    max_outer_iterations: Optional[int] = None
    max_sweeps: int = 10_000_000

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be finite and positive, got {self.epsilon}")
        if self.max_outer_iterations is not None and self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be positive")
