"""Explore, precompute (rewards only) and iterate, with per-phase timing."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..explore import ExplorationConfig, ExplorationReport, explore
from ..lang.ast import PartitionSpec, PropertySpec
from ..lang.typecheck import TypedModel
from .blocks import PartitionedWorkdir
from .config import ConvergenceConfig
from .partitioned import (IterationStats, ValueResult, expected_reward_partitioned,
                          partitioned_value_iteration)


@dataclass
class AnalysisReport:
    value: float
    outer_iterations: int
    inner_sweeps: int
    check_seconds: float
    stats: IterationStats
    exploration: Optional[ExplorationReport] = None

    @property
    def explore_seconds(self) -> float:
        return self.exploration.seconds if self.exploration else 0.0

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


def analyze_workdir(workdir: Path, prop: PropertySpec,
                    cfg: ConvergenceConfig = ConvergenceConfig()) -> AnalysisReport:
    """Run the analysis on an already explored working directory."""
    start = time.perf_counter()
    wd = PartitionedWorkdir(Path(workdir))
    if prop.is_reward:
        res: ValueResult = expected_reward_partitioned(wd, prop.direction, cfg)
    else:
        res = partitioned_value_iteration(wd, prop.direction, cfg)
    seconds = time.perf_counter() - start
    return AnalysisReport(res.value, res.stats.outer_iterations, res.stats.inner_sweeps, seconds,
                          res.stats)


def check(model: TypedModel, part: Optional[PartitionSpec], prop: PropertySpec,
          cfg: ConvergenceConfig, workdir: Path, compress: bool = False) -> AnalysisReport:
    exploration = explore(model, part, prop, ExplorationConfig(Path(workdir), compress))
    report = analyze_workdir(workdir, prop, cfg)
    report.exploration = exploration
    return report
