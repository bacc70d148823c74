"""Value iteration (in-memory reference and block-iterative) and graph precomputation."""
from .blocks import PartitionedWorkdir
from .config import DEFAULT_EPSILON, ConvergenceConfig
from .partitioned import (IterationStats, ValueResult, expected_reward_partitioned,
                          partitioned_value_iteration, precompute_prob0, precompute_prob1)
from .pipeline import AnalysisReport, analyze_workdir, check
from .reference import (ExplicitMDP, ReferenceResult, build_explicit, encode_explicit,
                        expected_reward_reference, prob0, prob1, value_iteration_reference)

__all__ = [
    "PartitionedWorkdir", "DEFAULT_EPSILON", "ConvergenceConfig", "IterationStats", "ValueResult",
    "expected_reward_partitioned", "partitioned_value_iteration", "precompute_prob0",
    "precompute_prob1", "AnalysisReport", "analyze_workdir", "check", "ExplicitMDP",
    "ReferenceResult", "build_explicit", "encode_explicit", "expected_reward_reference", "prob0",
    "prob1", "value_iteration_reference",
]
