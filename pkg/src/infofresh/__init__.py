"""Information freshness toolkit.

Quantifies how much information delivered samples of a Markov source still
carry as they age, solves for the optimal sampling threshold policy in
front of a FIFO single-server queue, and compares policies by exact
renewal-reward analysis and seeded Monte-Carlo simulation.
"""

from .analytic import (
    BudgetExceeded,
    OracleResult,
    brute_force_optimum,
    random_instances,
    renewal_average,
    zero_wait_average,
)
from .config import ConfigError, ExperimentConfig
from .service import ServiceTimeDist
from .simulator import (
    PolicySpec,
    RunSummary,
    SequenceExhausted,
    SimulationTrace,
    Threshold,
    Uniform,
    ZeroWait,
    age_histogram,
    estimate_time_average,
    replay,
    simulate,
)
from .solver import (
    BracketInvalid,
    CycleStats,
    SolverResult,
    ThresholdUnreachable,
    WaitingFunction,
    cycle_stats,
    h_of_c,
    optimal_wait,
    solve_beta,
    solve_mi,
    zero_waiting,
)
from .sources import (
    Affine,
    AgePenalty,
    BinarySymmetric,
    GaussianAR1,
    MarkovSourceModel,
    NegatedMI,
    PenaltyTable,
    Tabulated,
    binary_entropy,
    metric_function,
    mutual_information,
    penalty_value,
    sample_source_path,
)

__version__ = "0.1.0"

__all__ = [
    "Affine",
    "AgePenalty",
    "BinarySymmetric",
    "BracketInvalid",
    "BudgetExceeded",
    "ConfigError",
    "CycleStats",
    "ExperimentConfig",
    "GaussianAR1",
    "MarkovSourceModel",
    "NegatedMI",
    "OracleResult",
    "PenaltyTable",
    "PolicySpec",
    "RunSummary",
    "SequenceExhausted",
    "ServiceTimeDist",
    "SimulationTrace",
    "SolverResult",
    "Tabulated",
    "Threshold",
    "ThresholdUnreachable",
    "Uniform",
    "WaitingFunction",
    "ZeroWait",
    "age_histogram",
    "binary_entropy",
    "brute_force_optimum",
    "cycle_stats",
    "estimate_time_average",
    "h_of_c",
    "metric_function",
    "mutual_information",
    "optimal_wait",
    "penalty_value",
    "random_instances",
    "renewal_average",
    "replay",
    "sample_source_path",
    "simulate",
    "solve_beta",
    "solve_mi",
    "zero_wait_average",
    "zero_waiting",
]
