"""Deterministic simulator and statistical toolkit for two token-based
plurality consensus protocols over round-synchronous communication
patterns, with oracles that cross-check the dynamics against independent
random walks.
"""

from .balance import (
    BalanceConfig,
    BalanceRunResult,
    balance_memory_bits,
    balance_step,
    plurality_guess,
    required_gamma_balance,
    run_balance,
)
from .graphs import Graph, build_graph, load_edge_list, save_edge_list, spectral_gap
from .harness import ExperimentSpec, run_sweep, scaling_report
from .kernels import BACKEND
from .oracle import (
    CounterThresholds,
    StatTestReport,
    WalkEnsemble,
    chernoff_tail_check,
    counter_thresholds,
    marginal_equality_test,
    negative_association_test,
    walk_step,
)
from .patterns import (
    ActiveEdgeSet,
    PatternSpec,
    empirical_pmin,
    generate,
    max_active_degree,
)
from .records import RunRecord
from .shuffle import (
    ShuffleConfig,
    ShuffleRunResult,
    broadcast_step,
    required_gamma,
    run_shuffle,
    shuffle_memory_bits,
    shuffle_step,
    update_step,
)
from .smoothing import (
    MixingEstimate,
    TransitionMatrix,
    WindowProduct,
    estimate_mixing_time,
    is_smoothing,
    transition_from_active,
    window_discrepancy,
    window_product,
)

__version__ = "0.1.0"
