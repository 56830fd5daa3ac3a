"""Minimax defender strategies against misinformation campaigns over advertising channels."""

from .disjoint import FtplConfig, ftpl_adversarial, ftpl_asymmetric, ftpl_solve, iterations_for_epsilon
from .errors import ConfigError, DomainError, InvalidStrategyError, ResourceError, StructureError
from .model import (
    Adversarial,
    GameInstance,
    Known,
    MarginalVector,
    Marginals,
    MixedStrategy,
    Samples,
    adversarial_extend,
    blocked_influence,
    disjoint_decompose,
    monte_carlo_payoff,
    multilinear_extension,
    multilinear_gradient,
    payoff,
    payoff_vs_mixed,
    substitute_marginals,
    validate_instance,
)
from .nondisjoint import (
    MirrorConfig,
    greedy_best_response,
    og_adversarial,
    og_asymmetric,
    online_gradient_solve,
    regret_constants,
    sample_count_asymmetric,
)
from .experiments import ExperimentConfig, run_budget_sweep, run_gap_table, run_uncertainty_suite
from .generate import generate_instance
from .oracles import (
    exact_attacker_best_response,
    exact_defender_best_response,
    matrix_game_value,
    optimality_gap,
)

__version__ = "0.1.0"
