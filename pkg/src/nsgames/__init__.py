"""Simulation and verification tools for no-signaling guessing games."""

from .behavior import (
    Behavior,
    BudgetExceededError,
    EquivalenceReport,
    FnsReport,
    FunctionTuple,
    NSReport,
    check_fns,
    check_functional_locality_equivalence,
    check_no_signaling,
    functions_from_deterministic,
    induced_behavior,
    is_deterministic_extremal,
    local_product_box,
    pr_box,
    signaling_box,
    uniform_noise_box,
)
from .bitstream import BitStream, EquivalenceWitness, eventually_equal
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    azuma_bound,
    invariance_test,
    martingale_audit,
    run_experiment,
    wilson_interval,
)
from .game import (
    GameSpec,
    TrialRecord,
    generate_inputs,
    player_view,
    run_trial,
    target_bit,
    winner_threshold,
)
from .oracle import (
    ChoiceOracle,
    ClassHandle,
    canonical_representative,
    class_of,
    disagreement_bound,
)
from .strategies import (
    CheatStrategy,
    FnsStrategy,
    LocalRandomStrategy,
    LocalTableStrategy,
    SharedMixtureStrategy,
    Strategy,
    all_tables,
    build_strategy,
    exact_table_win_probability,
    parse_strategy_arg,
)

__all__ = [
    "Behavior",
    "BitStream",
    "BudgetExceededError",
    "CheatStrategy",
    "ChoiceOracle",
    "ClassHandle",
    "EquivalenceReport",
    "EquivalenceWitness",
    "ExperimentConfig",
    "ExperimentResult",
    "FnsReport",
    "FnsStrategy",
    "FunctionTuple",
    "GameSpec",
    "LocalRandomStrategy",
    "LocalTableStrategy",
    "NSReport",
    "SharedMixtureStrategy",
    "Strategy",
    "TrialRecord",
    "all_tables",
    "azuma_bound",
    "build_strategy",
    "canonical_representative",
    "check_fns",
    "check_functional_locality_equivalence",
    "check_no_signaling",
    "class_of",
    "disagreement_bound",
    "eventually_equal",
    "exact_table_win_probability",
    "functions_from_deterministic",
    "generate_inputs",
    "induced_behavior",
    "invariance_test",
    "is_deterministic_extremal",
    "local_product_box",
    "martingale_audit",
    "parse_strategy_arg",
    "player_view",
    "pr_box",
    "run_experiment",
    "run_trial",
    "signaling_box",
    "target_bit",
    "uniform_noise_box",
    "winner_threshold",
    "wilson_interval",
]
