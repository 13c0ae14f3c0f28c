"""Competing selective sweeps in a four-haplotype Moran model.

Exact event-driven simulation of two linked beneficial mutations with
recombination, plus the deterministic/branching machinery that predicts
the double mutant's fixation probability in large populations.
"""

from .model import (
    AbsorbingStateError,
    ModelParams,
    PopulationState,
    TransitionRateTable,
    TYPES,
    marginal_rates,
    replacement_probability,
    simulate_until,
    step,
    table_marginals,
    transition_rates,
)
from .scenarios import (
    ARRIVAL_IN_00,
    ARRIVAL_IN_01,
    ScenarioConfig,
    TrialOutcome,
    build_initial_state,
    draw_arrival,
    in_first_half,
    run_fixation_trial,
)
from .deterministic import (
    LogisticCurve,
    PhaseSchedule,
    consistency_check,
    logistic,
    phase_schedule,
)
from .forward import (
    BirthDeathLattice,
    ForwardSolution,
    beta_rates,
    establishment_probability_mc,
    solve_forward,
    theorem_fixation_prob,
)
from .branching import (
    BinaryBranching,
    CaseOneBState,
    case1b_fixation_prob,
    extinction_bounds,
    extinction_frequency_mc,
    extinction_probability,
    generating_function,
    hitting_time_density,
    moderate_n_fixation_prob,
)
from .harness import (
    EstimateWithCI,
    SweepRow,
    TrialStats,
    estimate_fixation_probability,
    run_trials_from_state,
    sweep,
)
from .rng import TrialRng, derive_stream_seed

__all__ = [
    "AbsorbingStateError",
    "ARRIVAL_IN_00",
    "ARRIVAL_IN_01",
    "BinaryBranching",
    "BirthDeathLattice",
    "CaseOneBState",
    "EstimateWithCI",
    "ForwardSolution",
    "LogisticCurve",
    "ModelParams",
    "PhaseSchedule",
    "PopulationState",
    "ScenarioConfig",
    "SweepRow",
    "TransitionRateTable",
    "TrialOutcome",
    "TrialRng",
    "TrialStats",
    "TYPES",
    "beta_rates",
    "build_initial_state",
    "case1b_fixation_prob",
    "consistency_check",
    "derive_stream_seed",
    "draw_arrival",
    "establishment_probability_mc",
    "estimate_fixation_probability",
    "extinction_bounds",
    "extinction_frequency_mc",
    "extinction_probability",
    "generating_function",
    "hitting_time_density",
    "in_first_half",
    "logistic",
    "marginal_rates",
    "moderate_n_fixation_prob",
    "phase_schedule",
    "replacement_probability",
    "run_fixation_trial",
    "run_trials_from_state",
    "simulate_until",
    "solve_forward",
    "step",
    "sweep",
    "table_marginals",
    "theorem_fixation_prob",
    "transition_rates",
]

__version__ = "0.1.0"
