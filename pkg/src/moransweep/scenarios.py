"""Initial conditions and complete fixation trials for overlapping sweeps.

A scenario places the single carrier of the newer mutation into a
population where the older sweep has progressed to U carriers, either as
a 10 individual (mutation in a 00 background) or as an 11 individual
(mutation in a 01 background).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import _kernels
from .model import ModelParams, PopulationState, TYPES
from .rng import TrialRng, as_seed

ARRIVAL_IN_00 = "in_00"
ARRIVAL_IN_01 = "in_01"

DEFAULT_EVENT_CAP = 10**12


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment: model parameters plus the arrival composition.

    Exactly one of `zeta` and `u_count` pins the progress of the older
    sweep; zeta means the older type sits at frequency (2N)^-zeta, i.e.
    u_count = round((2N)^(1-zeta)) clamped to [1, 2N-2].
    """

    params: ModelParams
    arrival_type: str = ARRIVAL_IN_00
    zeta: float | None = None
    u_count: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.arrival_type not in (ARRIVAL_IN_00, ARRIVAL_IN_01):
            raise ValueError(f"unknown arrival_type {self.arrival_type!r}")
        if (self.zeta is None) == (self.u_count is None):
            raise ValueError("specify exactly one of zeta and u_count")
        if self.zeta is not None and not 0.0 < self.zeta < 1.0:
            raise ValueError(f"zeta must be in (0, 1), got {self.zeta}")

    @property
    def resolved_u(self) -> int:
        """Number of carriers of the older mutation at arrival time."""
        if self.u_count is not None:
            return int(self.u_count)
        two_n = self.params.two_n
        u = round(two_n ** (1.0 - self.zeta))
        return int(min(max(u, 1), two_n - 2))


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one run to fixation."""

    fixed_type: str | None
    t_fix: float
    events: int
    censored: bool
    hit_establishment: bool


def build_initial_state(config: ScenarioConfig) -> PopulationState:
    """Arrival composition: for in_00, (2N-U-1, U, 1, 0); for in_01,
    (2N-U, U-1, 0, 1)."""
    two_n = config.params.two_n
    if two_n < 4:
        raise ValueError(f"population too small for a two-sweep scenario: 2N={two_n}")
    u = config.resolved_u
    if config.arrival_type == ARRIVAL_IN_00:
        if not 0 <= u <= two_n - 1:
            raise ValueError(
                f"u_count={u} leaves no 00 individual to mutate (2N={two_n})"
            )
        return PopulationState(two_n - u - 1, u, 1, 0, two_n)
    if not 1 <= u <= two_n:
        raise ValueError(f"u_count={u} leaves no 01 individual to mutate (2N={two_n})")
    return PopulationState(two_n - u, u - 1, 0, 1, two_n)


def in_first_half(state: PopulationState) -> bool:
    """Whether the older sweep is still in its first half (frequency < 1/2).
    Analysis metadata only; trials never branch on it."""
    return state.frequency("01") < 0.5


def run_fixation_trial(
    config: ScenarioConfig,
    event_cap: int = DEFAULT_EVENT_CAP,
    establishment_count: int | None = None,
) -> TrialOutcome:
    """Simulate from the arrival composition until one type fixes.

    Uses the compiled event loop; identical seeds give bit-identical
    outcomes.  `hit_establishment` records whether the count of type 11
    ever reached `establishment_count` (default: ceil(log 2N)).
    """
    state = build_initial_state(config)
    if establishment_count is None:
        establishment_count = config.params.establishment_count
    s = _kernels.seed_state(as_seed(config.seed), as_seed(0))
    fixed, t, events, hit = _kernels.run_to_fixation(
        config.params.two_n,
        config.params.sigma,
        config.params.gamma,
        config.params.rho,
        state.n00,
        state.n01,
        state.n10,
        state.n11,
        s,
        event_cap,
        establishment_count,
    )
    censored = fixed < 0
    return TrialOutcome(
        fixed_type=None if censored else TYPES[int(fixed)],
        t_fix=float(t),
        events=int(events),
        censored=bool(censored),
        hit_establishment=bool(hit),
    )


def draw_arrival(params: ModelParams, rng: TrialRng) -> ScenarioConfig:
    """Draw the arrival point of the newer mutation.

    The progress exponent zeta is uniform on (0, 1) because the arrival
    time is uniform over the older sweep's logistic timecourse; the
    mutating individual is sampled uniformly from the population, so the
    arrival lands in a 01 background with probability U/2N.
    """
    zeta = rng.uniform()
    while zeta == 0.0:
        zeta = rng.uniform()
    two_n = params.two_n
    u = int(min(max(round(two_n ** (1.0 - zeta)), 1), two_n - 2))
    arrival = ARRIVAL_IN_01 if rng.uniform() < u / two_n else ARRIVAL_IN_00
    return ScenarioConfig(
        params=params,
        arrival_type=arrival,
        zeta=zeta,
        seed=rng.next_seed(),
    )


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Copy of the config with a different seed."""
    return replace(config, seed=int(seed))
