"""Exact event-driven engine for the four-haplotype Moran model.

Haplotypes are written ``ij`` where the first digit says whether the
individual carries the newer (second) beneficial mutation and the second
digit whether it carries the older (first) one.  The chain moves by
single replacement events: resampling with selection between ordered
pairs, plus recombination events that swap one locus of the replaced
individual.  Aggregated over types this yields 12 transition rates, one
per ordered pair of distinct haplotypes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .rng import TrialRng

TYPES = ("00", "01", "10", "11")
TYPE_INDEX = {name: i for i, name in enumerate(TYPES)}


class AbsorbingStateError(RuntimeError):
    """Raised when an event is requested from a monomorphic population."""


@dataclass(frozen=True)
class ModelParams:
    """Population size and selection/recombination coefficients.

    sigma is the selective advantage of the newer mutation, sigma*gamma
    that of the older one, rho the recombination rate per ordered pair
    (scaled by 1/2N inside the engine).
    """

    two_n: int
    sigma: float
    gamma: float
    rho: float = 0.0

    def __post_init__(self):
        if self.two_n < 2:
            raise ValueError(f"two_n must be >= 2, got {self.two_n}")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must be in [0, 1], got {self.sigma}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.sigma * (1.0 + self.gamma) > 1.0 + 1e-12:
            raise ValueError(
                "sigma * (1 + gamma) must not exceed 1 so takeover "
                f"probabilities stay in [0, 1]; got {self.sigma * (1 + self.gamma)}"
            )
        if self.rho < 0.0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")

    @property
    def rho_two_n(self) -> float:
        """The product rho * 2N, the key compound parameter."""
        return self.rho * self.two_n

    @property
    def establishment_count(self) -> int:
        """Individuals needed to count the double mutant as established:
        ceil(log 2N)."""
        return math.ceil(math.log(self.two_n))


@dataclass(frozen=True)
class PopulationState:
    """Integer composition of the population; counts sum to two_n."""

    n00: int
    n01: int
    n10: int
    n11: int
    two_n: int

    def __post_init__(self):
        counts = (self.n00, self.n01, self.n10, self.n11)
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        if sum(counts) != self.two_n:
            raise ValueError(
                f"counts {counts} sum to {sum(counts)}, expected {self.two_n}"
            )

    @classmethod
    def from_counts(cls, counts, two_n: int) -> "PopulationState":
        c = [int(x) for x in counts]
        return cls(c[0], c[1], c[2], c[3], int(two_n))

    def counts(self) -> np.ndarray:
        return np.array([self.n00, self.n01, self.n10, self.n11], dtype=np.int64)

    def count(self, haplotype: str) -> int:
        return int(self.counts()[TYPE_INDEX[haplotype]])

    def frequency(self, haplotype: str) -> float:
        return self.count(haplotype) / self.two_n

    @property
    def monomorphic_type(self) -> str | None:
        for name, c in zip(TYPES, self.counts()):
            if c == self.two_n:
                return name
        return None


@dataclass(frozen=True)
class TransitionRateTable:
    """rate[a, b]: rate at which one individual of type a is replaced by a
    new individual of type b (a != b; diagonal entries are zero)."""

    rate: np.ndarray
    total_rate: float

    def rate_between(self, replaced: str, replacement: str) -> float:
        return float(self.rate[TYPE_INDEX[replaced], TYPE_INDEX[replacement]])


def replacement_probability(replacer: str, replaced: str, params: ModelParams) -> float:
    """Probability that the replacer wins a selective competition:
    (1 + sigma (i - k) + sigma gamma (j - l)) / 2 for bits (i, j) vs (k, l)."""
    a = TYPE_INDEX[replaced]
    b = TYPE_INDEX[replacer]
    m = _kernels.takeover_matrix(params.sigma, params.gamma)
    return float(m[a, b])


def transition_rates(state: PopulationState, params: ModelParams) -> TransitionRateTable:
    """Aggregate per-ordered-type-pair event rates for the current state."""
    if state.two_n != params.two_n:
        raise ValueError("state and params disagree on population size")
    pba = _kernels.takeover_matrix(params.sigma, params.gamma)
    quart = params.rho / (2.0 * params.two_n)
    n = state.counts()
    rates12 = np.empty(12, np.float64)
    total = _kernels._fill_rates(n, params.two_n, pba, quart, rates12)
    table = np.zeros((4, 4), np.float64)
    for idx in range(12):
        table[_kernels._TA[idx], _kernels._TB[idx]] = rates12[idx]
    return TransitionRateTable(rate=table, total_rate=float(total))


def marginal_rates(state: PopulationState, params: ModelParams) -> dict[str, tuple[float, float]]:
    """Closed-form increase/decrease rates of each haplotype frequency.

    Written directly from the per-type balance of selection and
    recombination flows, independently of the pairwise table construction
    in :func:`transition_rates`; tests cross-check the two routes.
    """
    s = params.sigma
    g = params.gamma
    n = params.two_n / 2.0
    rn = params.rho * n
    x00 = state.frequency("00")
    x01 = state.frequency("01")
    x10 = state.frequency("10")
    x11 = state.frequency("11")

    r_plus_10 = n * x10 * ((1 + s) * (1 - x10) - s * (1 + g) * x11 - s * g * x01) \
        + rn * (2 * x11 * x00 + x10 * x11 + x10 * x00)
    r_minus_10 = n * x10 * ((1 - s) * (1 - x10) + s * (1 + g) * x11 + s * g * x01) \
        + rn * x10 * (x00 + 2 * x01 + x11)

    r_plus_01 = n * x01 * ((1 + s * g) * (1 - x01) - s * (1 + g) * x11 - s * x10) \
        + rn * (x00 * x01 + x11 * x01 + 2 * x11 * x00)
    r_minus_01 = n * x01 * ((1 - s * g) * (1 - x01) + s * (1 + g) * x11 + s * x10) \
        + rn * x01 * (x00 + 2 * x10 + x11)

    r_plus_11 = n * x11 * ((1 + s * (1 + g)) * (1 - x11) - s * x10 - s * g * x01) \
        + rn * (2 * x10 * x01 + x10 * x11 + x01 * x11)
    r_minus_11 = n * x11 * ((1 - s * (1 + g)) * (1 - x11) + s * x10 + s * g * x01) \
        + rn * x11 * (2 * x00 + x01 + x10)

    r_plus_00 = n * x00 * (1 - x00 - s * (1 + g) * x11 - s * x10 - s * g * x01) \
        + rn * (x01 * x00 + x00 * x10 + 2 * x01 * x10)
    r_minus_00 = n * x00 * (1 - x00 + s * (1 + g) * x11 + s * x10 + s * g * x01) \
        + rn * x00 * (x01 + 2 * x11 + x10)

    return {
        "00": (r_plus_00, r_minus_00),
        "01": (r_plus_01, r_minus_01),
        "10": (r_plus_10, r_minus_10),
        "11": (r_plus_11, r_minus_11),
    }


def table_marginals(table: TransitionRateTable) -> dict[str, tuple[float, float]]:
    """Increase/decrease rates per type implied by a transition table."""
    out = {}
    for i, name in enumerate(TYPES):
        gain = float(table.rate[:, i].sum())
        loss = float(table.rate[i, :].sum())
        out[name] = (gain, loss)
    return out


def step(state: PopulationState, params: ModelParams, rng: TrialRng) -> tuple[PopulationState, float]:
    """Sample one replacement event; returns the new state and the
    exponential waiting time.  Raises AbsorbingStateError if no event can
    change the composition."""
    pba = _kernels.takeover_matrix(params.sigma, params.gamma)
    quart = params.rho / (2.0 * params.two_n)
    n = state.counts()
    rates = np.empty(12, np.float64)
    a, b, dt = _kernels.single_event(n, params.two_n, pba, quart, rates, rng.state)
    if a < 0:
        raise AbsorbingStateError(
            f"population is monomorphic ({state.monomorphic_type}); no event possible"
        )
    return PopulationState.from_counts(n, state.two_n), float(dt)


class SimulationRun(NamedTuple):
    state: PopulationState
    time: float
    events: int
    capped: bool


def simulate_until(
    state: PopulationState,
    params: ModelParams,
    rng: TrialRng,
    stop: Callable[[PopulationState, float], bool],
    event_cap: int | None = None,
) -> SimulationRun:
    """Apply events until `stop(state, time)` holds or the state absorbs.

    Hitting the event cap is reported via `capped`, never silently.  This
    is the flexible slow path; the per-trial compiled loop used by the
    harness lives in scenarios.run_fixation_trial.
    """
    t = 0.0
    events = 0
    while not stop(state, t):
        if state.monomorphic_type is not None:
            break
        if event_cap is not None and events >= event_cap:
            return SimulationRun(state, t, events, True)
        state, dt = step(state, params, rng)
        t += dt
        events += 1
    return SimulationRun(state, t, events, False)
