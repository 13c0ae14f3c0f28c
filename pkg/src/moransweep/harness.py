"""Reproducible Monte Carlo estimation of fixation probabilities.

Trials get per-trial seeds derived from (master_seed, trial_index), and
partial results are merged in fixed block order, so every estimate is
bit-identical for any worker-pool size.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .model import ModelParams, PopulationState, TYPES, TYPE_INDEX
from .rng import as_seed, derive_stream_seed
from .scenarios import DEFAULT_EVENT_CAP, ScenarioConfig, build_initial_state

_BLOCK_SIZE = 512
_WILSON_Z = 1.959963984540054  # two-sided 95%

THREADS_ENV_VAR = "MORANSWEEP_THREADS"


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV_VAR, "").strip()
    if value:
        return max(1, int(value))
    return min(8, os.cpu_count() or 1)


@dataclass
class TrialStats:
    """Additive tallies over a batch of fixation trials."""

    n_trials: int = 0
    n_censored: int = 0
    fixed_counts: np.ndarray = field(default_factory=lambda: np.zeros(4, np.int64))
    hit_count: int = 0
    hit_and_fixed: np.ndarray = field(default_factory=lambda: np.zeros(4, np.int64))
    sum_t_fix: np.ndarray = field(default_factory=lambda: np.zeros(4, np.float64))
    sum_t_fix_sq: np.ndarray = field(default_factory=lambda: np.zeros(4, np.float64))
    events_total: int = 0

    def merge(self, other: "TrialStats") -> None:
        self.n_trials += other.n_trials
        self.n_censored += other.n_censored
        self.fixed_counts += other.fixed_counts
        self.hit_count += other.hit_count
        self.hit_and_fixed += other.hit_and_fixed
        self.sum_t_fix += other.sum_t_fix
        self.sum_t_fix_sq += other.sum_t_fix_sq
        self.events_total += other.events_total


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with standard error and a 95% Wilson interval."""

    p_hat: float
    se: float
    ci_low: float
    ci_high: float
    n_trials: int
    n_censored: int

    def normal_interval(self, multiplier: float = 2.0) -> tuple[float, float]:
        """p_hat +- multiplier * se, clipped to [0, 1]; matches the
        error-bar convention of plotted simulation points."""
        return (
            max(0.0, self.p_hat - multiplier * self.se),
            min(1.0, self.p_hat + multiplier * self.se),
        )


def wilson_interval(successes: int, n: int, z: float = _WILSON_Z) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    # mathematically the interval always brackets p; enforce under roundoff
    return (max(0.0, min(center - half, p)), min(1.0, max(center + half, p)))


def _run_block(
    initial: PopulationState,
    params: ModelParams,
    master_seed: int,
    start: int,
    stop: int,
    event_cap: int,
    establishment_count: int,
) -> TrialStats:
    stats = TrialStats()
    seed = as_seed(master_seed)
    for index in range(start, stop):
        s = _kernels.seed_state(seed, as_seed(index))
        fixed, t, events, hit = _kernels.run_to_fixation(
            params.two_n,
            params.sigma,
            params.gamma,
            params.rho,
            initial.n00,
            initial.n01,
            initial.n10,
            initial.n11,
            s,
            event_cap,
            establishment_count,
        )
        stats.n_trials += 1
        stats.events_total += int(events)
        if fixed < 0:
            stats.n_censored += 1
            continue
        stats.fixed_counts[fixed] += 1
        stats.sum_t_fix[fixed] += t
        stats.sum_t_fix_sq[fixed] += t * t
        if hit:
            stats.hit_count += 1
            stats.hit_and_fixed[fixed] += 1
    return stats


def run_trials_from_state(
    initial: PopulationState,
    params: ModelParams,
    n_trials: int,
    master_seed: int,
    threads: int | None = None,
    event_cap: int = DEFAULT_EVENT_CAP,
    establishment_count: int | None = None,
) -> TrialStats:
    """Run independent fixation trials from a fixed initial composition.

    Work is split into fixed-size blocks by trial index; block results
    are merged in index order, so the outcome does not depend on the
    number of workers.
    """
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if threads is None:
        threads = default_threads()
    if establishment_count is None:
        establishment_count = params.establishment_count
    blocks = [
        (start, min(start + _BLOCK_SIZE, n_trials))
        for start in range(0, n_trials, _BLOCK_SIZE)
    ]
    total = TrialStats()
    if threads <= 1 or len(blocks) == 1:
        for start, stop in blocks:
            total.merge(
                _run_block(initial, params, master_seed, start, stop, event_cap,
                           establishment_count)
            )
        return total
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_run_block, initial, params, master_seed, start, stop,
                        event_cap, establishment_count)
            for start, stop in blocks
        ]
        for future in futures:  # submission order == block order
            total.merge(future.result())
    return total


def estimate_from_stats(stats: TrialStats, target_type: str) -> EstimateWithCI:
    completed = stats.n_trials - stats.n_censored
    if completed == 0:
        raise RuntimeError("all trials were censored; no completed outcomes")
    successes = int(stats.fixed_counts[TYPE_INDEX[target_type]])
    p_hat = successes / completed
    se = math.sqrt(p_hat * (1.0 - p_hat) / completed)
    low, high = wilson_interval(successes, completed)
    return EstimateWithCI(
        p_hat=p_hat,
        se=se,
        ci_low=low,
        ci_high=high,
        n_trials=completed,
        n_censored=stats.n_censored,
    )


def estimate_fixation_probability(
    config: ScenarioConfig,
    target_type: str,
    n_trials: int,
    master_seed: int,
    threads: int | None = None,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> EstimateWithCI:
    """Monte Carlo estimate of P(target_type fixes) for one scenario.

    Censored trials (event cap reached) are excluded from the
    denominator and reported in `n_censored`.
    """
    if target_type not in TYPES:
        raise ValueError(f"unknown target type {target_type!r}")
    initial = build_initial_state(config)
    stats = run_trials_from_state(
        initial, config.params, n_trials, master_seed, threads, event_cap
    )
    return estimate_from_stats(stats, target_type)


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep; exactly one of estimate/error is set."""

    config: ScenarioConfig
    target_type: str
    estimate: EstimateWithCI | None
    error: str | None
    wall_time_s: float
    events_total: int


def sweep(
    grid: Sequence[ScenarioConfig],
    n_trials: int,
    master_seed: int,
    target_type: str = "11",
    threads: int | None = None,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> list[SweepRow]:
    """One estimate per grid point, in input order.

    Each point gets an independent master seed derived from
    (master_seed, point index); failures are recorded in-row and never
    abort the remaining points.
    """
    if len(grid) == 0:
        raise ValueError("sweep grid is empty")
    rows: list[SweepRow] = []
    for index, config in enumerate(grid):
        point_seed = derive_stream_seed(master_seed, index)
        start = time.perf_counter()
        try:
            initial = build_initial_state(config)
            stats = run_trials_from_state(
                initial, config.params, n_trials, point_seed, threads, event_cap
            )
            estimate = estimate_from_stats(stats, target_type)
            rows.append(
                SweepRow(config, target_type, estimate, None,
                         time.perf_counter() - start, stats.events_total)
            )
        except (ValueError, RuntimeError) as exc:
            rows.append(
                SweepRow(config, target_type, None, str(exc),
                         time.perf_counter() - start, 0)
            )
    return rows
