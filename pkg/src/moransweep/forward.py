"""Forward occupancy equations for the double mutant during the sweep.

While the newer single mutant logistically displaces the older one, the
double-mutant count is well approximated by a birth-death walk on the
levels {0, 1/2N, ..., top} with time-varying rates: recombination between
the two single-mutant types immigrates new double mutants, selection
multiplies existing ones.  Solving the linear master equations for this
walk gives the establishment probability that the fixation formula needs.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .deterministic import PhaseSchedule, phase_schedule
from .harness import EstimateWithCI, wilson_interval
from .model import ModelParams
from .rng import as_seed

DEFAULT_C1_CAP = 0.01
DEFAULT_LIMIT_LEVELS = 128
CONSERVATION_TOL = 1e-9

BOUNDARIES = ("absorbing", "verbatim")


@dataclass(frozen=True)
class BirthDeathLattice:
    """Frequency levels k/2N for k = 0..levels."""

    two_n: int
    size: int

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.float64) / self.two_n

    @property
    def top(self) -> float:
        return (self.size - 1) / self.two_n


@dataclass(frozen=True)
class ForwardSolution:
    """Occupancy probabilities on the lattice at the requested times.

    `p` is clipped at zero for reporting; `raw_min` preserves the most
    negative raw value so the clipping magnitude stays observable.
    """

    lattice: BirthDeathLattice
    boundary: str
    t_grid: np.ndarray
    p: np.ndarray
    raw_min: float
    conservation_error: float
    steps_per_unit_rate: float

    def top_probability(self) -> np.ndarray:
        """Probability of sitting at (absorbing: having reached) the top
        level, per output time."""
        return self.p[:, -1]

    @property
    def final_top_probability(self) -> float:
        return float(self.p[-1, -1])


def _check_match(schedule: PhaseSchedule, params: ModelParams) -> None:
    if (schedule.two_n, schedule.sigma, schedule.gamma, schedule.rho) != (
        params.two_n,
        params.sigma,
        params.gamma,
        params.rho,
    ):
        raise ValueError("schedule was built for different model parameters")


def beta_rates(z: float, t: float, schedule: PhaseSchedule, params: ModelParams) -> tuple[float, float]:
    """Birth and death rate of the double-mutant walk at frequency z,
    time t (regime switch at exactly t_mid)."""
    _check_match(schedule, params)
    if not 0.0 <= z <= schedule.delta11 + 1e-15:
        raise ValueError(
            f"z={z} outside the lattice range [0, {schedule.delta11}]"
        )
    bp, bm = _kernels.sweep_beta(
        z,
        t,
        params.two_n,
        params.sigma,
        params.gamma,
        params.rho,
        schedule.c1,
        schedule.mid_theta,
        schedule.t_mid,
    )
    return float(bp), float(bm)


def _max_total_rate(params: ModelParams, size: int) -> float:
    zs = np.arange(size) / params.two_n
    zz_max = float(np.max(zs * (1.0 - zs)))
    half_n = 0.5 * params.two_n
    return half_n * zz_max * (2.0 + 2.0 * params.rho) + 0.25 * params.rho * params.two_n


def solve_forward(
    schedule: PhaseSchedule,
    params: ModelParams,
    horizon: float | None = None,
    boundary: str = "absorbing",
    levels: int | None = None,
    output_times=None,
    rtol: float = 1e-8,
    max_doublings: int = 8,
    step_scale: float = 1.0,
) -> ForwardSolution:
    """Integrate the master equations from a point mass at level zero.

    Fixed-step RK4 with the step chosen so h * max(total rate) <= 0.1,
    then halved until the top-level probability at the horizon moves by
    less than `rtol` relative.  A grid point is placed exactly at the
    rate discontinuity t_mid.  `boundary` selects how the top level is
    closed: "absorbing" removes its death rate; "verbatim" keeps the
    printed leak back to the level below.
    """
    _check_match(schedule, params)
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    if horizon is None:
        horizon = schedule.t_mid + schedule.t_late
    if horizon <= 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if levels is None:
        levels = schedule.delta11_count
    if levels < 1:
        raise ValueError(f"need at least one level above zero, got {levels}")
    size = levels + 1

    if output_times is None:
        grid = np.linspace(0.0, horizon, 33)
    else:
        wanted = set(float(t) for t in output_times)
        if not wanted:
            raise ValueError("output_times is empty")
        if min(wanted) < 0.0 or max(wanted) > horizon * (1.0 + 1e-12):
            raise ValueError("output_times must lie within [0, horizon]")
        wanted |= {0.0, float(horizon)}
        grid = np.asarray(sorted(wanted), dtype=np.float64)

    boundaries = set(grid.tolist()) | {0.0, float(horizon)}
    if 0.0 < schedule.t_mid < horizon:
        boundaries.add(float(schedule.t_mid))
    boundaries = np.asarray(sorted(boundaries), dtype=np.float64)
    output_set = set(grid.tolist())

    if step_scale <= 0.0:
        raise ValueError(f"step_scale must be positive, got {step_scale}")
    max_rate = _max_total_rate(params, size)
    base_density = step_scale * max_rate / 0.1  # steps per unit time
    absorbing = boundary == "absorbing"

    def integrate(density: float) -> tuple[np.ndarray, np.ndarray]:
        p = np.zeros(size, np.float64)
        p[0] = 1.0
        snapshots = []
        if 0.0 in output_set:
            snapshots.append(p.copy())
        for t0, t1 in zip(boundaries[:-1], boundaries[1:]):
            span = t1 - t0
            nsteps = max(1, math.ceil(span * density))
            if nsteps > 10**9:
                raise RuntimeError(
                    "step size underflow: refinement requires more than 1e9 steps"
                )
            _kernels.forward_segment(
                p,
                t0,
                t1,
                nsteps,
                params.two_n,
                params.sigma,
                params.gamma,
                params.rho,
                schedule.c1,
                schedule.mid_theta,
                schedule.t_mid,
                absorbing,
            )
            if t1 in output_set:
                snapshots.append(p.copy())
        return np.asarray(snapshots), p

    density = base_density
    snaps, final = integrate(density)
    if max_doublings > 0:
        converged = False
        for _ in range(max_doublings):
            snaps2, final2 = integrate(density * 2.0)
            ref = max(abs(final2[-1]), 1e-300)
            converged = abs(final2[-1] - final[-1]) <= rtol * ref
            snaps, final, density = snaps2, final2, density * 2.0
            if converged:
                break
        if not converged:
            raise RuntimeError(
                f"grid refinement did not stabilize to rtol={rtol} "
                f"after {max_doublings} halvings"
            )

    conservation = float(np.max(np.abs(snaps.sum(axis=1) - 1.0)))
    if conservation > CONSERVATION_TOL:
        raise RuntimeError(
            f"probability conservation violated: max |sum p - 1| = {conservation:.3e}"
        )
    raw_min = float(snaps.min())
    return ForwardSolution(
        lattice=BirthDeathLattice(params.two_n, size),
        boundary=boundary,
        t_grid=grid,
        p=np.clip(snaps, 0.0, None),
        raw_min=raw_min,
        conservation_error=conservation,
        steps_per_unit_rate=density / max_rate if max_rate > 0 else float("nan"),
    )


def establishment_probability_mc(
    schedule: PhaseSchedule,
    params: ModelParams,
    n_paths: int,
    master_seed: int,
    horizon: float | None = None,
    boundary: str = "absorbing",
    levels: int | None = None,
) -> EstimateWithCI:
    """Direct Monte Carlo of the same level walk, as an independent check
    on the master-equation solution."""
    _check_match(schedule, params)
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    if params.rho > params.sigma:
        raise ValueError("thinning bound assumes rho <= sigma")
    if horizon is None:
        horizon = schedule.t_mid + schedule.t_late
    if levels is None:
        levels = schedule.delta11_count
    hits = _kernels.establishment_mc(
        params.two_n,
        params.sigma,
        params.gamma,
        params.rho,
        schedule.c1,
        schedule.mid_theta,
        schedule.t_mid,
        horizon,
        levels,
        boundary == "absorbing",
        n_paths,
        as_seed(master_seed),
    )
    p_hat = hits / n_paths
    se = math.sqrt(p_hat * (1.0 - p_hat) / n_paths)
    low, high = wilson_interval(int(hits), n_paths)
    return EstimateWithCI(p_hat, se, low, high, n_paths, 0)


def survival_weights(levels: int, sigma: float, gamma: float, rho: float) -> np.ndarray:
    """Long-run survival probability of k double mutants once the newer
    single mutant has fixed: 1 - r^k with r the death/birth ratio."""
    r = (1.0 - sigma * gamma + rho) / (1.0 + sigma * gamma + rho)
    k = np.arange(levels + 1, dtype=np.float64)
    return 1.0 - r**k


@functools.lru_cache(maxsize=256)
def _theorem_cached(
    params: ModelParams,
    zeta: float,
    boundary: str,
    c1_cap: float | None,
    levels: int | None,
) -> float:
    if params.rho == 0.0:
        phase_schedule(params, zeta, c1_cap=c1_cap)  # validate the regime
        return 0.0
    schedule = phase_schedule(params, zeta, c1_cap=c1_cap)
    if levels is None:
        levels = max(schedule.delta11_count, DEFAULT_LIMIT_LEVELS)
    sol = solve_forward(
        schedule,
        params,
        horizon=schedule.t_mid + schedule.t_late,
        boundary=boundary,
        levels=levels,
        output_times=[schedule.t_mid + schedule.t_late],
    )
    weights = survival_weights(levels, params.sigma, params.gamma, params.rho)
    established = float(np.dot(sol.p[-1], weights))
    return (2.0 * params.sigma / (1.0 + params.sigma)) * established


def theorem_fixation_prob(
    params: ModelParams,
    zeta: float,
    boundary: str = "absorbing",
    c1_cap: float | None = DEFAULT_C1_CAP,
    levels: int | None = None,
) -> float:
    """Large-population fixation probability of the double mutant.

    Establishment probability of the newer single mutant
    (2 sigma / (1 + sigma)) times the probability that the double-mutant
    walk, run to the horizon t_mid + t_late, ends in a state that
    survives long-run: the occupancy vector is read out with the
    per-level survival weights, which converges as `levels` grows
    (default max(ceil(log 2N), 128)).  Requires zeta < gamma < 1.
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    return _theorem_cached(params, float(zeta), boundary, c1_cap, levels)
