"""Binary branching-process formulas and the heuristic fixation estimators.

A binary branching process with per-individual split rate a and death
rate b has a closed-form generating function, which supplies extinction
probabilities and decay bounds.  The same machinery drives two
non-rigorous fixation estimators: one for the regime where the newer
mutation wins the race outright (zeta > gamma), and one for moderate
population sizes where the older sweep has not finished when the newer
type establishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .deterministic import LogisticCurve, phase_schedule
from .forward import DEFAULT_C1_CAP, DEFAULT_LIMIT_LEVELS, BOUNDARIES, survival_weights
from .model import ModelParams
from .rng import as_seed, derive_stream_seed

_PAIR_STEP_BUDGET = 0.2  # h * max total rate for the coupled lattice solves


@dataclass(frozen=True)
class BinaryBranching:
    """Continuous-time binary branching: split at rate a, die at rate b."""

    split_rate: float
    death_rate: float
    k: int = 1

    def __post_init__(self):
        if self.split_rate < 0.0 or self.death_rate < 0.0:
            raise ValueError("rates must be non-negative")
        if self.split_rate + self.death_rate <= 0.0:
            raise ValueError("total branching rate must be positive")
        if self.k < 1:
            raise ValueError(f"initial count must be >= 1, got {self.k}")


def generating_function(bp: BinaryBranching, s: float, t: float) -> float:
    """E[s^(population at t)] in closed form.

    ((b(s-1) - (as-b) e^{-(a-b)t}) / (a(s-1) - (as-b) e^{-(a-b)t}))^k,
    valid for a != b.
    """
    a, b, k = bp.split_rate, bp.death_rate, bp.k
    if a == b:
        raise ValueError("closed form requires split_rate != death_rate")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must be in [0, 1], got {s}")
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    exponent = -(a - b) * t
    if exponent > 700.0:  # subcritical at large t: extinction is certain
        return 1.0
    decay = math.exp(exponent)
    num = b * (s - 1.0) - (a * s - b) * decay
    den = a * (s - 1.0) - (a * s - b) * decay
    value = (num / den) ** k
    return min(max(value, 0.0), 1.0)


def extinction_probability(bp: BinaryBranching, t: float) -> float:
    """P(population extinct by t) = G(0, t)."""
    return generating_function(bp, 0.0, t)


def extinction_bounds(bp: BinaryBranching, t: float) -> tuple[float, float]:
    """Extinction probability plus the matching analytic decay bound.

    Supercritical (a > b): bound on |G(0,t) - (b/a)^k|, namely
    k (b/a) e^{-(a-b)t}.  Subcritical (a < b): bound on the survival
    probability, namely 1.2 k e^{-(b-a)t}.
    """
    a, b, k = bp.split_rate, bp.death_rate, bp.k
    point = extinction_probability(bp, t)
    if a > b:
        bound = k * (b / a) * math.exp(-(a - b) * t)
    else:
        bound = 1.2 * k * math.exp(-(b - a) * t)
    return point, bound


def extinction_frequency_mc(
    bp: BinaryBranching,
    t: float,
    n_paths: int,
    master_seed: int,
    cap: int = 4000,
) -> float:
    """Fraction of simulated paths extinct by t.

    Paths reaching `cap` individuals are scored as surviving; with the
    default cap the misclassification probability is below (b/a)^4000.
    """
    extinct = _kernels.branching_extinctions(
        bp.split_rate, bp.death_rate, bp.k, t, cap, n_paths, as_seed(master_seed)
    )
    return extinct / n_paths


@dataclass
class CaseOneBState:
    """Frequencies of the two single-mutant types in the deterministic
    displacement system."""

    z10: float
    z01: float

    def derivative(self, sigma: float, gamma: float) -> tuple[float, float]:
        """Aggregate drift of the two frequencies: each type grows
        logistically against the shared neutral background while the
        fitter one suppresses the other."""
        return _kernels._pair_growth(self.z10, self.z01, sigma, gamma)


def _pair_completion_time(z10: float, z01: float, sigma: float, gamma: float) -> float:
    """Time for the newer type's frequency to pass 1 - 1e-3 under the
    deterministic pair dynamics (coarse RK4; the drift scale is sigma)."""
    h = 0.2 / sigma
    state = (z10, z01)
    t = 0.0
    # displacement completes within O(log(1/z10) + log 2N) / (sigma (1-gamma))
    t_max = (math.log(max(1.0 / z10, 2.0)) + 14.0) / (sigma * (1.0 - gamma))
    while state[0] < 0.999:
        k1 = _kernels._pair_growth(state[0], state[1], sigma, gamma)
        k2 = _kernels._pair_growth(state[0] + 0.5 * h * k1[0], state[1] + 0.5 * h * k1[1], sigma, gamma)
        k3 = _kernels._pair_growth(state[0] + 0.5 * h * k2[0], state[1] + 0.5 * h * k2[1], sigma, gamma)
        k4 = _kernels._pair_growth(state[0] + h * k3[0], state[1] + h * k3[1], sigma, gamma)
        state = (
            state[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            state[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        )
        t += h
        if t > t_max:
            break
    return t


def _pair_establishment(
    params: ModelParams,
    z10_0: float,
    z01_0: float,
    levels: int,
    boundary: str,
) -> float:
    """Survival-weighted probability that the double-mutant walk coupled
    to the deterministic pair dynamics establishes."""
    two_n = params.two_n
    horizon = _pair_completion_time(z10_0, z01_0, params.sigma, params.gamma)
    size = levels + 1
    state = np.zeros(size + 2, np.float64)
    state[0] = z10_0
    state[1] = z01_0
    state[2] = 1.0  # all occupancy at level zero
    zs = np.arange(size) / two_n
    zz_max = float(np.max(zs * (1.0 - zs)))
    max_rate = two_n * zz_max + 0.5 * params.rho * two_n + 1.0
    nsteps = max(1, math.ceil(horizon * max_rate / _PAIR_STEP_BUDGET))
    _kernels.pair_segment(
        state,
        horizon,
        nsteps,
        two_n,
        params.sigma,
        params.gamma,
        params.rho,
        boundary == "absorbing",
    )
    p = state[2:]
    total = p.sum()
    if not 0.999999 < total < 1.000001:
        raise RuntimeError(f"coupled solve lost probability mass: sum p = {total}")
    weights = survival_weights(levels, params.sigma, params.gamma, params.rho)
    return float(np.dot(np.clip(p, 0.0, None), weights))


def _exponential_nodes(mean: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights transported to an Exp(mean) variable."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * (x + 1.0)  # (0, 1)
    weights = 0.5 * w
    draws = -mean * np.log1p(-u)
    return draws, weights


def case1b_fixation_prob(
    params: ModelParams,
    zeta: float,
    epsilon: float | None = None,
    nodes: int = 64,
    levels: int | None = None,
    boundary: str = "absorbing",
    node_values: list | None = None,
) -> float:
    """Fixation probability estimate for gamma < zeta < 1.

    The newer single mutant wins the race: its frequency at the end of
    the stochastic phase, conditioned on survival, is exponentially
    distributed; the older type sits at (2N)^((1-eps) gamma - zeta).
    For each quadrature draw, the double-mutant walk is solved against
    the deterministic displacement pair, and the result is averaged and
    scaled by the survival mass 2 sigma / (1 + sigma + rho).

    Draws are truncated to the feasible frequency simplex: at reachable
    population sizes the exponential scale (2N)^-eps is not small, so
    untruncated draws would exceed frequency one.
    """
    sigma, gamma, rho, two_n = params.sigma, params.gamma, params.rho, params.two_n
    if not gamma < zeta < 1.0:
        raise ValueError(
            f"this estimator needs gamma < zeta < 1; got zeta={zeta}, gamma={gamma}"
        )
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    eps_max = (zeta - gamma) / (2.0 - gamma)
    if epsilon is None:
        epsilon = eps_max
    if not 0.0 < epsilon <= eps_max + 1e-12:
        raise ValueError(
            f"epsilon must be in (0, {eps_max:.6g}] for zeta={zeta}, gamma={gamma}"
        )
    if rho == 0.0:
        return 0.0
    if levels is None:
        levels = max(params.establishment_count, DEFAULT_LIMIT_LEVELS)

    z01_0 = two_n ** ((1.0 - epsilon) * gamma - zeta)
    mean = (1.0 + sigma + rho) / (2.0 * sigma) * two_n ** (-epsilon)
    draws, weights = _exponential_nodes(mean, nodes)
    lo = 1.0 / two_n
    hi = max(1.0 - z01_0 - 1.0 / two_n, lo)
    draws = np.clip(draws, lo, hi)

    total = 0.0
    for x, w in zip(draws, weights):
        value = _pair_establishment(params, float(x), z01_0, levels, boundary)
        if node_values is not None:
            node_values.append((float(x), value))
        total += w * value
    return (2.0 * sigma / (1.0 + sigma + rho)) * total


def hitting_time_density(t: float, params: ModelParams, delta10: float) -> float:
    """Density of the time at which the newer single mutant reaches
    frequency delta10, conditioned on its survival.

    The conditioned frequency grows like e^{sigma t} W / 2N with W
    exponential of mean (1 + sigma + rho) / (2 sigma), so the hit time is
    (1/sigma) log(2N delta10 / W); real-line support, unit total mass.
    """
    sigma, rho, two_n = params.sigma, params.rho, params.two_n
    mean_w = (1.0 + sigma + rho) / (2.0 * sigma)
    w = two_n * delta10 * math.exp(-sigma * t)
    return (w / mean_w) * math.exp(-w / mean_w) * sigma


def moderate_n_fixation_prob(
    params: ModelParams,
    zeta: float,
    delta10: float | None = None,
    nodes: int = 64,
    levels: int | None = None,
    boundary: str = "absorbing",
    empirical_ft: bool = False,
    ft_samples: int = 4000,
    ft_bins: int = 24,
    master_seed: int = 0,
) -> float:
    """Moderate-population fixation estimate for zeta < gamma.

    Integrates the establishment probability of the double-mutant walk
    over the distribution of the time T at which the newer single mutant
    reaches delta10, with the older type's frequency at T read off its
    logistic curve started from (2N)^-zeta.  With `empirical_ft`, T is
    sampled from full Moran simulations instead of the branching limit,
    and the survival mass is replaced by the observed hit fraction.
    """
    sigma, gamma, rho, two_n = params.sigma, params.gamma, params.rho, params.two_n
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    schedule = phase_schedule(params, zeta)  # validates zeta < gamma < 1
    if delta10 is None:
        delta10 = min(schedule.c_10_3, DEFAULT_C1_CAP)
    if not 0.0 < delta10 < 0.5:
        raise ValueError(f"delta10 must be in (0, 0.5), got {delta10}")
    if rho == 0.0:
        return 0.0
    if levels is None:
        levels = max(params.establishment_count, DEFAULT_LIMIT_LEVELS)

    older_curve = LogisticCurve(two_n ** (-zeta), sigma * gamma)
    z01_cap = 1.0 - delta10 - 1.0 / two_n

    def establishment_at(t_hit: float) -> float:
        z01 = min(older_curve.value(t_hit), z01_cap)
        return _pair_establishment(params, delta10, z01, levels, boundary)

    if empirical_ft:
        u = round(two_n ** (1.0 - zeta))
        u = int(min(max(u, 1), two_n - 2))
        target = max(1, round(delta10 * two_n))
        times = []
        hits = 0
        master = as_seed(master_seed)
        for i in range(ft_samples):
            s = _kernels.seed_state(master, as_seed(i))
            hit, t_hit, _ = _kernels.first_hit_or_loss(
                two_n, sigma, gamma, rho, two_n - u - 1, u, 1, 0, s, 10**12, target
            )
            if hit == 1:
                hits += 1
                times.append(t_hit)
        if hits == 0:
            return 0.0
        times = np.sort(np.asarray(times))
        bins = np.array_split(times, min(ft_bins, hits))
        total = 0.0
        for chunk in bins:
            total += (len(chunk) / hits) * establishment_at(float(np.mean(chunk)))
        return (hits / ft_samples) * total

    mean_w = (1.0 + sigma + rho) / (2.0 * sigma)
    draws, weights = _exponential_nodes(mean_w, nodes)
    total = 0.0
    for w_draw, weight in zip(draws, weights):
        t_hit = max(0.0, math.log(two_n * delta10 / w_draw) / sigma)
        total += weight * establishment_at(t_hit)
    return (2.0 * sigma / (1.0 + sigma + rho)) * total
