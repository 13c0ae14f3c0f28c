import math

import numpy as np
import pytest

from moransweep import (
    ModelParams,
    PopulationState,
    ScenarioConfig,
    estimate_fixation_probability,
    run_trials_from_state,
    sweep,
)
from moransweep.harness import estimate_from_stats, wilson_interval


def neutral_config(two_n=100, seed=0):
    params = ModelParams(two_n=two_n, sigma=0.0, gamma=0.0, rho=0.0)
    return ScenarioConfig(params=params, u_count=0, seed=seed)


class TestEstimate:
    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            estimate_fixation_probability(neutral_config(), "10", 0, master_seed=1)

    def test_all_censored_is_failure(self):
        params = ModelParams(two_n=100, sigma=0.0, gamma=0.0, rho=0.0)
        balanced = ScenarioConfig(params=params, u_count=50)  # >= 50 events to fix
        with pytest.raises(RuntimeError, match="censored"):
            estimate_fixation_probability(
                balanced, "10", 10, master_seed=1, event_cap=3
            )

    def test_neutral_fixation_probability(self):
        est = estimate_fixation_probability(
            neutral_config(two_n=50), "10", 20_000, master_seed=42
        )
        truth = 1 / 50
        assert abs(est.p_hat - truth) <= 3 * max(est.se, 1e-9)
        assert est.ci_low <= est.p_hat <= est.ci_high

    def test_thread_count_invariance(self):
        runs = [
            estimate_fixation_probability(
                neutral_config(two_n=50), "10", 3000, master_seed=9, threads=k
            )
            for k in (1, 4, 8)
        ]
        assert runs[0] == runs[1] == runs[2]

    def test_estimate_independent_of_block_internals(self):
        # same master seed, different trial counts share the common prefix
        a = estimate_fixation_probability(neutral_config(two_n=50), "10", 1000, 5)
        b = estimate_fixation_probability(neutral_config(two_n=50), "10", 1000, 5)
        assert a == b


class TestWilson:
    def test_interval_inside_unit_box(self):
        for n, k in [(10, 0), (10, 10), (7, 3), (100, 1)]:
            low, high = wilson_interval(k, n)
            assert 0.0 <= low <= k / n <= high <= 1.0

    def test_coverage_on_known_p(self):
        # neutral single mutant at 2N=20: p = 0.05 exactly
        params = ModelParams(two_n=20, sigma=0.0, gamma=0.0, rho=0.0)
        initial = PopulationState(19, 0, 1, 0, 20)
        covered = 0
        reps = 200
        for rep in range(reps):
            stats = run_trials_from_state(initial, params, 400, master_seed=1000 + rep)
            est = estimate_from_stats(stats, "10")
            if est.ci_low <= 0.05 <= est.ci_high:
                covered += 1
        assert covered >= 0.93 * reps

    def test_se_scales_as_inverse_sqrt(self):
        params = ModelParams(two_n=20, sigma=0.0, gamma=0.0, rho=0.0)
        initial = PopulationState(19, 0, 1, 0, 20)
        ns = [400, 1600, 6400, 25_600]
        ses = []
        for n in ns:
            stats = run_trials_from_state(initial, params, n, master_seed=7)
            ses.append(estimate_from_stats(stats, "10").se)
        slope = np.polyfit(np.log(ns), np.log(ses), 1)[0]
        assert abs(slope + 0.5) < 0.05


class TestSweep:
    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            sweep([], 10, master_seed=0)

    def test_rows_in_input_order_with_inputs(self):
        grid = [neutral_config(two_n=n) for n in (20, 40, 60, 80)]
        rows = sweep(grid, 200, master_seed=3, target_type="10")
        assert [r.config.params.two_n for r in rows] == [20, 40, 60, 80]
        assert all(r.estimate is not None for r in rows)

    def test_per_point_failure_recorded_not_raised(self):
        params = ModelParams(two_n=100, sigma=0.0, gamma=0.0, rho=0.0)
        bad = ScenarioConfig(params=params, u_count=100)  # no room for the mutant
        rows = sweep([neutral_config(), bad, neutral_config(seed=2)], 100, 1,
                     target_type="10")
        assert rows[0].error is None
        assert rows[1].error is not None and rows[1].estimate is None
        assert rows[2].error is None

    def test_point_seeds_independent(self):
        grid = [neutral_config(two_n=20), neutral_config(two_n=20)]
        rows = sweep(grid, 2000, master_seed=11, target_type="10")
        assert rows[0].estimate.p_hat != rows[1].estimate.p_hat


class TestTwoTypeOracle:
    def test_advantageous_fixation_matches_birth_death_closed_form(self):
        # sigma=0.02 two-type chain: (1-r)/(1-r^2N), r = 0.98/1.02
        two_n = 100
        params = ModelParams(two_n=two_n, sigma=0.02, gamma=0.6, rho=0.0)
        initial = PopulationState(99, 0, 1, 0, two_n)
        stats = run_trials_from_state(initial, params, 30_000, master_seed=17)
        est = estimate_from_stats(stats, "10")
        r = 0.98 / 1.02
        truth = (1 - r) / (1 - r**two_n)
        assert truth == pytest.approx(0.039947, abs=5e-6)
        assert abs(est.p_hat - truth) <= 3 * est.se

    def test_case2_establishment_scale(self):
        # arrival in a nearly completed older sweep: P(fix 11) ~ 2 sigma/(1+sigma)
        two_n = 400
        params = ModelParams(two_n=two_n, sigma=0.02, gamma=0.6, rho=0.0)
        config = ScenarioConfig(params=params, u_count=two_n, arrival_type="in_01")
        est = estimate_fixation_probability(config, "11", 30_000, master_seed=23)
        truth = 2 * 0.02 / 1.02
        assert abs(est.p_hat - truth) <= 3 * est.se + 0.1 * truth
