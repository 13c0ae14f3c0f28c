import math

import numpy as np
import pytest

from moransweep import (
    AbsorbingStateError,
    ModelParams,
    PopulationState,
    TYPES,
    TrialRng,
    marginal_rates,
    replacement_probability,
    simulate_until,
    step,
    table_marginals,
    transition_rates,
)


def params(two_n=100, sigma=0.02, gamma=0.6, rho=0.0):
    return ModelParams(two_n=two_n, sigma=sigma, gamma=gamma, rho=rho)


class TestReplacementProbability:
    def test_self_competition_is_fair(self):
        p = params()
        for t in TYPES:
            assert replacement_probability(t, t, p) == 0.5

    def test_double_mutant_over_wild_type(self):
        # 1/2 (1 + sigma + sigma*gamma) with sigma=0.02, gamma=0.6
        assert replacement_probability("11", "00", params()) == pytest.approx(0.516)

    def test_antisymmetry(self):
        p = params()
        assert replacement_probability("00", "11", p) == pytest.approx(0.484)
        for a in TYPES:
            for b in TYPES:
                total = replacement_probability(a, b, p) + replacement_probability(b, a, p)
                assert total == pytest.approx(1.0)

    def test_probabilities_stay_in_unit_interval_at_boundary(self):
        p = ModelParams(two_n=100, sigma=0.5, gamma=1.0, rho=0.0)  # sigma(1+gamma) = 1
        for a in TYPES:
            for b in TYPES:
                assert 0.0 <= replacement_probability(a, b, p) <= 1.0


class TestModelParams:
    def test_rejects_supercritical_selection(self):
        with pytest.raises(ValueError):
            ModelParams(two_n=100, sigma=0.6, gamma=1.0, rho=0.0)

    def test_rejects_negative_rho(self):
        with pytest.raises(ValueError):
            ModelParams(two_n=100, sigma=0.02, gamma=0.6, rho=-1e-9)

    def test_establishment_count_is_ceil_log(self):
        assert ModelParams(10000, 0.02, 0.6).establishment_count == 10
        assert ModelParams(2000, 0.02, 0.6).establishment_count == 8


class TestPopulationState:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            PopulationState(1, 1, 1, 1, 5)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            PopulationState(-1, 2, 1, 0, 2)

    def test_frequencies_sum_to_one(self):
        st = PopulationState(40, 30, 20, 10, 100)
        assert sum(st.frequency(t) for t in TYPES) == pytest.approx(1.0)

    def test_monomorphic_detection(self):
        assert PopulationState(0, 100, 0, 0, 100).monomorphic_type == "01"
        assert PopulationState(99, 1, 0, 0, 100).monomorphic_type is None


class TestTransitionRates:
    def test_monomorphic_state_has_all_zero_rates(self):
        p = params(rho=0.1)
        table = transition_rates(PopulationState(100, 0, 0, 0, 100), p)
        assert table.total_rate == 0.0
        assert np.all(table.rate == 0.0)

    def test_two_type_gain_rate_matches_hand_value(self):
        # 2N=100, sigma=0.02, rho=0: rate of the single 10 gaining a copy
        p = params()
        table = transition_rates(PopulationState(99, 0, 1, 0, 100), p)
        assert table.rate_between("00", "10") == pytest.approx(0.5049, abs=1e-12)

    def test_rate_requires_presence_of_replaced_type(self, random_state_factory):
        p = params(two_n=60, rho=0.05)
        for counts in random_state_factory(60, 40, seed=3):
            st = PopulationState.from_counts(counts, 60)
            table = transition_rates(st, p)
            for a_idx, a in enumerate(TYPES):
                if st.count(a) == 0:
                    assert np.all(table.rate[a_idx] == 0.0)

    @pytest.mark.parametrize("two_n", [50, 200, 1000])
    @pytest.mark.parametrize("rho_2n", [0.0, 0.2, 2.0])
    def test_marginals_match_closed_forms(self, two_n, rho_2n, random_state_factory):
        p = params(two_n=two_n, rho=rho_2n / two_n)
        for counts in random_state_factory(two_n, 25, seed=two_n):
            st = PopulationState.from_counts(counts, two_n)
            implied = table_marginals(transition_rates(st, p))
            closed = marginal_rates(st, p)
            for t in TYPES:
                for got, want in zip(implied[t], closed[t]):
                    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


class TestStep:
    def test_absorbing_state_raises(self):
        with pytest.raises(AbsorbingStateError):
            step(PopulationState(0, 0, 100, 0, 100), params(), TrialRng(1))

    def test_conserves_population(self):
        p = params(rho=0.5 / 100)
        st = PopulationState(40, 30, 20, 10, 100)
        rng = TrialRng(7)
        for _ in range(500):
            st, dt = step(st, p, rng)
            assert dt >= 0.0
            assert sum(st.counts()) == 100
            if st.monomorphic_type is not None:
                break

    def test_empirical_transition_frequencies_match_rates(self):
        # repeatedly sample a single event from the same polymorphic state
        p = params(rho=1.0 / 100)
        st = PopulationState(40, 30, 20, 10, 100)
        table = transition_rates(st, p)
        probs = (table.rate / table.total_rate).ravel()
        n_samples = 100_000
        rng = TrialRng(910)
        counts = np.zeros(16)
        for _ in range(n_samples):
            nxt, _ = step(st, p, rng)
            diff = nxt.counts() - st.counts()
            a = int(np.argmin(diff))
            b = int(np.argmax(diff))
            counts[4 * a + b] += 1
        freqs = counts / n_samples
        for idx in range(16):
            se = math.sqrt(max(probs[idx] * (1 - probs[idx]), 1e-12) / n_samples)
            assert abs(freqs[idx] - probs[idx]) <= 3.5 * se + 1e-12


class TestSimulateUntil:
    def test_stop_immediately_true(self):
        run = simulate_until(
            PopulationState(99, 0, 1, 0, 100), params(), TrialRng(3),
            stop=lambda s, t: True,
        )
        assert run.events == 0
        assert run.time == 0.0
        assert not run.capped

    def test_runs_to_fixation(self):
        run = simulate_until(
            PopulationState(99, 0, 1, 0, 100), params(), TrialRng(3),
            stop=lambda s, t: s.monomorphic_type is not None,
        )
        assert run.state.monomorphic_type in TYPES
        assert run.events > 0

    def test_event_cap_reported(self):
        run = simulate_until(
            PopulationState(50, 0, 50, 0, 100), params(), TrialRng(3),
            stop=lambda s, t: s.monomorphic_type is not None,
            event_cap=5,
        )
        assert run.capped
        assert run.events == 5

    def test_identical_seeds_identical_trajectories(self):
        def collect(seed):
            st = PopulationState(50, 20, 20, 10, 100)
            rng = TrialRng(seed)
            p = params(rho=0.3 / 100)
            out = []
            for _ in range(200):
                if st.monomorphic_type is not None:
                    break
                st, dt = step(st, p, rng)
                out.append((tuple(st.counts()), dt))
            return out

        assert collect(42) == collect(42)
        assert collect(42) != collect(43)
