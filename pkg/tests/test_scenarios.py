import math

import pytest

from moransweep import (
    ARRIVAL_IN_00,
    ARRIVAL_IN_01,
    ModelParams,
    ScenarioConfig,
    TrialRng,
    TYPES,
    build_initial_state,
    draw_arrival,
    in_first_half,
    run_fixation_trial,
)


def config(two_n=1000, sigma=0.02, gamma=0.6, rho=0.0, **kwargs):
    params = ModelParams(two_n=two_n, sigma=sigma, gamma=gamma, rho=rho)
    return ScenarioConfig(params=params, **kwargs)


class TestScenarioConfig:
    def test_requires_exactly_one_of_zeta_u(self):
        with pytest.raises(ValueError):
            config(zeta=0.3, u_count=5)
        with pytest.raises(ValueError):
            config()

    def test_zeta_maps_to_rounded_power(self):
        # 2N=1000, zeta=0.3: U = round(1000^0.7) = 126
        assert config(zeta=0.3).resolved_u == 126

    def test_zeta_clamped_to_interior(self):
        assert config(zeta=0.999).resolved_u == 1
        assert config(zeta=1e-9).resolved_u == 998


class TestBuildInitialState:
    def test_in_00_composition(self):
        st = build_initial_state(config(u_count=31))
        assert (st.n00, st.n01, st.n10, st.n11) == (968, 31, 1, 0)

    def test_in_01_composition(self):
        st = build_initial_state(config(u_count=31, arrival_type=ARRIVAL_IN_01))
        assert (st.n00, st.n01, st.n10, st.n11) == (969, 30, 0, 1)

    def test_no_room_for_mutant(self):
        with pytest.raises(ValueError):
            build_initial_state(config(two_n=100, u_count=100))

    def test_in_01_requires_a_carrier(self):
        with pytest.raises(ValueError):
            build_initial_state(config(u_count=0, arrival_type=ARRIVAL_IN_01))

    def test_pure_two_type_start_allowed(self):
        st = build_initial_state(config(two_n=100, u_count=0))
        assert (st.n00, st.n01, st.n10, st.n11) == (99, 0, 1, 0)

    def test_tiny_population_rejected(self):
        with pytest.raises(ValueError):
            build_initial_state(config(two_n=2, u_count=1))

    def test_invariants_hold_across_range(self):
        for u in (0, 1, 500, 998):
            st = build_initial_state(config(u_count=u))
            assert sum(st.counts()) == 1000
            assert st.n10 + st.n11 == 1


class TestRunFixationTrial:
    def test_completes_with_unique_winner(self):
        out = run_fixation_trial(config(two_n=200, u_count=20, seed=11, rho=0.5 / 200))
        assert not out.censored
        assert out.fixed_type in TYPES
        assert out.t_fix > 0.0
        assert out.events > 0

    def test_bit_reproducible(self):
        c = config(two_n=200, u_count=20, seed=77, rho=0.5 / 200)
        a = run_fixation_trial(c)
        b = run_fixation_trial(c)
        assert a == b

    def test_event_cap_censors(self):
        out = run_fixation_trial(config(two_n=400, u_count=40, seed=5), event_cap=10)
        assert out.censored
        assert out.fixed_type is None
        assert out.events == 10

    def test_establishment_flag_consistent_with_outcome(self):
        # whenever 11 fixes it must have passed the establishment count
        c = config(two_n=200, zeta=0.3, rho=2.0 / 200)
        for seed in range(300):
            out = run_fixation_trial(ScenarioConfig(
                params=c.params, arrival_type=c.arrival_type, zeta=c.zeta, seed=seed))
            if out.fixed_type == "11":
                assert out.hit_establishment


class TestDrawArrival:
    def test_monotone_u_in_zeta(self):
        us = [config(zeta=z).resolved_u for z in (0.05, 0.3, 0.6, 0.95)]
        assert us == sorted(us, reverse=True)

    def test_arrival_type_frequency(self):
        params = ModelParams(two_n=10_000, sigma=0.02, gamma=0.6, rho=0.0)
        rng = TrialRng(123)
        n = 4000
        in01 = sum(
            draw_arrival(params, rng).arrival_type == ARRIVAL_IN_01 for _ in range(n)
        )
        # P(in_01) = E[U/2N]; U = (2N)^(1-zeta) with zeta uniform:
        # E = int_0^1 (2N)^-z dz = (1 - 1/2N)/log(2N) ~ 0.1085 at 2N=1e4
        expect = (1 - 1 / 10_000) / math.log(10_000)
        se = math.sqrt(expect * (1 - expect) / n)
        assert abs(in01 / n - expect) < 4 * se

    def test_zeta_uniform_ks(self):
        from scipy import stats

        params = ModelParams(two_n=10_000, sigma=0.02, gamma=0.6, rho=0.0)
        rng = TrialRng(99)
        zs = [draw_arrival(params, rng).zeta for _ in range(10_000)]
        assert stats.kstest(zs, "uniform").pvalue > 0.01

    def test_draws_are_runnable_configs(self):
        params = ModelParams(two_n=500, sigma=0.02, gamma=0.6, rho=0.1 / 500)
        rng = TrialRng(4)
        for _ in range(50):
            c = draw_arrival(params, rng)
            st = build_initial_state(c)
            assert sum(st.counts()) == 500


def test_in_first_half_predicate():
    assert in_first_half(build_initial_state(config(u_count=100)))
    assert not in_first_half(build_initial_state(config(u_count=700)))
