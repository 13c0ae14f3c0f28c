import math

import numpy as np
import pytest

from moransweep import (
    LogisticCurve,
    ModelParams,
    consistency_check,
    logistic,
    phase_schedule,
)


def params(two_n=10_000, sigma=0.02, gamma=0.6, rho=0.0):
    return ModelParams(two_n=two_n, sigma=sigma, gamma=gamma, rho=rho)


class TestLogistic:
    def test_initial_value(self):
        for y0 in (0.001, 0.3, 0.9):
            assert logistic(LogisticCurve(y0, 0.5), 0.0) == pytest.approx(y0)

    def test_symmetric_sigmoid(self):
        curve = LogisticCurve(0.5, 0.7)
        for t in (-3.0, 0.0, 1.0, 10.0):
            assert curve.value(t) == pytest.approx(1 / (1 + math.exp(-0.7 * t)))

    def test_strictly_increasing_and_bounded(self):
        curve = LogisticCurve(0.01, 0.3)
        ts = np.linspace(-20, 60, 200)
        vals = [curve.value(t) for t in ts]
        assert all(0 < v < 1 for v in vals)
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_satisfies_its_ode(self):
        curve = LogisticCurve(0.05, 0.4)
        h = 1e-5
        for t in np.linspace(0.0, 30.0, 40):
            deriv = (curve.value(t + h) - curve.value(t - h)) / (2 * h)
            v = curve.value(t)
            assert deriv == pytest.approx(0.4 * v * (1 - v), rel=1e-6)

    def test_time_additivity(self):
        curve = LogisticCurve(0.02, 0.25)
        for s, t in [(1.0, 2.0), (5.0, 17.0), (0.3, 40.0)]:
            chained = LogisticCurve(curve.value(s), 0.25).value(t)
            assert chained == pytest.approx(curve.value(s + t), rel=1e-12)

    def test_time_to_reach_inverts_value(self):
        curve = LogisticCurve(0.07, 0.9)
        for x in (0.01, 0.07, 0.5, 0.99):
            assert curve.value(curve.time_to_reach(x)) == pytest.approx(x, rel=1e-12)


class TestPhaseSchedule:
    def test_reference_point_values(self):
        # sigma=0.02, gamma=0.6, zeta=0.3, 2N=1e4
        s = phase_schedule(params(), 0.3)
        assert s.a0 == pytest.approx(1 / 6)
        assert s.t0 == pytest.approx((1 / 6) / 0.02 * math.log(10_000), rel=1e-12)
        assert s.t0 == pytest.approx(76.75, abs=0.01)
        assert s.delta11 == pytest.approx(0.001)
        assert s.delta11_count == 10
        assert s.b_10_2 == pytest.approx(0.25)
        assert s.b_10_3 == pytest.approx(0.6 * 0.25 / 90)
        assert s.c_10_3 == pytest.approx(10_000 ** -(0.6 * 0.25 / 90), rel=1e-12)
        assert s.c1 == s.c_10_3  # literal unless capped

    def test_derived_constants_tie_together(self):
        s = phase_schedule(params(), 0.3)
        assert s.b_01_1 == s.b_01_2 == pytest.approx(s.gamma * s.b_10_2 / 3)
        assert s.delta_01_1 == pytest.approx(s.gamma * s.b_10_2 / 9)
        assert s.delta_10_2 == pytest.approx(s.delta_01_1 / 60)
        assert s.delta_10_1 == pytest.approx((s.a0 - s.a1) / 4)
        assert s.c2 == pytest.approx(10_000 ** (-s.delta_01_1 / 2))
        assert s.c3 == pytest.approx(10_000 ** (-s.delta_10_2))
        # cutoff exponents are positive in the accepted regime
        assert min(s.b_10_3, s.delta_01_1, s.delta_10_2) > 0

    def test_t_early_formula(self):
        p = params(rho=1e-5)
        s = phase_schedule(p, 0.3)
        want = 1.01 * math.log(10_000) / (0.02 * 0.4 - 1e-5)
        assert s.t_early == pytest.approx(want, rel=1e-12)

    def test_t_mid_crosses_to_one_minus_c1(self):
        s = phase_schedule(params(), 0.3, c1_cap=0.01)
        assert s.resident_curve().value(s.t_mid) == pytest.approx(1 - s.c1, rel=1e-10)
        assert s.t_mid > 0

    def test_t_late(self):
        s = phase_schedule(params(), 0.3)
        assert s.t_late == pytest.approx(1.02 / (0.02 * 0.6) * math.log(10_000), rel=1e-12)

    def test_cap_only_lowers_c1(self):
        lit = phase_schedule(params(), 0.3)
        cap = phase_schedule(params(), 0.3, c1_cap=0.01)
        assert cap.c1 == 0.01 and cap.c1_capped
        assert not lit.c1_capped
        for field in ("a0", "a1", "b_10_2", "c2", "c3", "t0", "t_early", "t_late"):
            assert getattr(lit, field) == getattr(cap, field)

    def test_rejects_wrong_regimes(self):
        with pytest.raises(ValueError):
            phase_schedule(params(), 0.7)  # zeta >= gamma
        with pytest.raises(ValueError):
            phase_schedule(params(rho=0.1), 0.3)  # sigma(1-gamma) <= rho

    def test_continuity_in_parameters(self):
        base = phase_schedule(params(), 0.3)
        for eps in (1e-6, -1e-6):
            near = phase_schedule(params(sigma=0.02 + eps), 0.3)
            assert near.t0 == pytest.approx(base.t0, rel=1e-3)
            near_z = phase_schedule(params(), 0.3 + eps)
            assert near_z.a0 == pytest.approx(base.a0, rel=1e-3)


class TestConsistencyCheck:
    def test_reference_regime_clean_at_large_n(self):
        p = params(two_n=10**8)
        s = phase_schedule(p, 0.3)
        assert consistency_check(s, p, 0.3) == []

    def test_tiny_population_does_not_crash(self):
        p = params(two_n=8)
        s = phase_schedule(p, 0.3)
        result = consistency_check(s, p, 0.3)
        assert isinstance(result, list)

    @pytest.mark.parametrize("sigma,gamma,zeta", [
        (0.02, 0.6, 0.3),
        (0.02, 0.6, 0.55),
        (0.05, 0.9, 0.1),
        (0.1, 0.8, 0.7),
    ])
    def test_violations_monotone_in_population_size(self, sigma, gamma, zeta):
        clean_seen = False
        for two_n in (8, 32, 128, 1024, 10_000, 10**6, 10**8, 10**10):
            p = ModelParams(two_n=two_n, sigma=sigma, gamma=gamma, rho=0.0)
            s = phase_schedule(p, zeta)
            ok = consistency_check(s, p, zeta) == []
            if clean_seen:
                assert ok, f"violations reappeared at 2N={two_n}"
            clean_seen = clean_seen or ok
        assert clean_seen
