import math

import numpy as np
import pytest
from scipy import integrate

from vanetsched.theory import (
    Regime,
    bin_probability,
    degree_ccdf,
    degree_pdf,
    degree_trajectory,
    exponential_pdf,
    powerlaw_pdf,
    regime_for,
    tunable_params,
    tunable_pdf,
)


def integral(f, lo, hi=np.inf):
    value, _ = integrate.quad(f, lo, hi, limit=200, epsabs=1e-12, epsrel=1e-10)
    return value


class TestExamples:
    def test_exponential(self):
        assert exponential_pdf(2, 2) == pytest.approx(0.5)
        assert exponential_pdf(2, 1) == pytest.approx(math.exp(-1))

    def test_powerlaw(self):
        assert powerlaw_pdf(2, 2) == 1.0
        for m in (1, 2, 5):
            assert powerlaw_pdf(2 * m, m) == pytest.approx(1 / (4 * m))

    def test_tunable_constants(self):
        c = tunable_params(2, 0.5)
        assert c.gamma == 5.0
        assert (c.A, c.B, c.a, c.beta) == pytest.approx((6.0, 4.0, 4.0, 0.25))
        assert c.C == pytest.approx(5184.0)
        assert c.regime is Regime.TUNABLE

    def test_third_gamma(self):
        assert tunable_params(1, 1 / 3).gamma == pytest.approx(4.0)

    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("p", [0.05, 0.5, 0.9])
    def test_a_plus_m_equals_A(self, m, p):
        c = tunable_params(m, p)
        assert c.A == pytest.approx(m + c.a)
        assert c.gamma > 3

    def test_regime_dispatch(self):
        assert regime_for(0) is Regime.POWER_LAW
        assert regime_for(1) is Regime.EXPONENTIAL
        assert regime_for(0.3) is Regime.TUNABLE
        assert degree_pdf(2, 2, 0.0) == 1.0
        assert degree_pdf(2, 2, 1.0) == pytest.approx(0.5)


class TestErrors:
    def test_k_below_m(self):
        for f in (lambda: exponential_pdf(1, 2), lambda: powerlaw_pdf(1.5, 2), lambda: tunable_pdf(1, 2, 0.5)):
            with pytest.raises(ValueError):
                f()

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.2])
    def test_tunable_out_of_range(self, p):
        with pytest.raises(ValueError):
            tunable_params(2, p)

    def test_bad_m(self):
        with pytest.raises(ValueError):
            powerlaw_pdf(3, 0)

    def test_bad_trajectory_times(self):
        with pytest.raises(ValueError):
            degree_trajectory(5, 6, 2, 0.5, 5)
        with pytest.raises(ValueError):
            degree_trajectory(5, 0, 2, 0.5, 5)


class TestNormalization:
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_exponential_finite_window(self, m):
        # mass beyond 50m is e^-49, far below the tolerance
        assert integral(lambda k: exponential_pdf(k, m), m, 50 * m) == pytest.approx(1, abs=1e-6)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_powerlaw(self, m):
        assert integral(lambda k: powerlaw_pdf(k, m), m) == pytest.approx(1, abs=1e-6)

    @pytest.mark.parametrize("m", [1, 2, 3])
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_tunable(self, m, p):
        assert integral(lambda k: tunable_pdf(k, m, p), m) == pytest.approx(1, abs=1e-6)

    @pytest.mark.parametrize("p", [0.0, 0.3, 0.7, 1.0])
    def test_ccdf_matches_quadrature(self, p):
        m = 2
        for k in (2.5, 4.0, 9.0, 30.0):
            assert degree_ccdf(k, m, p) == pytest.approx(integral(lambda x: degree_pdf(x, m, p), k), rel=1e-6)

    def test_bins_partition_unit_mass(self):
        edges = [2, 3, 5, 9, 17, 33, 65, 129, math.inf]
        total = sum(bin_probability(lo, hi, 2, 0.5) for lo, hi in zip(edges[:-1], edges[1:]))
        assert total == pytest.approx(1.0)
        assert bin_probability(0, 2, 2, 0.5) == 0.0


class TestShape:
    @pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 0.8, 1.0])
    def test_strictly_decreasing(self, p):
        ks = np.linspace(2, 200, 400)
        vals = [degree_pdf(k, 2, p) for k in ks]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_gamma_increasing_on_grid(self):
        gammas = [tunable_params(2, p).gamma for p in np.linspace(0.01, 0.99, 99)]
        assert all(a < b for a, b in zip(gammas, gammas[1:]))

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_small_p_converges_to_power_law(self, m):
        for k in np.linspace(m, 100 * m, 60):
            assert tunable_pdf(k, m, 1e-4) == pytest.approx(powerlaw_pdf(k, m), rel=1e-3)

    def test_extreme_p_stays_finite(self):
        value = tunable_pdf(3, 2, 0.999)
        assert math.isfinite(value) and value > 0


class TestTrajectory:
    @pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.9, 1.0])
    def test_initial_condition(self, p):
        assert degree_trajectory(7, 7, 2, p, 5) == pytest.approx(2.0)

    def test_square_root_growth(self):
        assert degree_trajectory(40, 10, 3, 0.0, 5) == pytest.approx(6.0)

    def test_uniform_keeps_m0(self):
        assert degree_trajectory(15, 5, 2, 1.0, 5) == pytest.approx(2 * (math.log(2) + 1))

    @pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
    def test_monotone(self, p):
        ts = np.linspace(10, 500, 50)
        by_t = [degree_trajectory(t, 10, 2, p, 5) for t in ts]
        by_ti = [degree_trajectory(500, ti, 2, p, 5) for ti in ts]
        assert all(a <= b for a, b in zip(by_t, by_t[1:]))
        assert all(a >= b for a, b in zip(by_ti, by_ti[1:]))

    def test_near_one_matches_uniform(self):
        tunable = degree_trajectory(10, 1, 2, 0.999, 0)
        assert tunable == pytest.approx(degree_trajectory(10, 1, 2, 1.0, 0), rel=0.01)
