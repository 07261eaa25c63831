import math

import numpy as np
import pytest

from tensorcast import (
    CalibrationConfig,
    DataError,
    ModelParams,
    NumericalError,
    SimConfig,
    calibrate_all,
    calibrate_ou,
    ewma_correlation,
    historical_volatility,
    ratio_series,
    simulate_coupled,
)


def ewma_brute_force(x, y, w):
    """Direct weighted-sum form of the recursion (independent of the loop)."""
    x = np.asarray(x, dtype=float) - np.mean(x)
    y = np.asarray(y, dtype=float) - np.mean(y)
    n = x.size
    # weight of sample t (0-based): w^(n-1-t)*(1-w) for t >= 1, w^(n-1) for t = 0
    weights = np.array([w ** (n - 1) if t == 0 else (1 - w) * w ** (n - 1 - t) for t in range(n)])
    cov = float(np.sum(weights * x * y))
    vx = float(np.sum(weights * x * x))
    vy = float(np.sum(weights * y * y))
    return cov / math.sqrt(vx * vy)


def simulate_exact_ou(rng, lam, kappa, sigma, r0, n, dt=1.0):
    """Exact-discretization sampler, independent of the package kernels."""
    phi = math.exp(-lam * dt)
    noise_sd = sigma * math.sqrt((1.0 - phi * phi) / (2.0 * lam))
    out = np.empty(n)
    prev = r0
    for t in range(n):
        prev = kappa + phi * (prev - kappa) + noise_sd * rng.standard_normal()
        out[t] = prev
    return out


class TestRatioSeries:
    def test_hand_ratios(self):
        rs = ratio_series([2.0, 4.0, 2.0], guard=1e-12)
        np.testing.assert_array_equal(rs.values, [2.0, 0.5])
        np.testing.assert_array_equal(rs.pair_end_indices, [1, 2])
        assert rs.last_level == 2.0
        assert rs.dropped == 0

    def test_constant_series(self):
        rs = ratio_series([3.0, 3.0, 3.0, 3.0])
        np.testing.assert_array_equal(rs.values, [1.0, 1.0, 1.0])

    def test_guard_drops_zero_touching_pairs(self):
        with pytest.raises(NumericalError):
            ratio_series([1.0, 0.0, 3.0])

    def test_partial_drop_keeps_rest(self):
        rs = ratio_series([1.0, 0.0, 3.0, 6.0])
        np.testing.assert_array_equal(rs.values, [2.0])
        np.testing.assert_array_equal(rs.pair_end_indices, [3])
        assert rs.dropped == 2

    def test_too_short(self):
        with pytest.raises(DataError):
            ratio_series([1.0])


class TestHistoricalVolatility:
    def test_constant_log_returns(self):
        rs = ratio_series([1.0, math.e, math.e**2])
        assert historical_volatility(rs) == pytest.approx(0.0, abs=1e-14)

    def test_two_point_formula(self):
        rs = ratio_series([1.0, math.exp(0.1), math.exp(0.0)])
        # log-returns {0.1, -0.1}: mean 0, sample sd sqrt(0.02)
        assert historical_volatility(rs) == pytest.approx(math.sqrt(0.02), rel=1e-12)

    def test_scaling_invariance_exact(self):
        c = np.array([2.0, 4.0, 2.0, 6.0, 3.0, 9.0])
        v1 = historical_volatility(ratio_series(c))
        v2 = historical_volatility(ratio_series(10.0 * c))
        assert v1 == v2

    def test_single_ratio_rejected(self):
        with pytest.raises(NumericalError):
            historical_volatility(ratio_series([1.0, 2.0]))


class TestCalibrateOu:
    def test_round_trip_single_seed(self):
        lam, kappa, sigma = 0.25, -0.0011, 0.002
        rng = np.random.default_rng(19)
        path = simulate_exact_ou(rng, lam, kappa, sigma, r0=kappa, n=5000)
        lam_hat, kappa_hat, sigma_hat = calibrate_ou(path, dt=1.0)
        assert lam_hat == pytest.approx(lam, rel=0.10)
        assert kappa_hat == pytest.approx(kappa, abs=2e-4)
        assert sigma_hat == pytest.approx(sigma, rel=0.10)

    def test_round_trip_seed_sweep(self):
        lam, kappa, sigma = 0.25, -0.0011, 0.002
        ok = 0
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            path = simulate_exact_ou(rng, lam, kappa, sigma, r0=kappa, n=5000)
            lam_hat, kappa_hat, sigma_hat = calibrate_ou(path)
            if (
                abs(lam_hat - lam) <= 0.10 * lam
                and abs(kappa_hat - kappa) <= 2e-4
                and abs(sigma_hat - sigma) <= 0.10 * sigma
            ):
                ok += 1
        assert ok >= 18

    def test_constant_series_fails(self):
        with pytest.raises(NumericalError):
            calibrate_ou(np.full(50, -0.0011))

    def test_explosive_series_fails(self):
        # b > 1: trending series has no identifiable mean reversion
        path = np.cumsum(np.ones(100)) * 1.01
        with pytest.raises(NumericalError) as info:
            calibrate_ou(path)
        assert "b=" in str(info.value)

    def test_zero_noise_clamps_sigma(self):
        # noiseless AR(1) decay toward kappa: residuals identically zero
        lam, kappa = 0.2, 0.5
        phi = math.exp(-lam)
        path = [2.0]
        for _ in range(60):
            path.append(kappa + phi * (path[-1] - kappa))
        lam_hat, kappa_hat, sigma_hat = calibrate_ou(np.array(path))
        assert sigma_hat == 0.0
        assert lam_hat == pytest.approx(lam, rel=1e-6)
        assert kappa_hat == pytest.approx(kappa, rel=1e-6)

    def test_too_short(self):
        with pytest.raises(DataError):
            calibrate_ou(np.array([1.0, 2.0]))


class TestEwmaCorrelation:
    def test_self_correlation(self):
        x = np.array([1.0, 2.0, 0.5, 3.0])
        assert ewma_correlation(x, x, 0.9) == 1.0

    def test_anti_correlation(self):
        x = np.array([1.0, 2.0, 0.5, 3.0])
        assert ewma_correlation(x, -x, 0.9) == -1.0

    def test_matches_brute_force_unroll(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        y = np.array([1.0, 3.0, 2.0, 4.0])
        got = ewma_correlation(x, y, 0.9)
        want = ewma_brute_force(x, y, 0.9)
        assert got == pytest.approx(want, abs=1e-12)

    def test_matches_brute_force_on_random_series(self):
        rng = np.random.default_rng(5)
        for w in (0.5, 0.9, 0.99):
            x = rng.normal(size=40)
            y = rng.normal(size=40)
            assert ewma_correlation(x, y, w) == pytest.approx(ewma_brute_force(x, y, w), abs=1e-12)

    def test_affine_invariance(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=30)
        assert ewma_correlation(x, 2.0 * x + 5.0, 0.9) == pytest.approx(1.0, abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(NumericalError):
            ewma_correlation(np.ones(10), np.arange(10.0), 0.9)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            ewma_correlation(np.ones(3), np.ones(4), 0.9)


class TestCalibrateAll:
    def test_all_constant_inputs_fail(self):
        with pytest.raises(NumericalError):
            calibrate_all(np.full(30, 2.0), np.full(30, -0.0011))

    def test_failure_identifies_parameter(self):
        factor = np.exp(np.linspace(0.0, 1.0, 30))  # usable ratios
        with pytest.raises(NumericalError) as info:
            calibrate_all(factor, np.full(30, -0.0011))  # constant rates
        assert "lam" in str(info.value) or "drift" in str(info.value)

    def test_initial_states(self):
        rng = np.random.default_rng(8)
        factor = np.exp(rng.normal(scale=0.1, size=40).cumsum() + 1.0)
        rates = simulate_exact_ou(np.random.default_rng(9), 0.2, -0.001, 0.0005, -0.001, 40)
        params = calibrate_all(factor, rates)
        assert params.s0 == factor[-1]
        assert params.mu0 == rates[-1]

    def test_joint_round_trip(self):
        true = ModelParams(
            sigma_s=0.1, lam=0.2, kappa=0.0005, sigma_mu=0.003, rho=-0.5, s0=1.0, mu0=0.0005
        )
        cfg = SimConfig(n_paths=1, n_steps=5000, seed=123, record=True)
        bundle = simulate_coupled(true, cfg)
        level = bundle.s_paths[0]
        drift = bundle.mu_paths[0]
        est = calibrate_all(level, drift)
        assert est.sigma_s == pytest.approx(true.sigma_s, rel=0.15)
        assert est.rho == pytest.approx(true.rho, abs=0.15)
        # with a slower-decaying average the correlation recovery tightens
        est2 = calibrate_all(level, drift, CalibrationConfig(ewma_weight=0.995))
        assert est2.rho == pytest.approx(true.rho, abs=0.08)

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            calibrate_all(np.ones(10), np.ones(11))


class TestModelParams:
    def test_json_round_trip(self):
        p = ModelParams(
            sigma_s=0.5910, lam=0.2818, kappa=-0.0011, sigma_mu=0.0, rho=-0.2621, s0=2.7472, mu0=-0.0011
        )
        back = ModelParams.from_json(p.to_json())
        assert back == p
        assert '"units": "per-slot"' in p.to_json()

    def test_validation(self):
        with pytest.raises(ValueError):
            ModelParams(sigma_s=-0.1, lam=0.1, kappa=0.0, sigma_mu=0.0, rho=0.0, s0=1.0, mu0=0.0)
        with pytest.raises(ValueError):
            ModelParams(sigma_s=0.1, lam=0.1, kappa=0.0, sigma_mu=0.0, rho=1.5, s0=1.0, mu0=0.0)
