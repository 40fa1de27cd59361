import math

import numpy as np
import pytest
from scipy import stats

from quantocds.mc import (
    McEstimate,
    SimConfig,
    quanto_bond_mc,
    simulate_default,
    simulate_fx,
    simulate_ou,
    survival_curve_mc,
    survival_probability_mc,
    verify_fx_symmetry,
    verify_rn_martingale,
)
from quantocds.model import HazardParams, QuantoFxParams, RatePair
from quantocds.pde import ou_mean_std

RATES0 = RatePair(0.0, 0.0)
H_TEST = HazardParams(a=0.08, b=3.7, sigma_y=0.2, y0=-5.0)

# flat-hazard setup: a = 0 and tiny vol keep exp(Y) pinned at exp(y0)
H_FLAT = HazardParams(a=0.0, b=0.0, sigma_y=0.0, y0=math.log(0.016746))


def flat_fx(gamma=0.0, sigma_z=0.0, rho=0.0, z0=1.0):
    return QuantoFxParams(z0=z0, sigma_z=sigma_z, gamma_z=gamma, rho=rho)


class TestSimulateOu:
    def test_degenerate_is_constant(self):
        h = HazardParams(a=0.0, b=0.0, sigma_y=0.0, y0=-3.0)
        path = simulate_ou(h, np.linspace(0, 5, 11), seed=1, n_paths=4)
        assert np.all(path == -3.0)

    def test_terminal_moments_match_closed_form(self):
        grid = np.linspace(0.0, 5.0, 26)
        paths = simulate_ou(H_TEST, grid, seed=7, n_paths=100_000)
        y5 = paths[:, -1]
        mean, sd = ou_mean_std(H_TEST, 5.0)
        se_mean = sd / math.sqrt(y5.size)
        assert abs(y5.mean() - mean) < 3 * se_mean
        # sample variance of a Gaussian: SE ~ var * sqrt(2/(n-1))
        se_var = sd**2 * math.sqrt(2.0 / (y5.size - 1))
        assert abs(y5.var(ddof=1) - sd**2) < 3 * se_var

    def test_zero_reversion_limit_variance(self):
        h = HazardParams(a=0.0, b=0.0, sigma_y=0.3, y0=0.0)
        paths = simulate_ou(h, np.array([0.0, 1.0]), seed=3, n_paths=200_000)
        v = paths[:, 1].var(ddof=1)
        assert v == pytest.approx(0.09, rel=0.02)

    def test_exact_transition_distribution(self):
        # KS test of a single exact step against its closed-form Gaussian
        rng = np.random.default_rng(2024)
        for _ in range(4):
            a = float(rng.uniform(0.0, 2.0))
            b = float(rng.uniform(-5.0, 5.0))
            sig = float(rng.uniform(0.05, 1.0))
            dt = float(rng.uniform(0.01, 2.0))
            h = HazardParams(a=a, b=b, sigma_y=sig, y0=-1.0)
            sample = simulate_ou(h, np.array([0.0, dt]), seed=5, n_paths=20_000)[:, 1]
            mean, sd = ou_mean_std(h, dt)
            p = stats.kstest(sample, stats.norm(loc=mean, scale=sd).cdf).pvalue
            assert p > 0.01

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            simulate_ou(H_TEST, np.array([0.5, 1.0]), seed=0)
        with pytest.raises(ValueError):
            simulate_ou(H_TEST, np.array([0.0, 1.0, 1.0]), seed=0)


class TestSimulateDefault:
    def test_zero_intensity_never_defaults(self):
        grid = np.linspace(0, 5, 21)
        lam = np.zeros((8, 21))
        defaulted, tau = simulate_default(grid, lam, np.full(8, 0.7))
        assert not defaulted.any()
        assert np.all(np.isnan(tau))

    def test_constant_hazard_survival_frequency(self):
        lam0 = 0.016746
        n = 200_000
        grid = np.linspace(0, 5, 6)
        lam = np.full((n, 6), lam0)
        e = -np.log1p(-np.random.default_rng(11).uniform(size=n))
        defaulted, tau = simulate_default(grid, lam, e)
        p_true = math.exp(-lam0 * 5)
        se = math.sqrt(p_true * (1 - p_true) / n)
        assert abs((~defaulted).mean() - p_true) < 3 * se

    def test_tau_interpolation_is_exact_for_constant_hazard(self):
        grid = np.linspace(0, 5, 11)
        lam = np.full((1, 11), 0.4)
        e = np.array([0.9])
        defaulted, tau = simulate_default(grid, lam, e)
        assert defaulted[0]
        assert tau[0] == pytest.approx(0.9 / 0.4, rel=1e-12)

    def test_zero_threshold_is_immediate_default(self):
        grid = np.linspace(0, 1, 5)
        lam = np.full((1, 5), 0.1)
        defaulted, tau = simulate_default(grid, lam, np.array([0.0]))
        assert defaulted[0] and tau[0] == 0.0

    def test_negative_intensity_rejected(self):
        grid = np.linspace(0, 1, 3)
        with pytest.raises(ValueError):
            simulate_default(grid, np.full((1, 3), -0.1), np.array([1.0]))


class TestSimulateFx:
    def test_degenerate_is_constant(self):
        grid = np.linspace(0, 5, 11)
        lam = np.full((4, 11), 0.02)
        defaulted = np.zeros(4, dtype=bool)
        tau = np.full(4, np.nan)
        zn = np.zeros((4, 10))
        z = simulate_fx(flat_fx(z0=0.8), RATES0, grid, lam, defaulted, tau, zn)
        assert np.allclose(z, 0.8, rtol=1e-14)

    def test_gbm_expectation(self):
        rates = RatePair(0.03, 0.01)
        grid = np.linspace(0, 2, 41)
        n = 100_000
        rng = np.random.default_rng(5)
        lam = np.full((n, 41), 0.02)
        defaulted = np.zeros(n, dtype=bool)
        tau = np.full(n, np.nan)
        zn = rng.standard_normal((n, 40))
        z = simulate_fx(flat_fx(sigma_z=0.2, z0=1.3), rates, grid, lam, defaulted, tau, zn)
        target = 1.3 * math.exp((rates.r - rates.r_hat) * 2.0)
        zt = z[:, -1]
        assert abs(zt.mean() - target) < 3 * zt.std(ddof=1) / math.sqrt(n)

    def test_jump_applied_at_crossing_node(self):
        # no diffusion: the pre-default drift is the pure compensator, so
        # each step multiplies by exp(+0.5*lam*dt) until the step holding
        # tau, which additionally halves the rate
        lam0, gamma = 0.4, -0.5
        grid = np.linspace(0, 5, 11)
        lam = np.full((1, 11), lam0)
        defaulted = np.array([True])
        tau = np.array([2.3])
        zn = np.zeros((1, 10))
        z = simulate_fx(flat_fx(gamma=gamma), RATES0, grid, lam, defaulted, tau, zn)[0]
        step = math.exp(-gamma * lam0 * 0.5)
        assert z[4] == pytest.approx(step**4, rel=1e-12)          # before tau
        assert z[5] == pytest.approx(step**5 * 0.5, rel=1e-12)    # tau in (2.0, 2.5]
        # post-default drift has no compensator
        assert z[6] == pytest.approx(z[5], rel=1e-12)


class TestSurvivalEstimators:
    def test_flat_hazard_is_exact(self):
        cfg = SimConfig(n_paths=4_000, n_steps=50, horizon=5.0, seed=1)
        est = survival_probability_mc(H_FLAT, 5.0, cfg)
        assert est.mean == pytest.approx(math.exp(-0.016746 * 5), rel=1e-12)
        assert est.std_error == pytest.approx(0.0, abs=1e-8)

    def test_zero_tenor(self):
        cfg = SimConfig(n_paths=100, n_steps=10, horizon=1.0, seed=1)
        assert survival_probability_mc(H_TEST, 0.0, cfg).mean == 1.0

    def test_tenor_beyond_horizon_rejected(self):
        cfg = SimConfig(n_paths=100, n_steps=10, horizon=1.0, seed=1)
        with pytest.raises(ValueError):
            survival_probability_mc(H_TEST, 2.0, cfg)

    def test_ou_survival_brackets_closed_form_mean(self):
        cfg = SimConfig(n_paths=100_000, n_steps=200, horizon=5.0, seed=9)
        est = survival_probability_mc(H_TEST, 5.0, cfg)
        assert 0.0 <= est.mean <= 1.0
        # independent reference computed from a fine one-factor PDE solve
        from quantocds.pde import survival_curve_1f

        ref = survival_curve_1f(H_TEST, [5.0], n_y=401, n_t=500)[0]
        assert abs(est.z_score(ref)) < 3.0

    def test_curve_monotone_in_tenor(self):
        cfg = SimConfig(n_paths=50_000, n_steps=120, horizon=6.0, seed=13)
        ests = survival_curve_mc(H_TEST, [1.0, 2.0, 4.0, 6.0], cfg)
        for a, b in zip(ests, ests[1:]):
            gap_se = math.hypot(a.std_error, b.std_error)
            assert b.mean <= a.mean + 2 * gap_se
        assert all(0.0 <= e.mean <= 1.0 for e in ests)

    def test_determinism(self):
        cfg = SimConfig(n_paths=30_000, n_steps=60, horizon=5.0, seed=42)
        e1 = survival_probability_mc(H_TEST, 5.0, cfg)
        e2 = survival_probability_mc(H_TEST, 5.0, cfg)
        assert e1 == e2

    def test_antithetic_preserves_mean_and_variance(self):
        # paired comparison across independent seeds: the antithetic
        # estimator must agree on the mean and not be noisier for this
        # monotone payoff
        plain, anti = [], []
        for seed in range(24):
            cfg = SimConfig(n_paths=4_000, n_steps=40, horizon=5.0, seed=seed)
            plain.append(survival_probability_mc(H_TEST, 5.0, cfg).mean)
            cfg_a = SimConfig(n_paths=4_000, n_steps=40, horizon=5.0, seed=seed,
                              antithetic=True)
            anti.append(survival_probability_mc(H_TEST, 5.0, cfg_a).mean)
        plain = np.array(plain)
        anti = np.array(anti)
        se = math.hypot(plain.std(ddof=1), anti.std(ddof=1)) / math.sqrt(plain.size)
        assert abs(plain.mean() - anti.mean()) < 3 * se
        assert anti.var(ddof=1) <= plain.var(ddof=1)


class TestQuantoBond:
    def test_no_quanto_effect(self):
        h = H_TEST
        cfg = SimConfig(n_paths=50_000, n_steps=100, horizon=3.0, seed=3)
        qb = quanto_bond_mc(h, flat_fx(), RATES0, 3.0, cfg)
        p = survival_probability_mc(h, 3.0, cfg)
        gap_se = math.hypot(qb.p_hat.std_error, p.std_error)
        assert abs(qb.p_hat.mean - p.mean) < 3 * gap_se

    def test_flat_hazard_reweighting_identity(self):
        # for constant hazard and rho = 0, the contractual survival is
        # exp(-gamma * lam * T) times the liquid one
        gamma = -0.2045
        lam = 0.016746
        cfg = SimConfig(n_paths=200_000, n_steps=50, horizon=1.0, seed=21)
        qb = quanto_bond_mc(H_FLAT, flat_fx(gamma=gamma, sigma_z=0.1), RATES0, 1.0, cfg)
        target = math.exp(-(1.0 + gamma) * lam)
        assert abs(qb.p_hat.z_score(target)) < 3.0

    def test_z0_homogeneity(self):
        cfg = SimConfig(n_paths=20_000, n_steps=60, horizon=2.0, seed=8)
        fx1 = QuantoFxParams(z0=0.8, sigma_z=0.1, gamma_z=-0.3, rho=0.4)
        fx2 = QuantoFxParams(z0=1.6, sigma_z=0.1, gamma_z=-0.3, rho=0.4)
        qb1 = quanto_bond_mc(H_TEST, fx1, RATES0, 2.0, cfg)
        qb2 = quanto_bond_mc(H_TEST, fx2, RATES0, 2.0, cfg)
        assert qb2.u.mean == pytest.approx(2 * qb1.u.mean, rel=1e-12)
        assert qb2.p_hat.mean == pytest.approx(qb1.p_hat.mean, rel=1e-12)


class TestMeasureChange:
    def test_degenerate_density_is_one_pathwise(self):
        cfg = SimConfig(n_paths=5_000, n_steps=40, horizon=5.0, seed=2)
        est = verify_rn_martingale(H_TEST, flat_fx(), RatePair(0.02, 0.01), 5.0, cfg)
        assert est.mean == pytest.approx(1.0, rel=1e-12)
        assert est.std_error == pytest.approx(0.0, abs=1e-13)

    def test_martingale_with_jump(self):
        h = HazardParams(a=0.0, b=0.0, sigma_y=0.0, y0=math.log(0.05))
        fx = flat_fx(gamma=-0.5, sigma_z=0.1)
        cfg = SimConfig(n_paths=200_000, n_steps=100, horizon=5.0, seed=6)
        est = verify_rn_martingale(h, fx, RATES0, 5.0, cfg)
        assert abs(est.z_score(1.0)) < 3.0

    def test_uncompensated_drift_detected(self):
        h = HazardParams(a=0.0, b=0.0, sigma_y=0.0, y0=math.log(0.05))
        fx = flat_fx(gamma=-0.5, sigma_z=0.1)
        cfg = SimConfig(n_paths=200_000, n_steps=100, horizon=5.0, seed=6)
        est = verify_rn_martingale(h, fx, RATES0, 5.0, cfg, drop_compensator=True)
        assert abs(est.z_score(1.0)) > 5.0
        # analytic bias: dropping the compensator leaves 1 + gamma * P(default)
        bias = 1.0 - 0.5 * (1.0 - math.exp(-0.05 * 5.0))
        assert abs(est.z_score(bias)) < 3.0


class TestFxSymmetry:
    def test_degenerate_constructions_coincide(self):
        cfg = SimConfig(n_paths=4_000, n_steps=30, horizon=2.0, seed=4)
        rep = verify_fx_symmetry(H_TEST, flat_fx(), RatePair(0.02, 0.01), 2.0, cfg)
        # with no vol and no jump the two measures are the same measure and
        # the block RNG layout makes the runs draw identical paths
        assert rep.p_hat_liquid.mean == pytest.approx(rep.p_hat_contractual.mean, rel=1e-12)
        assert rep.p_liquid.mean == pytest.approx(rep.p_contractual.mean, rel=1e-12)
        assert rep.reciprocal_error < 1e-12

    @pytest.mark.parametrize("gamma", [1.0, -0.2045])
    def test_dual_construction_agreement(self, gamma):
        h = HazardParams(a=1e-4, b=-210.45, sigma_y=0.2, y0=-4.089)
        fx = QuantoFxParams(z0=0.8, sigma_z=0.1, gamma_z=gamma, rho=0.5)
        cfg = SimConfig(n_paths=100_000, n_steps=100, horizon=5.0, seed=14)
        rep = verify_fx_symmetry(h, fx, RatePair(0.01, 0.02), 5.0, cfg)
        assert rep.max_z_score() < 3.0
        assert rep.reciprocal_error < 1e-12


class TestMcEstimate:
    def test_ci_shape(self):
        est = McEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
        assert est.mean == 2.5
        assert est.ci95_low == pytest.approx(est.mean - 1.96 * est.std_error)
        assert est.ci95_high == pytest.approx(est.mean + 1.96 * est.std_error)
        assert est.contains(2.5)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            SimConfig(n_paths=0, n_steps=10, horizon=1.0)
        with pytest.raises(ValueError):
            SimConfig(n_paths=10, n_steps=0, horizon=1.0)
        with pytest.raises(ValueError):
            SimConfig(n_paths=10, n_steps=10, horizon=0.0)
