import itertools
import math

import numpy as np
import pytest

from dpgossip.compress import clip_per_coordinate
from dpgossip.privacy import (
    AccountingLedger,
    BudgetError,
    PrivacyBudget,
    amplify_by_subsampling,
    calibrate_sigma,
    compose_advanced,
    gaussian_sensitivity,
    minimal_iterations,
    per_step_epsilon,
    sample_gaussian_noise,
    stream,
    verify_budget,
)
from dpgossip.problems import logistic_grad


def random_admissible_params(rng):
    """Draw a random parameter tuple satisfying the calibration preconditions."""
    epsilon = float(rng.uniform(0.05, 1.0))
    delta0 = float(10.0 ** rng.uniform(-8, -2))
    p = float(rng.uniform(0.5, 1.0))
    q = int(rng.integers(1, 500))
    d = int(rng.integers(1, 200))
    k = int(rng.integers(1, d + 1))
    G = float(rng.uniform(0.1, 10.0))
    t_min = minimal_iterations(epsilon, p, q)
    T = int(t_min + rng.integers(0, 10 * t_min + 10))
    return epsilon, delta0, T, p, q, k, d, G


class TestSensitivity:
    def test_full_gradient_recovers_classical_value(self):
        assert gaussian_sensitivity(30, 30, 1.5) == pytest.approx(3.0, abs=1e-15)

    def test_quarter_coordinates(self):
        assert gaussian_sensitivity(2, 8, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            gaussian_sensitivity(0, 4, 1.0)
        with pytest.raises(ValueError):
            gaussian_sensitivity(5, 4, 1.0)
        with pytest.raises(ValueError):
            gaussian_sensitivity(2, 4, 0.0)

    def test_exhaustive_neighboring_dataset_oracle(self):
        # all replace-one neighbors, all coordinate subsets, clipped gradients
        rng = np.random.default_rng(123)
        G = 1.0
        d, q = 3, 2
        checked = 0
        for _ in range(40):
            x = rng.normal(size=d)
            data = rng.normal(scale=4, size=(q, d))
            labels = rng.choice([-1, 1], size=q)
            alt = rng.normal(scale=4, size=d)
            alt_label = int(rng.choice([-1, 1]))
            for r in range(q):
                g = clip_per_coordinate(logistic_grad(x, data[r], int(labels[r]), q), G)
                g_alt = clip_per_coordinate(logistic_grad(x, alt, alt_label, q), G)
                for k in range(1, d + 1):
                    bound = gaussian_sensitivity(k, d, G)
                    for subset in itertools.combinations(range(d), k):
                        diff = g[list(subset)] - g_alt[list(subset)]
                        assert np.linalg.norm(diff) <= bound + 1e-12
                        checked += 1
        assert checked >= 40 * q * 7


class TestCalibration:
    def test_worked_example(self):
        sigma = calibrate_sigma(1.0, 1e-5, 10_000, 1.0, 100, 7, 7, 1.0)
        assert sigma**2 == pytest.approx(1877.77104260551, rel=1e-12)
        assert sigma == pytest.approx(43.33325561973748, rel=1e-12)

    def test_linear_in_k_over_d(self):
        full = calibrate_sigma(0.5, 1e-6, 1000, 0.9, 50, 16, 16, 2.0)
        half = calibrate_sigma(0.5, 1e-6, 1000, 0.9, 50, 8, 16, 2.0)
        assert half**2 == pytest.approx(full**2 / 2, rel=1e-12)

    def test_quadratic_in_p(self):
        hi = calibrate_sigma(0.5, 1e-6, 1000, 1.0, 50, 4, 16, 2.0)
        lo = calibrate_sigma(0.5, 1e-6, 1000, 0.5, 50, 4, 16, 2.0)
        assert hi**2 / lo**2 == pytest.approx(4.0, rel=1e-12)

    def test_rejects_small_T_naming_minimum(self):
        with pytest.raises(BudgetError, match=str(minimal_iterations(1.0, 0.5, 100))):
            calibrate_sigma(1.0, 1e-5, 10, 0.5, 100, 4, 4, 1.0)

    def test_domain_checks(self):
        with pytest.raises(BudgetError):
            calibrate_sigma(1.5, 1e-5, 1000, 1.0, 10, 4, 4, 1.0)
        with pytest.raises(BudgetError):
            calibrate_sigma(0.5, 1e-5, 1000, 0.4, 10, 4, 4, 1.0)
        with pytest.raises(BudgetError):
            calibrate_sigma(0.5, 2.0, 1000, 1.0, 10, 4, 4, 1.0)

    def test_monotonicity(self):
        # sigma nondecreasing in k, p, T, G; nonincreasing in q, d, epsilon, delta0
        rng = np.random.default_rng(42)
        for _ in range(200):
            epsilon, delta0, T, p, q, k, d, G = random_admissible_params(rng)
            base = calibrate_sigma(epsilon, delta0, T, p, q, k, d, G)
            if k < d:
                assert calibrate_sigma(epsilon, delta0, T, p, q, k + 1, d, G) >= base
            if p <= 0.99:
                assert calibrate_sigma(epsilon, delta0, T, min(1.0, p * 1.01), q, k, d, G) >= base
            assert calibrate_sigma(epsilon, delta0, 2 * T, p, q, k, d, G) >= base
            assert calibrate_sigma(epsilon, delta0, T, p, q, k, d, 2 * G) >= base
            if T >= (2 * q) ** 2 * epsilon**2 / (4 * p**2):
                assert calibrate_sigma(epsilon, delta0, T, p, 2 * q, k, d, G) <= base
            assert calibrate_sigma(epsilon, delta0, T, p, q, k, 2 * d, G) <= base
            if epsilon <= 0.5 and T >= q**2 * (2 * epsilon) ** 2 / (4 * p**2):
                assert calibrate_sigma(2 * epsilon, delta0, T, p, q, k, d, G) <= base
            assert calibrate_sigma(epsilon, min(1.0, delta0 * 10), T, p, q, k, d, G) <= base


class TestPerStepEpsilon:
    def test_round_trip_identity(self):
        epsilon, delta0, T, p, q, k, d, G = 1.0, 1e-5, 10_000, 1.0, 100, 5, 9, 1.0
        sigma = calibrate_sigma(epsilon, delta0, T, p, q, k, d, G)
        eps_t = per_step_epsilon(sigma, k, d, delta0, G)
        target = q**2 * epsilon**2 / (20 * p**2 * T)
        assert eps_t**2 == pytest.approx(target, rel=1e-10)
        assert eps_t**2 <= 0.2 + 1e-12

    def test_vanishes_for_large_sigma(self):
        assert per_step_epsilon(1e12, 4, 4, 1e-5, 1.0) < 1e-10

    def test_unit_calibration(self):
        k, d, delta0, G = 3, 12, 1e-4, 2.0
        sigma = math.sqrt(2 * k * math.log(1.25 / delta0)) * 2 * G / math.sqrt(d)
        assert per_step_epsilon(sigma, k, d, delta0, G) == pytest.approx(1.0, rel=1e-12)


class TestAmplification:
    def test_exact_value(self):
        got = amplify_by_subsampling(0.1, 0.5, 10, mode="exact")
        assert got == pytest.approx(0.005244768031214577, rel=1e-12)

    def test_zero_epsilon(self):
        assert amplify_by_subsampling(0.0, 0.7, 5, mode="exact") == 0.0
        assert amplify_by_subsampling(0.0, 0.7, 5, mode="paper_bound") == 0.0

    def test_bound_dominates_exact(self):
        got = amplify_by_subsampling(0.1, 0.5, 10, mode="paper_bound")
        assert got == pytest.approx(0.01, rel=1e-15)
        assert amplify_by_subsampling(0.1, 0.5, 10, mode="exact") <= got

    def test_bound_dominates_on_admissible_range(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            eps = float(rng.uniform(0, math.sqrt(0.2)))
            p = float(rng.uniform(0.01, 1.0))
            q = int(rng.integers(1, 1000))
            exact = amplify_by_subsampling(eps, p, q, mode="exact")
            bound = amplify_by_subsampling(eps, p, q, mode="paper_bound")
            assert exact <= bound + 1e-15

    def test_paper_bound_rejects_large_epsilon(self):
        with pytest.raises(ValueError, match="1/5"):
            amplify_by_subsampling(0.5, 0.5, 10, mode="paper_bound")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            amplify_by_subsampling(0.1, 0.5, 10, mode="bogus")


class TestComposition:
    def test_single_step_example(self):
        eps_tilde, delta_tilde = compose_advanced([0.1], [1e-6], 1e-6)
        assert eps_tilde == pytest.approx(0.48985315769345666, rel=1e-12)
        assert delta_tilde == pytest.approx(2e-6, rel=1e-6)

    def test_zero_epsilons(self):
        eps_tilde, delta_tilde = compose_advanced([0.0, 0.0], [1e-5, 1e-5], 0.5)
        assert eps_tilde == 0.0
        expected = 1 - 0.5 * (1 - 1e-5) ** 2
        assert delta_tilde == pytest.approx(expected, rel=1e-12)

    def test_rejects_eps_above_composition_window(self):
        with pytest.raises(BudgetError, match="0.9"):
            compose_advanced([0.95], [1e-6], 1e-6)

    def test_rejects_bad_delta(self):
        with pytest.raises(BudgetError):
            compose_advanced([0.1], [0.0], 1e-6)
        with pytest.raises(BudgetError):
            compose_advanced([0.1], [1e-6], 0.0)

    def test_sqrt_sum_delta_prime_choice_closes_the_chain(self):
        # with delta' = sqrt(sum eps'^2) = eps/sqrt(5), the composed epsilon
        # is sqrt(2/5 ln(e+1)) eps + eps^2/5 <= eps for eps <= 1
        for eps in (0.05, 0.3, 1.0):
            T = 400
            per = eps / math.sqrt(5 * T)
            dprime = math.sqrt(T * per**2)
            eps_tilde, _ = compose_advanced([per] * T, [1e-9] * T, dprime)
            expected = math.sqrt(2 * eps**2 / 5 * math.log(math.e + 1)) + eps**2 / 5
            assert eps_tilde == pytest.approx(expected, rel=1e-12)
            assert eps_tilde <= eps


class TestVerifyBudget:
    def test_round_trip_on_random_admissible_tuples(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            epsilon, delta0, T, p, q, k, d, G = random_admissible_params(rng)
            budget = PrivacyBudget.calibrated(epsilon, delta0, T, p, q, k, d, G)
            ledger = verify_budget(budget)
            assert ledger.composed_eps <= epsilon
            assert isinstance(ledger, AccountingLedger)

    def test_undersized_sigma_fails_at_composition(self):
        budget = PrivacyBudget.calibrated(1.0, 1e-5, 10_000, 1.0, 100, 4, 4, 1.0)
        shrunk = PrivacyBudget(
            epsilon=budget.epsilon, delta0=budget.delta0, T=budget.T, p=budget.p,
            q=budget.q, k=budget.k, d=budget.d, G=budget.G, sigma=0.5 * budget.sigma,
        )
        with pytest.raises(BudgetError, match="composition step"):
            verify_budget(shrunk)

    def test_severely_undersized_sigma_fails_at_amplification(self):
        budget = PrivacyBudget.calibrated(1.0, 1e-5, 10_000, 1.0, 100, 4, 4, 1.0)
        shrunk = PrivacyBudget(
            epsilon=budget.epsilon, delta0=budget.delta0, T=budget.T, p=budget.p,
            q=budget.q, k=budget.k, d=budget.d, G=budget.G, sigma=0.05 * budget.sigma,
        )
        with pytest.raises(BudgetError, match="amplification step"):
            verify_budget(shrunk)

    def test_rejects_T_below_side_condition(self):
        with pytest.raises(BudgetError, match="admissible minimum"):
            PrivacyBudget(
                epsilon=1.0, delta0=1e-5, T=100, p=0.5, q=100, k=4, d=4, G=1.0, sigma=50.0
            )

    def test_ledger_report_has_one_line_per_stage(self):
        budget = PrivacyBudget.calibrated(0.5, 1e-5, 5000, 0.8, 50, 3, 10, 1.0)
        report = verify_budget(budget).report()
        lines = report.strip().splitlines()
        assert len(lines) == 4
        for stage in ("per_step", "subsampled", "composed", "post_processed"):
            assert any(line.startswith(stage) for line in lines)
        for line in lines:
            assert "eps=" in line and "delta=" in line


class TestNoiseSampling:
    def test_zero_sigma_returns_zero_vector(self):
        rng = stream(0, 0, 0, 2)
        assert np.array_equal(sample_gaussian_noise(5, 0.0, rng), np.zeros(5))

    def test_moments(self):
        rng = stream(7, 0, 0, 2)
        xs = sample_gaussian_noise(1_000_000, 2.0, rng)
        assert abs(xs.mean()) <= 4 * 2.0 / 1000
        assert abs(xs.var() - 4.0) <= 0.02 * 4.0

    def test_reproducible_per_key(self):
        a = sample_gaussian_noise(10, 1.5, stream(3, 2, 9, 2))
        b = sample_gaussian_noise(10, 1.5, stream(3, 2, 9, 2))
        assert np.array_equal(a, b)

    def test_distinct_keys_give_distinct_streams(self):
        base = sample_gaussian_noise(10, 1.0, stream(3, 2, 9, 2))
        for key in [(4, 2, 9, 2), (3, 1, 9, 2), (3, 2, 8, 2), (3, 2, 9, 1)]:
            other = sample_gaussian_noise(10, 1.0, stream(*key))
            assert not np.array_equal(base, other)

    def test_rejects_negative_sigma(self):
        with pytest.raises(ValueError):
            sample_gaussian_noise(3, -1.0, stream(0, 0, 0, 2))
