import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import expit
from scipy.stats import norm

from dpgossip.problems import (
    Dataset,
    LogisticProblem,
    QuadraticProblem,
    load_svmlight,
    logistic_grad,
    logistic_loss,
    quadratic_problem,
    save_svmlight,
    solve_reference,
    synthetic_logistic_data,
)


def finite_difference_grad(fn, x, h=1e-6):
    g = np.zeros_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


class TestLogisticOracles:
    def test_at_origin(self):
        a = np.array([1.0, -2.0, 0.5])
        for b in (-1, 1):
            assert logistic_loss(np.zeros(3), a, b, q=10) == pytest.approx(math.log(2), rel=1e-15)
            assert np.allclose(logistic_grad(np.zeros(3), a, b, q=10), -b * a / 2, atol=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            d = 8
            x = rng.normal(size=d)
            a = rng.normal(size=d)
            b = int(rng.choice([-1, 1]))
            q = int(rng.integers(1, 50))
            g = logistic_grad(x, a, b, q)
            g_fd = finite_difference_grad(lambda z: logistic_loss(z, a, b, q), x)
            assert np.linalg.norm(g - g_fd) <= 1e-5 * max(1.0, np.linalg.norm(g))

    def test_large_margin_stability(self):
        a = np.array([50.0])
        x = np.array([1.0])
        loss = logistic_loss(x, a, 1, q=1) - 0.5  # subtract the x^2/(2q) term
        assert loss == pytest.approx(math.exp(-50), rel=1e-10)
        loss_neg = logistic_loss(x, a, -1, q=1) - 0.5
        assert loss_neg == pytest.approx(50.0, rel=1e-12)
        assert np.isfinite(logistic_grad(x, a, -1, q=1)).all()

    def test_rejects_bad_label(self):
        with pytest.raises(ValueError, match="label"):
            logistic_loss(np.zeros(2), np.ones(2), 0, q=1)
        with pytest.raises(ValueError, match="label"):
            logistic_grad(np.zeros(2), np.ones(2), 2, q=1)


class TestLogisticProblem:
    @pytest.fixture()
    def problem(self):
        data = synthetic_logistic_data(n=4, q=6, d=5, margin=2.0, seed=9)
        return LogisticProblem(data)

    def test_stochastic_gradient_is_exactly_unbiased(self, problem):
        rng = np.random.default_rng(0)
        x = rng.normal(size=problem.dim)
        for i in range(problem.n):
            mean = np.mean(
                [problem.sample_grad(i, j, x) for j in range(problem.q)], axis=0
            )
            assert np.linalg.norm(mean - problem.local_grad(i, x)) <= 1e-12

    def test_global_gradient_is_average_of_locals(self, problem):
        rng = np.random.default_rng(1)
        x = rng.normal(size=problem.dim)
        mean = np.mean([problem.local_grad(i, x) for i in range(problem.n)], axis=0)
        assert np.linalg.norm(problem.grad(x) - mean) <= 1e-12

    def test_local_gradients_match_finite_differences(self, problem):
        rng = np.random.default_rng(2)
        for i in range(problem.n):
            x = rng.normal(size=problem.dim)
            g = problem.local_grad(i, x)
            g_fd = finite_difference_grad(lambda z: problem.local_loss(i, z), x)
            assert np.linalg.norm(g - g_fd) <= 1e-5 * max(1.0, np.linalg.norm(g))

    def test_smoothness_dominates_hessian(self, problem):
        L = problem.smoothness()
        rng = np.random.default_rng(3)
        x = rng.normal(size=problem.dim)
        h = 1e-5
        for i in range(problem.n):
            v = rng.normal(size=problem.dim)
            v /= np.linalg.norm(v)
            curv = (
                problem.local_grad(i, x + h * v) - problem.local_grad(i, x - h * v)
            ) @ v / (2 * h)
            assert curv <= L + 1e-6

    def test_gradient_variance_nonnegative(self, problem):
        v = problem.gradient_variance(np.zeros(problem.dim))
        assert v.shape == (problem.n,)
        assert np.all(v >= 0)


class TestQuadraticProblem:
    def test_identity_hessians_mean_center(self):
        centers = np.array([[1.0, 2.0], [3.0, -4.0], [5.0, 0.0]])
        prob = QuadraticProblem(np.stack([np.eye(2)] * 3), centers)
        assert np.allclose(prob.x_star, centers.mean(axis=0), atol=1e-14)

    def test_single_agent_optimum(self):
        prob = quadratic_problem(1, 4, 3.0, seed=5)
        assert np.allclose(prob.x_star, prob.centers[0], atol=1e-12)
        assert prob.f_star == pytest.approx(0.0, abs=1e-24)

    def test_closed_form_matches_gradient_descent_oracle(self):
        prob = quadratic_problem(5, 4, 4.0, seed=17)
        x = np.zeros(4)
        step = 1.0 / prob.L
        for _ in range(20_000):
            x = x - step * prob.grad(x)
        assert np.linalg.norm(x - prob.x_star) <= 1e-8

    def test_rejects_degenerate_spectra(self):
        with pytest.raises(ValueError):
            quadratic_problem(2, 3, 0.5, seed=0)
        with pytest.raises(ValueError):
            quadratic_problem(2, 3, math.inf, seed=0)

    def test_shared_hessian_mode(self):
        prob = quadratic_problem(4, 3, 2.0, seed=1, shared_hessian=True)
        for i in range(1, 4):
            assert np.array_equal(prob.hessians[0], prob.hessians[i])

    def test_smoothness_is_max_eigenvalue(self):
        prob = quadratic_problem(3, 5, 7.0, seed=2)
        assert prob.smoothness() == pytest.approx(7.0, rel=1e-10)

    def test_variance_is_zero(self):
        prob = quadratic_problem(3, 5, 2.0, seed=2)
        assert np.all(prob.gradient_variance(np.ones(5)) == 0)


class TestSyntheticData:
    def test_deterministic(self):
        a = synthetic_logistic_data(n=20, q=50, d=30, margin=2.0, seed=77)
        b = synthetic_logistic_data(n=20, q=50, d=30, margin=2.0, seed=77)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_huge_margin_gives_separable_labels(self):
        ds = synthetic_logistic_data(n=2, q=200, d=6, margin=1e9, seed=3)
        # replicate the documented generator draws to recover the planted vector
        rng = np.random.default_rng(3)
        w = rng.normal(size=6)
        w /= np.linalg.norm(w)
        signs = np.sign(ds.features @ w)
        signs[signs == 0] = 1
        assert np.array_equal(ds.labels, signs.astype(int))

    def test_label_noise_rate_matches_quadrature_oracle(self):
        # find the margin whose expected flip rate is 0.1, via independent
        # quadrature over the half-normal density, then check empirically
        target = 0.1

        def flip_rate(m):
            val, _ = quad(lambda u: expit(-m * u) * 2 * norm.pdf(u), 0, 40)
            return val

        margin = brentq(lambda m: flip_rate(m) - target, 1e-3, 100.0)
        ds = synthetic_logistic_data(n=1, q=10_000, d=8, margin=margin, seed=11)
        rng = np.random.default_rng(11)
        w = rng.normal(size=8)
        w /= np.linalg.norm(w)
        signs = np.sign(ds.features @ w)
        signs[signs == 0] = 1
        empirical = np.mean(ds.labels != signs.astype(int))
        assert abs(empirical - target) <= 0.02

    def test_partition_is_even_disjoint_cover(self):
        ds = synthetic_logistic_data(n=5, q=7, d=3, margin=1.0, seed=0)
        seen = []
        for i in range(5):
            lo, hi = ds.agent_index_range(i)
            assert hi - lo == 7
            seen.extend(range(lo, hi))
        assert sorted(seen) == list(range(35))

    def test_manifest(self):
        ds = synthetic_logistic_data(n=5, q=7, d=3, margin=1.0, seed=4)
        m = ds.manifest()
        assert m == {"n": 5, "q": 7, "d": 3, "seed": 4, "source": "synthetic"}


class TestSvmlight:
    def test_parse_basic_line(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text("+1 1:0.5 3:-2\n-1 2:1.5\n")
        ds = load_svmlight(path)
        assert ds.dim == 3
        assert np.allclose(ds.features[0], [0.5, 0.0, -2.0])
        assert np.allclose(ds.features[1], [0.0, 1.5, 0.0])
        assert ds.labels.tolist() == [1, -1]

    def test_empty_file_is_an_error(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ValueError, match="no samples"):
            load_svmlight(path)

    def test_malformed_lines_report_line_numbers(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("+1 1:0.5\n-1 nonsense\n")
        with pytest.raises(ValueError, match=":2"):
            load_svmlight(path)
        path.write_text("+3 1:0.5\n")
        with pytest.raises(ValueError, match=":1"):
            load_svmlight(path)
        path.write_text("+1 0:0.5\n")
        with pytest.raises(ValueError, match="1-based"):
            load_svmlight(path)
        path.write_text("+1 2:0.5 2:0.7\n")
        with pytest.raises(ValueError, match="duplicate"):
            load_svmlight(path)

    def test_round_trip(self, tmp_path):
        ds = synthetic_logistic_data(n=4, q=5, d=6, margin=1.0, seed=13)
        path = tmp_path / "round.txt"
        save_svmlight(ds, path)
        back = load_svmlight(path, n_agents=4)
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        assert back.q == ds.q

    def test_uneven_partition_rejected(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text("+1 1:1\n-1 1:2\n+1 1:3\n")
        with pytest.raises(ValueError, match="evenly"):
            load_svmlight(path, n_agents=2)


class TestReferenceSolver:
    def test_quadratic_matches_closed_form(self):
        prob = quadratic_problem(5, 6, 3.0, seed=21)
        x, f = solve_reference(prob, tolerance=1e-10)
        assert np.linalg.norm(x - prob.x_star) <= 1e-8
        assert f == pytest.approx(prob.f_star, abs=1e-12)

    def test_logistic_first_order_condition(self):
        data = synthetic_logistic_data(n=4, q=25, d=8, margin=1.5, seed=2)
        prob = LogisticProblem(data)
        x, _ = solve_reference(prob, tolerance=1e-9)
        assert np.linalg.norm(prob.grad(x)) <= 1e-9

    def test_tolerance_refinement(self):
        data = synthetic_logistic_data(n=4, q=25, d=8, margin=1.5, seed=2)
        prob = LogisticProblem(data)
        _, f_coarse = solve_reference(prob, tolerance=1e-3)
        _, f_fine = solve_reference(prob, tolerance=1e-9)
        assert abs(f_coarse - f_fine) < 1e-5

    def test_iteration_cap(self):
        prob = quadratic_problem(3, 4, 2.0, seed=1)
        with pytest.raises(RuntimeError, match="did not reach"):
            solve_reference(prob, tolerance=1e-12, max_iter=3)


class TestDatasetValidation:
    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError, match="labels"):
            Dataset(features=np.ones((4, 2)), labels=np.array([1, 0, 1, -1]), n_agents=2)

    def test_rejects_uneven_split(self):
        with pytest.raises(ValueError, match="evenly"):
            Dataset(features=np.ones((5, 2)), labels=np.ones(5, dtype=int), n_agents=2)
