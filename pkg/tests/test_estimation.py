import numpy as np
import pytest
from scipy.stats import multivariate_normal

from actinf_lqg import estimation
from actinf_lqg.gaussian import DimensionError, Gaussian, is_psd
from actinf_lqg.model import LinearGaussianModel, benchmark_system, vague_prior

from conftest import kalman_textbook, random_spd, random_system


class TestInit:
    def test_vague_prior(self):
        fs = estimation.init(vague_prior(2))
        np.testing.assert_array_equal(fs.estimate.prec, 1e-8 * np.eye(2))
        assert fs.log_evidence == 0.0 and fs.t == 0

    def test_proper_prior_kept(self):
        prior = Gaussian([1.0, 2.0], cov=[[2.0, 0.1], [0.1, 1.0]])
        fs = estimation.init(prior)
        np.testing.assert_array_equal(fs.estimate.mean, prior.mean)
        np.testing.assert_array_equal(fs.estimate.cov, prior.cov)

    def test_deterministic(self):
        a, b = estimation.init(vague_prior(2)), estimation.init(vague_prior(2))
        np.testing.assert_array_equal(a.estimate.prec, b.estimate.prec)
        np.testing.assert_array_equal(a.estimate.mean, b.estimate.mean)

    def test_dimension(self):
        with pytest.raises(DimensionError):
            estimation.init(vague_prior(3), n_x=2)


class TestStep:
    def test_observation_dominates_vague_prior(self):
        model = benchmark_system()
        fs = estimation.step(estimation.init(model.prior), np.zeros(2), [3.0, 4.0], model)
        np.testing.assert_allclose(fs.estimate.mean, [3.0, 4.0], atol=1e-6)
        np.testing.assert_allclose(fs.estimate.prec, np.eye(2), atol=1e-6)
        assert fs.estimate.log_weight == 0.0 and fs.t == 1

    def test_uninformative_observation(self):
        base = benchmark_system()
        model = LinearGaussianModel(base.A, base.B, base.C, base.W_w, 1e-14 * np.eye(2))
        prior = Gaussian([25.0, 25.0], cov=[[2.0, 0.3], [0.3, 1.0]])
        u = np.array([1.0, -1.0])
        fs = estimation.step(estimation.init(prior), u, [100.0, -100.0], model)
        np.testing.assert_allclose(fs.estimate.mean, base.A @ prior.mean + base.B @ u, rtol=1e-9)
        np.testing.assert_allclose(fs.estimate.cov, base.A @ prior.cov @ base.A.T + base.V_w, rtol=1e-9)

    def test_benchmark_against_textbook(self):
        model = benchmark_system()
        rng = np.random.default_rng(3)
        x_true = np.array([25.0, 25.0])
        y = model.C @ x_true + rng.standard_normal(2)
        prior = Gaussian([25.0, 25.0], prec=np.eye(2))
        fs = estimation.step(estimation.init(prior), np.zeros(2), y, model)
        m, V, ll = kalman_textbook(prior.mean, prior.cov, np.zeros(2), y, model)
        np.testing.assert_allclose(fs.estimate.mean, m, rtol=1e-10)
        np.testing.assert_allclose(fs.estimate.cov, V, rtol=1e-10)
        assert fs.log_evidence == pytest.approx(ll, rel=1e-10)

    def test_random_against_textbook(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            model = random_system(rng)
            d = model.dims
            prior = Gaussian(rng.standard_normal(d.n_x), cov=random_spd(rng, d.n_x))
            u, y = rng.standard_normal(d.n_u), rng.standard_normal(d.n_y)
            fs = estimation.step(estimation.init(prior), u, y, model)
            m, V, ll = kalman_textbook(prior.mean, prior.cov, u, y, model)
            assert np.abs(fs.estimate.mean - m).max() / max(np.abs(m).max(), 1.0) < 1e-9
            assert np.abs(fs.estimate.cov - V).max() / np.abs(V).max() < 1e-9
            assert abs(fs.log_evidence - ll) / max(abs(ll), 1.0) < 1e-9

    def test_information_never_decreases(self, rng):
        for _ in range(30):
            model = random_system(rng)
            d = model.dims
            prior = Gaussian(np.zeros(d.n_x), cov=random_spd(rng, d.n_x))
            predicted = estimation.predict(prior, np.zeros(d.n_u), model)
            fs = estimation.step(estimation.init(prior), np.zeros(d.n_u), rng.standard_normal(d.n_y), model)
            assert is_psd(fs.estimate.prec - predicted.prec)

    @pytest.mark.parametrize("n_x", [1, 2])
    def test_log_evidence_is_joint_density(self, n_x):
        # stacked observations are jointly Gaussian given the controls
        rng = np.random.default_rng(5 + n_x)
        model = random_system(rng, n_x=n_x, n_u=1, n_y=1)
        prior = Gaussian(rng.standard_normal(n_x), cov=random_spd(rng, n_x))
        k = 5
        us = rng.standard_normal((k, 1))
        ys = rng.standard_normal((k, 1))
        fs = estimation.init(prior)
        for u, y in zip(us, ys):
            fs = estimation.step(fs, u, y, model)

        # x_t = Phi_t x_0 + sum_s Phi_{t-1-s} (B u_s + w_s), t = 1..k
        A, B, C = model.A, model.B, model.C
        Vw, Vv = model.V_w, model.V_v
        mean = []
        for t in range(1, k + 1):
            mx = np.linalg.matrix_power(A, t) @ prior.mean + sum(
                np.linalg.matrix_power(A, t - 1 - s) @ B @ us[s] for s in range(t)
            )
            mean.append(C @ mx)
        cov = np.zeros((k, k))
        for i in range(1, k + 1):
            for j in range(1, k + 1):
                Ai, Aj = np.linalg.matrix_power(A, i), np.linalg.matrix_power(A, j)
                cxx = Ai @ prior.cov @ Aj.T + sum(
                    np.linalg.matrix_power(A, i - 1 - s) @ Vw @ np.linalg.matrix_power(A, j - 1 - s).T
                    for s in range(min(i, j))
                )
                cov[i - 1, j - 1] = (C @ cxx @ C.T + (Vv if i == j else 0.0)).item()
        oracle = multivariate_normal(np.concatenate(mean), cov).logpdf(ys.ravel())
        assert fs.log_evidence == pytest.approx(oracle, rel=1e-9)

    def test_non_finite_input(self):
        model = benchmark_system()
        with pytest.raises(ValueError):
            estimation.step(estimation.init(model.prior), [np.nan, 0.0], [0.0, 0.0], model)

    def test_wrong_shapes(self):
        model = benchmark_system()
        with pytest.raises(DimensionError):
            estimation.step(estimation.init(model.prior), [0.0], [0.0, 0.0], model)
