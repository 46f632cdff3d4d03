"""Projection-update correctness against independent closed forms.

Oracles used here:
* product of two Gaussians: posterior N(m, v) with 1/v = 1/v1 + 1/v2 and
  m = v*(m1/v1 + m2/v2); normalizer Z = N(m1; m2, v1 + v2),
* Gaussian moment ratios for polynomial likelihood hooks,
* brute-force joint enumeration for factorized discrete tables.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paramsmc.approx import (
    FactorizedDiscreteApprox,
    GaussianApprox,
    MixtureApprox,
    MomentScheme,
    approx_sample,
    discrete_update,
    gauss_hermite,
    gaussian_update,
    mixture_update,
    monte_carlo,
    unscented,
)
from paramsmc.errors import DegenerateUpdateError
from paramsmc.model import gaussian_logpdf
from paramsmc.rng import substream


def conjugate_product(m1, v1, m2, v2):
    """Moments and normalizer of N(theta; m1, v1) * N(theta; m2, v2)."""
    precision = 1.0 / v1 + 1.0 / v2
    v = 1.0 / precision
    m = v * (m1 / v1 + m2 / v2)
    z = np.exp(gaussian_logpdf(m1, m2, np.sqrt(v1 + v2)))
    return m, v, z


def gaussian_loglik(mean, sd):
    def log_t(thetas):
        return gaussian_logpdf(thetas[:, 0], mean, sd)

    return log_t


class TestGaussianUpdate:
    def test_constant_likelihood_is_identity(self):
        q = GaussianApprox(np.array([0.3]), np.array([[1.7]]))
        for scheme in (gauss_hermite(7), unscented()):
            out = gaussian_update(q, lambda th: np.zeros(th.shape[0]), scheme)
            assert np.allclose(out.mean, q.mean, atol=1e-10)
            assert np.allclose(out.cov, q.cov, atol=1e-10)

    def test_conjugate_oracle_gauss_hermite(self):
        # The rule is exact for polynomial integrands only; against a
        # Gaussian likelihood the M=7 error is ~1.3e-4 (mean) and ~6e-3
        # (variance), shrinking super-exponentially with M.
        q = GaussianApprox(np.zeros(1), np.eye(1))
        m, v, _ = conjugate_product(0.0, 1.0, 1.0, 1.0)
        assert (m, v) == (0.5, 0.5)
        out = gaussian_update(q, gaussian_loglik(1.0, 1.0), gauss_hermite(7))
        assert abs(out.mean[0] - m) < 1e-3
        assert abs(out.cov[0, 0] - v) < 1e-2

    @pytest.mark.parametrize("m_points,tol", [(7, 1e-3), (15, 1e-6), (21, 1e-8)])
    def test_conjugate_oracle_convergence_in_m(self, m_points, tol):
        q = GaussianApprox(np.zeros(1), np.eye(1))
        out = gaussian_update(q, gaussian_loglik(1.0, 1.0), gauss_hermite(m_points))
        assert abs(out.mean[0] - 0.5) < tol
        assert abs(out.cov[0, 0] - 0.5) < 10 * tol

    def test_conjugate_oracle_monte_carlo(self):
        q = GaussianApprox(np.zeros(1), np.eye(1))
        out = gaussian_update(
            q, gaussian_loglik(1.0, 1.0), monte_carlo(100_000), substream(7, 0)
        )
        assert abs(out.mean[0] - 0.5) < 0.01
        assert abs(out.cov[0, 0] - 0.5) < 0.02

    def test_conjugate_oracle_monte_carlo_three_se(self):
        q = GaussianApprox(np.zeros(1), np.eye(1))
        estimates = np.array(
            [
                gaussian_update(
                    q, gaussian_loglik(1.0, 1.0), monte_carlo(100_000), substream(s, 0)
                ).mean[0]
                for s in range(20)
            ]
        )
        se = estimates.std(ddof=1)
        assert abs(np.median(estimates) - 0.5) <= 3 * se

    def test_polynomial_hook(self):
        # t(theta) = theta^4 against N(0,1): matched mean 0 and
        # variance E[theta^6]/E[theta^4] = 15/3 = 5.  The relative
        # diagonal jitter (1e-9) is inside the stated tolerance.
        q = GaussianApprox(np.zeros(1), np.eye(1))

        def log_t(thetas):
            with np.errstate(divide="ignore"):
                return 4.0 * np.log(np.abs(thetas[:, 0]))

        out = gaussian_update(q, log_t, gauss_hermite(7))
        assert abs(out.mean[0]) < 1e-9
        assert abs(out.cov[0, 0] - 5.0) / 5.0 < 2e-9

    def test_unscented_identity_map(self):
        q = GaussianApprox(np.array([1.2, -0.3]), np.array([[2.0, 0.5], [0.5, 1.0]]))
        out = gaussian_update(q, lambda th: np.zeros(th.shape[0]), unscented())
        assert np.allclose(out.mean, q.mean, atol=1e-10)
        assert np.allclose(out.cov, q.cov, atol=1e-8)

    def test_degenerate_raises(self):
        q = GaussianApprox(np.zeros(1), np.eye(1))
        with pytest.raises(DegenerateUpdateError):
            gaussian_update(q, lambda th: np.full(th.shape[0], -np.inf), gauss_hermite(7))

    def test_monte_carlo_convergence_rate(self):
        # error vs the conjugate oracle should decay like M^(-1/2)
        q = GaussianApprox(np.zeros(1), np.eye(1))
        ms = [100, 1_000, 10_000, 100_000]
        slopes = []
        for seed in range(20):
            errs = []
            for i, m in enumerate(ms):
                out = gaussian_update(
                    q, gaussian_loglik(1.0, 1.0), monte_carlo(m), substream(seed, i)
                )
                errs.append(abs(out.mean[0] - 0.5) + 1e-12)
            slope = np.polyfit(np.log(ms), np.log(errs), 1)[0]
            slopes.append(slope)
        assert -0.7 <= np.median(slopes) <= -0.3

    def test_2d_conjugate(self):
        # likelihood no narrower than the prior, so the grid under the
        # prior resolves the product well
        q = GaussianApprox(np.zeros(2), np.diag([1.0, 1.0]))
        target_mean = np.array([0.5, -0.5])
        target_cov = np.diag([1.0, 2.0])

        def log_t(thetas):
            out = np.zeros(thetas.shape[0])
            for i in range(2):
                out += gaussian_logpdf(thetas[:, i], target_mean[i], np.sqrt(target_cov[i, i]))
            return out

        out = gaussian_update(q, log_t, gauss_hermite(15))
        for i in range(2):
            m, v, _ = conjugate_product(0.0, q.cov[i, i], target_mean[i], target_cov[i, i])
            assert abs(out.mean[i] - m) < 1e-5
            assert abs(out.cov[i, i] - v) < 1e-5


class TestMixtureUpdate:
    def test_single_component_matches_gaussian_update(self):
        q1 = GaussianApprox(np.array([0.2]), np.array([[1.5]]))
        qm = MixtureApprox(np.array([1.0]), np.array([[0.2]]), np.array([[[1.5]]]))
        log_t = gaussian_loglik(0.8, 0.7)
        a = gaussian_update(q1, log_t, gauss_hermite(7))
        b = mixture_update(qm, log_t, gauss_hermite(7))
        assert b.weights.shape == (1,)
        assert abs(b.weights[0] - 1.0) < 1e-12
        assert np.allclose(a.mean, b.means[0], atol=1e-10)
        assert np.allclose(a.cov, b.covs[0], atol=1e-10)

    def test_constant_likelihood(self):
        qm = MixtureApprox(
            np.array([0.3, 0.7]),
            np.array([[-1.0], [1.0]]),
            np.array([[[0.25]], [[0.25]]]),
        )
        out = mixture_update(qm, lambda th: np.zeros(th.shape[0]), gauss_hermite(7))
        assert np.allclose(out.weights, qm.weights, atol=1e-10)
        assert np.allclose(out.means, qm.means, atol=1e-10)
        assert np.allclose(out.covs, qm.covs, atol=1e-10)

    def test_two_component_reweighting_oracle(self):
        # component-local normalizers follow the product-of-Gaussians
        # formula beta_m = N(mu_m; mu_t, var_m + var_t)
        qm = MixtureApprox(
            np.array([0.5, 0.5]),
            np.array([[-1.0], [1.0]]),
            np.array([[[0.25]], [[0.25]]]),
        )
        log_t = gaussian_loglik(1.0, 0.5)
        _, _, beta1 = conjugate_product(-1.0, 0.25, 1.0, 0.25)
        _, _, beta2 = conjugate_product(1.0, 0.25, 1.0, 0.25)
        expected = np.array([0.5 * beta1, 0.5 * beta2])
        expected /= expected.sum()
        out = mixture_update(qm, log_t, gauss_hermite(7))
        assert np.allclose(out.weights, expected, atol=1e-3)
        # component moments follow the same conjugate oracle, up to the
        # M=7 quadrature error of a few 1e-3
        for i, mu in enumerate([-1.0, 1.0]):
            m, v, _ = conjugate_product(mu, 0.25, 1.0, 0.25)
            assert abs(out.means[i, 0] - m) < 5e-3
            assert abs(out.covs[i, 0, 0] - v) < 5e-3

    def test_component_floor_drop_preserves_ratios(self):
        # one component sits so far away its weight underflows the floor
        qm = MixtureApprox(
            np.array([0.4, 0.4, 0.2]),
            np.array([[0.0], [0.5], [500.0]]),
            np.array([[[0.25]], [[0.25]], [[0.25]]]),
        )
        log_t = gaussian_loglik(0.2, 0.3)
        out = mixture_update(qm, log_t, gauss_hermite(9))
        assert out.weights.shape[0] == 2
        _, _, b1 = conjugate_product(0.0, 0.25, 0.2, 0.09)
        _, _, b2 = conjugate_product(0.5, 0.25, 0.2, 0.09)
        expected_ratio = (0.4 * b1) / (0.4 * b2)
        assert np.isclose(out.weights[0] / out.weights[1], expected_ratio, rtol=1e-2)

    def test_all_components_degenerate_raises(self):
        qm = MixtureApprox(np.array([0.5, 0.5]), np.array([[0.0], [1.0]]), np.array([[[1.0]], [[1.0]]]))
        with pytest.raises(DegenerateUpdateError):
            mixture_update(qm, lambda th: np.full(th.shape[0], -np.inf), gauss_hermite(7))

    @settings(max_examples=25)
    @given(st.integers(0, 10_000))
    def test_weight_simplex_preserved(self, seed):
        rng = substream(seed, 7)
        l = int(rng.integers(2, 6))
        w = rng.random(l) + 0.05
        qm = MixtureApprox(
            w / w.sum(),
            rng.standard_normal((l, 1)),
            np.tile(np.eye(1) * 0.5, (l, 1, 1)),
        )
        target = float(rng.standard_normal())

        def log_t(thetas):
            return -0.5 * (thetas[:, 0] - target) ** 2

        out = mixture_update(qm, log_t, gauss_hermite(7))
        assert np.all(out.weights >= 0)
        assert np.isclose(out.weights.sum(), 1.0, atol=1e-12)


class TestDiscreteUpdate:
    def test_two_point_bayes(self):
        q = FactorizedDiscreteApprox([np.array([0.5, 0.5])])
        table = np.array([1.0, 3.0])

        def log_t(codes):
            return np.log(table[codes[:, 0]])

        out = discrete_update(q, log_t, m=16)
        assert np.allclose(out.table(0), [0.25, 0.75], atol=1e-12)

    def test_constant_is_identity_exhaustive(self):
        q = FactorizedDiscreteApprox([np.array([0.3, 0.7]), np.array([0.5, 0.25, 0.25])])
        out = discrete_update(q, lambda c: np.zeros(c.shape[0]), m=100)
        assert np.allclose(out.tables, q.tables, atol=1e-15)

    def test_exhaustive_matches_bruteforce_marginals(self):
        rng = substream(3, 1)
        q = FactorizedDiscreteApprox([np.array([0.2, 0.8]), np.array([0.6, 0.4])])
        t_table = rng.random((2, 2)) + 0.05

        def log_t(codes):
            return np.log(t_table[codes[:, 0], codes[:, 1]])

        out = discrete_update(q, log_t, m=4)
        # brute force: joint, reweight, marginalize
        joint = np.einsum("a,b,ab->ab", q.table(0), q.table(1), t_table)
        joint /= joint.sum()
        assert np.allclose(out.table(0), joint.sum(axis=1), atol=1e-12)
        assert np.allclose(out.table(1), joint.sum(axis=0), atol=1e-12)

    @settings(max_examples=25)
    @given(st.integers(0, 10_000))
    def test_exhaustive_matches_bruteforce_randomized(self, seed):
        rng = substream(seed, 2)
        t0 = rng.random(2) + 0.05
        t1 = rng.random(3) + 0.05
        q = FactorizedDiscreteApprox([t0 / t0.sum(), t1 / t1.sum()])
        t_table = rng.random((2, 3)) + 1e-3

        def log_t(codes):
            return np.log(t_table[codes[:, 0], codes[:, 1]])

        out = discrete_update(q, log_t, m=6)
        joint = np.einsum("a,b,ab->ab", q.table(0), q.table(1), t_table)
        joint /= joint.sum()
        assert np.allclose(out.table(0), joint.sum(axis=1), atol=1e-12)
        assert np.allclose(out.table(1), joint.sum(axis=0), atol=1e-12)

    def test_sampled_mode_approaches_exact(self):
        q = FactorizedDiscreteApprox([np.array([0.5, 0.5]), np.array([0.5, 0.5])])
        t_table = np.array([[1.0, 2.0], [3.0, 4.0]])

        def log_t(codes):
            return np.log(t_table[codes[:, 0], codes[:, 1]])

        exact = discrete_update(q, log_t, m=4)
        sampled = discrete_update(q, log_t, m=3, rng=substream(11, 0))
        big = discrete_update(q, log_t, m=200_000, rng=substream(11, 1))
        assert not np.allclose(sampled.tables, exact.tables, atol=1e-6)
        assert np.allclose(big.tables, exact.tables, atol=5e-3)

    def test_degenerate_raises(self):
        q = FactorizedDiscreteApprox([np.array([0.5, 0.5])])
        with pytest.raises(DegenerateUpdateError):
            discrete_update(q, lambda c: np.full(c.shape[0], -np.inf), m=4)

    def test_tables_stay_normalized(self):
        rng = substream(5, 5)
        q = FactorizedDiscreteApprox([np.full(4, 0.25)] * 3)

        def log_t(codes):
            return rng.standard_normal(codes.shape[0])

        out = discrete_update(q, log_t, m=64, rng=substream(5, 6))
        sums = out.tables.sum(axis=1)
        assert np.allclose(sums, 1.0, atol=1e-12)

    def test_exhaustive_larger_joint_vs_bruteforce(self):
        # mixed cardinalities, joint size 4*5*6*7 = 840
        rng = substream(6, 0)
        cards = [4, 5, 6, 7]
        tables = []
        for c in cards:
            t = rng.random(c) + 0.05
            tables.append(t / t.sum())
        q = FactorizedDiscreteApprox(tables)
        t_table = rng.random(tuple(cards)) + 1e-3

        def log_t(codes):
            return np.log(t_table[tuple(codes[:, i] for i in range(4))])

        out = discrete_update(q, log_t, m=1000)
        joint = t_table.copy()
        for i, tab in enumerate(tables):
            shape = [1] * 4
            shape[i] = cards[i]
            joint = joint * tab.reshape(shape)
        joint /= joint.sum()
        for i in range(4):
            axes = tuple(j for j in range(4) if j != i)
            assert np.allclose(out.table(i), joint.sum(axis=axes), atol=1e-12)


class TestSampling:
    def test_gaussian_sample_mean(self):
        q = GaussianApprox(np.zeros(2), np.eye(2))
        draws = approx_sample(q, substream(1, 2), size=100_000)
        assert np.all(np.abs(draws.mean(axis=0)) < 0.02)

    def test_mixture_point_mass_component(self):
        q = MixtureApprox(
            np.array([1.0, 0.0]),
            np.array([[0.0], [100.0]]),
            np.array([[[1.0]], [[1.0]]]),
        )
        draws = approx_sample(q, substream(2, 2), size=10_000)
        assert np.all(np.abs(draws[:, 0]) < 10.0)

    def test_factorized_joint_frequencies(self):
        q = FactorizedDiscreteApprox([np.array([0.3, 0.7]), np.array([0.5, 0.5])])
        n = 100_000
        draws = approx_sample(q, substream(3, 3), size=n)
        for a in (0, 1):
            for b in (0, 1):
                p = q.table(0)[a] * q.table(1)[b]
                freq = np.mean((draws[:, 0] == a) & (draws[:, 1] == b))
                sigma = np.sqrt(p * (1 - p) / n)
                assert abs(freq - p) < 3 * sigma + 1e-9

    @given(st.integers(0, 1000))
    @settings(max_examples=20)
    def test_scheme_validation(self, m):
        if m < 1:
            with pytest.raises(ValueError):
                MomentScheme(kind="monte_carlo", m=m)
        else:
            assert MomentScheme(kind="monte_carlo", m=m).m == m
