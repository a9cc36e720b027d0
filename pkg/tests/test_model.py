"""Tests for the hierarchical model: priors, elementary densities, joint."""

import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import expon, gamma, halfnorm, invgamma, multivariate_normal, norm

from skewtgibbs.forward import LinearForwardModel
from skewtgibbs.model import (
    HierarchicalState,
    ObservedData,
    PriorSpec,
    default_priors,
    df_log_prior,
    gamma_logpdf,
    halfnormal_logpdf,
    invgamma_logpdf,
    joint_log_density,
    mvnormal_logpdf_precision,
    normal_logpdf,
    residuals,
    smoothness_precision,
)

from support import random_problem, random_state


class TestPriorSpec:
    def test_defaults(self):
        spec = default_priors(5)
        assert spec.u_mean.shape == (5,)
        np.testing.assert_array_equal(spec.u_precision, 1e-2 * np.eye(5))
        assert spec.loading_sd == 10.0
        assert spec.df_min == 2.0

    def test_rejects_asymmetric_precision(self):
        bad = np.eye(3)
        bad[0, 1] = 0.5
        with pytest.raises(ValueError, match="symmetric"):
            PriorSpec(u_mean=np.zeros(3), u_precision=bad)

    def test_rejects_indefinite_precision(self):
        bad = np.diag([1.0, -1.0, 1.0])
        with pytest.raises(ValueError, match="positive definite"):
            PriorSpec(u_mean=np.zeros(3), u_precision=bad)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="d x d"):
            PriorSpec(u_mean=np.zeros(3), u_precision=np.eye(4))

    def test_rejects_nonpositive_hyperparameters(self):
        for kwargs in (
            {"loading_sd": 0.0},
            {"tau_shape": -1.0},
            {"tau_rate": 0.0},
            {"df_rate": math.inf},
        ):
            with pytest.raises(ValueError):
                default_priors(3, **kwargs)


class TestSmoothnessPrecision:
    def test_symmetric_positive_definite(self):
        p = smoothness_precision(8, kappa=4.0, gamma=0.1)
        np.testing.assert_allclose(p, p.T, atol=0)
        assert np.all(np.linalg.eigvalsh(p) > 0.0)

    def test_zero_kappa_is_ridge(self):
        np.testing.assert_array_equal(
            smoothness_precision(5, kappa=0.0, gamma=0.3), 0.3 * np.eye(5)
        )

    def test_linear_vectors_feel_only_the_ridge(self):
        # second differences annihilate affine sequences, so they are
        # eigenvectors of the full precision with eigenvalue gamma
        d, gamma_val = 9, 0.05
        p = smoothness_precision(d, kappa=7.0, gamma=gamma_val)
        line = 1.5 + 0.25 * np.arange(d)
        np.testing.assert_allclose(p @ line, gamma_val * line, atol=1e-12)

    def test_bandwidth_two(self):
        p = smoothness_precision(10, kappa=1.0, gamma=0.1)
        for i in range(10):
            for j in range(10):
                if abs(i - j) > 2:
                    assert p[i, j] == 0.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            smoothness_precision(2, kappa=1.0, gamma=0.1)
        with pytest.raises(ValueError):
            smoothness_precision(5, kappa=-1.0, gamma=0.1)
        with pytest.raises(ValueError):
            smoothness_precision(5, kappa=1.0, gamma=0.0)


class TestElementaryDensities:
    xs = np.array([0.05, 0.3, 1.0, 2.7, 9.0])

    def test_normal_matches_scipy(self):
        for mean, var in ((0.0, 1.0), (-2.0, 0.3), (4.0, 25.0)):
            ref = norm.logpdf(self.xs, loc=mean, scale=math.sqrt(var))
            np.testing.assert_allclose(
                normal_logpdf(self.xs, mean, var), ref, rtol=1e-12
            )

    def test_halfnormal_matches_scipy(self):
        for scale in (0.2, 1.0, 7.0):
            ref = halfnorm.logpdf(self.xs, scale=scale)
            np.testing.assert_allclose(
                halfnormal_logpdf(self.xs, scale), ref, rtol=1e-12
            )

    def test_halfnormal_negative_is_minus_inf(self):
        assert halfnormal_logpdf(-0.5, 1.0) == -math.inf

    def test_gamma_matches_scipy(self):
        for shape, rate in ((0.5, 0.5), (2.0, 3.0), (15.0, 0.1)):
            ref = gamma.logpdf(self.xs, shape, scale=1.0 / rate)
            np.testing.assert_allclose(
                gamma_logpdf(self.xs, shape, rate), ref, rtol=1e-11
            )

    def test_invgamma_matches_scipy(self):
        for shape, rate in ((0.01, 0.01), (2.0, 3.0), (5.0, 1.0)):
            ref = invgamma.logpdf(self.xs, shape, scale=rate)
            np.testing.assert_allclose(
                invgamma_logpdf(self.xs, shape, rate), ref, rtol=1e-11
            )

    def test_mvnormal_matches_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            d = int(rng.integers(1, 6))
            a = rng.standard_normal((d, d))
            precision = a @ a.T + d * np.eye(d)
            mean = rng.standard_normal(d)
            x = rng.standard_normal(d)
            ref = multivariate_normal.logpdf(x, mean, np.linalg.inv(precision))
            assert mvnormal_logpdf_precision(x, mean, precision) == pytest.approx(
                ref, rel=1e-10
            )

    def test_mvnormal_rejects_indefinite(self):
        with pytest.raises(ValueError):
            mvnormal_logpdf_precision(
                np.zeros(2), np.zeros(2), np.diag([1.0, -1.0])
            )


class TestDfPrior:
    def test_normalizes(self):
        spec = default_priors(3, df_rate=0.5)
        total, _ = quad(
            lambda v: math.exp(df_log_prior(v, spec)), spec.df_min, np.inf
        )
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_known_value(self):
        spec = default_priors(3, df_rate=0.5)
        assert df_log_prior(3.0, spec) == pytest.approx(
            math.log(0.5) - 0.5, rel=1e-15
        )

    def test_support_boundary(self):
        spec = default_priors(3)
        assert df_log_prior(2.0, spec) == -math.inf
        assert df_log_prior(1.0, spec) == -math.inf
        assert df_log_prior(math.inf, spec) == -math.inf
        assert math.isfinite(df_log_prior(2.0 + 1e-12, spec))

    @given(lo=st.floats(2.001, 100.0), step=st.floats(0.001, 50.0))
    @settings(max_examples=100, deadline=None)
    def test_monotone_decreasing(self, lo, step):
        spec = default_priors(3)
        assert df_log_prior(lo + step, spec) < df_log_prior(lo, spec)


def scipy_joint(state, data, spec):
    """Independent term-by-term evaluation of the joint log-density."""
    eps = data.y - data.operator.matrix @ state.u
    half_df = 0.5 * state.df
    total = norm.logpdf(eps, loc=state.loading * state.z,
                        scale=np.sqrt(state.tau / state.w)).sum()
    total += halfnorm.logpdf(state.z, scale=1.0 / np.sqrt(state.w)).sum()
    total += gamma.logpdf(state.w, half_df, scale=1.0 / half_df).sum()
    total += multivariate_normal.logpdf(
        state.u, spec.u_mean, np.linalg.inv(spec.u_precision)
    )
    total += norm.logpdf(state.loading, scale=spec.loading_sd)
    total += invgamma.logpdf(state.tau, spec.tau_shape, scale=spec.tau_rate)
    total += expon.logpdf(state.df, loc=spec.df_min, scale=1.0 / spec.df_rate)
    return float(total)


class TestJointLogDensity:
    def test_matches_scipy_term_by_term(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            d = int(rng.integers(1, 6))
            data, spec = random_problem(rng, n=n, d=d)
            state = random_state(rng, n, d)
            ours = joint_log_density(state, data, spec)
            assert ours == pytest.approx(scipy_joint(state, data, spec), rel=1e-10)

    def test_observation_additivity(self):
        # dropping the last observation removes exactly its three local terms
        rng = np.random.default_rng(7)
        data, spec = random_problem(rng, n=6, d=3)
        state = random_state(rng, 6, 3)

        smaller = ObservedData(
            y=data.y[:-1], operator=LinearForwardModel(matrix=data.operator.matrix[:-1])
        )
        state_small = replace(state, z=state.z[:-1], w=state.w[:-1])

        eps_last = data.y[-1] - data.operator.matrix[-1] @ state.u
        half_df = 0.5 * state.df
        local = (
            norm.logpdf(eps_last, loc=state.loading * state.z[-1],
                        scale=math.sqrt(state.tau / state.w[-1]))
            + halfnorm.logpdf(state.z[-1], scale=1.0 / math.sqrt(state.w[-1]))
            + gamma.logpdf(state.w[-1], half_df, scale=1.0 / half_df)
        )
        diff = joint_log_density(state, data, spec) - joint_log_density(
            state_small, smaller, spec
        )
        assert diff == pytest.approx(float(local), rel=1e-10)

    def test_residuals_exact(self):
        rng = np.random.default_rng(1)
        data, _ = random_problem(rng, n=5, d=3)
        state = random_state(rng, 5, 3)
        np.testing.assert_array_equal(
            residuals(state, data), data.y - data.operator.matrix @ state.u
        )

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda s: replace(s, tau=0.0),
            lambda s: replace(s, tau=-1.0),
            lambda s: replace(s, df=2.0),
            lambda s: replace(s, df=1.5),
            lambda s: replace(s, loading=math.nan),
            lambda s: replace(s, z=np.array([-0.1, 0.5, 0.5, 0.5, 0.5])),
            lambda s: replace(s, w=np.array([0.0, 1.0, 1.0, 1.0, 1.0])),
            lambda s: replace(s, u=np.array([math.inf, 0.0, 0.0])),
        ],
    )
    def test_invariant_violations_give_minus_inf(self, mutate):
        rng = np.random.default_rng(3)
        data, spec = random_problem(rng, n=5, d=3)
        state = mutate(random_state(rng, 5, 3))
        assert joint_log_density(state, data, spec) == -math.inf

    def test_dimension_mismatch_raises(self):
        rng = np.random.default_rng(4)
        data, spec = random_problem(rng, n=5, d=3)
        state = random_state(rng, 5, 3)
        with pytest.raises(ValueError):
            joint_log_density(replace(state, z=state.z[:-1]), data, spec)
        with pytest.raises(ValueError):
            joint_log_density(
                replace(state, u=np.zeros(4)), data, spec
            )

    def test_data_length_checked_against_operator(self):
        with pytest.raises(ValueError, match="does not match"):
            ObservedData(y=np.zeros(3), operator=LinearForwardModel(matrix=np.eye(2)))
