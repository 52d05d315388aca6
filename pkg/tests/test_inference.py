import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_family
from gibbsest.errors import DimensionError, InfeasibleError, ModelError
from gibbsest.inference import (
    MleConfig,
    default_eta,
    feasible,
    likelihood_gradient,
    log_likelihood,
    mle,
    moment_covariance,
    mpe,
    null_directions,
    pressure_root,
)
from gibbsest.sampling import sample_path
from gibbsest.shift_core import (
    LocallyConstantFn,
    PotentialFamily,
    SubshiftSpec,
    bernoulli_family,
    markov_family,
    markov_to_theta,
)
from gibbsest.thermo import asymptotic_covariance, cylinder_log_prob, solve_gibbs


def _golden_family(golden):
    # two classes modulo coboundaries: frequency of 1 and of the run 2 2 2
    return PotentialFamily(LocallyConstantFn.constant(golden, 0.0),
                           [LocallyConstantFn.indicator(golden, [1]), LocallyConstantFn.indicator(golden, [2, 2, 2])])


def _bernoulli_word(n, k):
    return [1] * k + [2] * (n - k)


class TestConfig:
    def test_default_eta(self):
        assert default_eta(16) == 0.5
        assert default_eta(10**9) == 0.05

    def test_invalid(self):
        with pytest.raises(ValueError):
            MleConfig(eta=0.0)
        with pytest.raises(ValueError):
            MleConfig(opt_tol=-1.0)

    def test_box_override(self):
        lo, hi = MleConfig(box=[[-1, 2]]).bounds(100, 1)
        np.testing.assert_array_equal(lo, [-1.0])
        np.testing.assert_array_equal(hi, [2.0])
        with pytest.raises(DimensionError):
            MleConfig(box=[[-1, 2]]).bounds(100, 2)


class TestLikelihood:
    def test_matches_cylinder_probability(self, golden, rng):
        fam = random_family(golden, 2, 2, rng)
        w = sample_path(solve_gibbs(golden, fam, [0.1, 0.2]), 300, 1).symbols
        t = [0.4, -0.3]
        assert np.isclose(log_likelihood(golden, fam, w, t), cylinder_log_prob(solve_gibbs(golden, fam, t), w))

    def test_gradient_by_differences(self, golden, rng):
        fam = random_family(golden, 3, 2, rng)
        w = sample_path(solve_gibbs(golden, fam, [0.1, 0.2]), 400, 2).symbols
        t = np.array([0.3, -0.1])
        h = 1e-5
        fd = [(log_likelihood(golden, fam, w, t + h * e) - log_likelihood(golden, fam, w, t - h * e)) / (2 * h)
              for e in np.eye(2)]
        np.testing.assert_allclose(likelihood_gradient(golden, fam, w, t), fd, rtol=1e-6, atol=1e-5)

    def test_bernoulli_closed_form_likelihood(self):
        spec, fam = bernoulli_family(2)
        w = _bernoulli_word(10, 7)
        assert np.isclose(log_likelihood(spec, fam, w, [0.5]), 7 * 0.5 - 10 * math.log(1 + math.exp(0.5)))


class TestMle:
    def test_bernoulli_example(self):
        spec, fam = bernoulli_family(2)
        res = mle(spec, fam, _bernoulli_word(10, 7))
        assert abs(res.theta_hat[0] - math.log(7 / 3)) <= 1e-8
        assert res.converged and not res.constraint_active

    def test_symmetric_count(self):
        spec, fam = bernoulli_family(2)
        assert abs(mle(spec, fam, [1, 2] * 20).theta_hat[0]) <= 1e-8

    @given(st.integers(2, 64).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))))
    def test_bernoulli_closed_form(self, nk):
        n, k = nk
        spec, fam = bernoulli_family(2)
        res = mle(spec, fam, _bernoulli_word(n, k))
        if not res.constraint_active:
            assert abs(res.theta_hat[0] - math.log(k / (n - k))) <= 1e-8

    @pytest.mark.parametrize("k", [0, 64])
    def test_degenerate_counts_clip_to_box(self, k):
        spec, fam = bernoulli_family(2)
        res = mle(spec, fam, _bernoulli_word(64, k))
        bound = 1 / default_eta(64)
        assert res.constraint_active and res.box_active
        assert np.isclose(abs(res.theta_hat[0]), bound)
        assert np.sign(res.theta_hat[0]) == (1 if k else -1)

    def test_optimality_certificate(self, golden, rng):
        fam = _golden_family(golden)
        w = sample_path(solve_gibbs(golden, fam, [0.2, -0.3]), 2000, 5).symbols
        cfg = MleConfig()
        res = mle(golden, fam, w, cfg)
        assert not res.constraint_active
        g = likelihood_gradient(golden, fam, w, res.theta_hat)
        assert np.max(np.abs(g)) <= cfg.opt_tol
        for e in np.eye(2):
            for s in (-1, 1):
                moved = res.theta_hat + s * 10 * cfg.opt_tol * e
                assert log_likelihood(golden, fam, w, moved) <= res.loglik + 1e-9

    def test_degenerate_family_gradient_vanishes_off_null_space(self, golden, rng):
        # only one class modulo coboundaries among depth-2 functions on this shift
        fam = random_family(golden, 2, 2, rng)
        w = sample_path(solve_gibbs(golden, fam, [0.2, -0.3]), 2000, 5).symbols
        res = mle(golden, fam, w)
        null = null_directions(fam)
        assert res.null_dim == 1
        g = likelihood_gradient(golden, fam, w, res.theta_hat)
        rest = g - null @ (null.T @ g)
        assert np.max(np.abs(rest)) <= 1e-6
        assert abs(float(null[:, 0] @ res.theta_hat)) <= 1e-8

    def test_feasible_post_hoc(self, golden, rng):
        fam = random_family(golden, 2, 1, rng)
        w = sample_path(solve_gibbs(golden, fam, [0.5]), 1000, 6).symbols
        res = mle(golden, fam, w)
        assert feasible(golden, fam, w, res.theta_hat)

    def test_restricted_fit_is_dominated(self):
        spec, fam = bernoulli_family(3)
        w = sample_path(solve_gibbs(spec, fam, [0.3, 0.0]), 3000, 7).symbols
        full = mle(spec, fam, w)
        part = mle(spec, fam, w, fixed={1: 0.0})
        assert part.theta_hat[1] == 0.0
        assert part.loglik <= full.loglik + 1e-9

    def test_infeasible_carries_closest_point(self):
        spec, fam = bernoulli_family(2)
        # a tiny box far from the empirical frequency leaves no feasible point
        cfg = MleConfig(box=[[3.0, 4.0]], eta=0.1)
        with pytest.raises(InfeasibleError) as info:
            mle(spec, fam, [1, 2] * 50, cfg)
        assert info.value.closest is not None and info.value.violation > 0.01

    def test_markov_minimal_norm_representative(self):
        p = np.array([[0.3, 0.7], [0.6, 0.4]])
        spec = SubshiftSpec.full_shift(2)
        fam = markov_family(spec)
        w = sample_path(solve_gibbs(spec, fam, markov_to_theta(p)), 4096, 3).symbols
        res = mle(spec, fam, w)
        null = null_directions(fam)
        assert null.shape[1] == 1 and res.null_dim == 1
        assert abs(float(null[:, 0] @ res.theta_hat)) <= 1e-8
        # the fitted measure is the one the data came from, up to sampling error
        fitted = solve_gibbs(spec, fam, res.theta_hat)
        np.testing.assert_allclose(fitted.mu, solve_gibbs(spec, fam, markov_to_theta(p)).mu, atol=0.05)

    def test_short_word(self):
        spec = SubshiftSpec.full_shift(2)
        with pytest.raises(DimensionError):
            mle(spec, markov_family(spec), [1])


class TestMpe:
    @pytest.mark.parametrize("k", [3, 17, 30])
    def test_bernoulli_logit(self, k):
        spec, fam = bernoulli_family(2)
        res = mpe(spec, fam, _bernoulli_word(40, k))
        assert abs(res.theta_tilde[0] - math.log(k / (40 - k))) <= 1e-9
        assert res.converged

    def test_gradient_norm(self, golden, rng):
        fam = random_family(golden, 2, 2, rng)
        w = sample_path(solve_gibbs(golden, fam, [0.3, 0.1]), 2000, 8).symbols
        cfg = MleConfig()
        assert mpe(golden, fam, w, cfg).gradient_norm <= cfg.opt_tol

    def test_concave_objective(self, golden, rng):
        fam = random_family(golden, 2, 2, rng)
        for t in rng.normal(size=(5, 2)):
            assert np.linalg.eigvalsh(-asymptotic_covariance(golden, fam, t)).max() <= 1e-12

    def test_matches_mle_on_markov(self):
        p = np.array([[0.3, 0.7], [0.6, 0.4]])
        spec = SubshiftSpec.full_shift(2)
        fam = markov_family(spec)
        w = sample_path(solve_gibbs(spec, fam, markov_to_theta(p)), 4096, 9).symbols
        diff = mle(spec, fam, w).theta_hat - mpe(spec, fam, w).theta_tilde
        assert np.max(np.abs(diff)) <= 5 / math.sqrt(4096)


class TestMomentCovariance:
    def test_bernoulli_variance(self):
        spec, fam = bernoulli_family(2)
        w = sample_path(solve_gibbs(spec, fam, [0.0]), 100_000, 10).symbols
        assert abs(moment_covariance(fam, w)[0, 0] - 0.25) <= 0.02

    def test_constant_direction_is_zero(self, golden):
        fam = PotentialFamily(LocallyConstantFn.constant(golden, 0.0), [LocallyConstantFn.constant(golden, 2.0)])
        np.testing.assert_array_equal(moment_covariance(fam, [1, 2, 2, 1, 2]), [[0.0]])

    def test_agrees_with_model_covariance(self, golden):
        fam = _golden_family(golden)
        sys = solve_gibbs(golden, fam, [0.2, -0.4])
        w = sample_path(sys, 100_000, 11).symbols
        res = mle(golden, fam, w)
        est = moment_covariance(fam, w)
        model = asymptotic_covariance(golden, fam, res.theta_hat)
        np.testing.assert_allclose(est, model, rtol=0.1, atol=0.1 * np.abs(model).max())

    def test_positive_semidefinite(self, golden, rng):
        fam = random_family(golden, 3, 3, rng)
        w = sample_path(solve_gibbs(golden, fam, [0.1, 0.2, 0.3]), 500, 12).symbols
        assert np.linalg.eigvalsh(moment_covariance(fam, w)).min() >= -1e-12


class TestPressureRoot:
    @pytest.mark.parametrize("a", [2, 3])
    def test_full_shift(self, a):
        spec = SubshiftSpec.full_shift(a)
        fam = PotentialFamily(LocallyConstantFn.constant(spec, 0.0),
                              [LocallyConstantFn.constant(spec, -math.log(a))])
        assert abs(pressure_root(spec, fam, [0.0, 3.0]) - 1.0) <= 1e-12

    def test_golden_mean(self, golden):
        fam = PotentialFamily(LocallyConstantFn.constant(golden, 0.0), [LocallyConstantFn.constant(golden, -1.0)])
        assert abs(pressure_root(golden, fam, [0.0, 2.0]) - math.log((1 + math.sqrt(5)) / 2)) <= 1e-12

    def test_no_sign_change(self, golden):
        fam = PotentialFamily(LocallyConstantFn.constant(golden, 0.0), [LocallyConstantFn.constant(golden, -1.0)])
        with pytest.raises(ModelError):
            pressure_root(golden, fam, [1.0, 2.0])

    def test_non_monotone(self):
        spec = SubshiftSpec.full_shift(2)
        # P(t) = log(e^t + e^-t) - 1 vanishes twice, on either side of its minimum at 0
        fam = PotentialFamily(LocallyConstantFn.constant(spec, -1.0),
                              [LocallyConstantFn.from_values(spec, 1, [1.0, -1.0])])
        with pytest.raises(ModelError, match="monotone"):
            pressure_root(spec, fam, [-3.0, 0.5])
        root = pressure_root(spec, fam, [0.1, 3.0])
        assert abs(solve_gibbs(spec, fam, [root]).pressure) <= 1e-12

    def test_needs_one_parameter(self):
        spec, fam = bernoulli_family(3)
        with pytest.raises(DimensionError):
            pressure_root(spec, fam, [0.0, 1.0])
