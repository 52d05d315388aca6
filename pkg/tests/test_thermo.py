import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_family
from gibbsest.errors import AdmissibilityError
from gibbsest.shift_core import (
    LocallyConstantFn,
    PotentialFamily,
    SubshiftSpec,
    bernoulli_family,
    enumerate_admissible_words,
    markov_family,
    markov_to_theta,
)
from gibbsest.thermo import (
    asymptotic_covariance,
    cohomology_independence_check,
    covariance_of,
    covariance_series,
    cylinder_log_prob,
    invariant_cylinder_prob,
    oracle_cylinder_prob,
    perron_pair,
    pressure,
    pressure_gradient,
    second_derivative_check,
    solve_gibbs,
    transfer_matrix,
)

GOLDEN = math.log((1 + math.sqrt(5)) / 2)


def _zero_family(spec, depth=1):
    return PotentialFamily(LocallyConstantFn.constant(spec, 0.0, depth),
                           [LocallyConstantFn.constant(spec, 1.0, depth)])


class TestPerron:
    def test_two_by_two(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        lam, right, left = perron_pair(m)
        assert np.isclose(lam, 3.0, rtol=0, atol=1e-13)
        np.testing.assert_allclose(right, [1.0, 1.0], atol=1e-13)

    def test_small_gap(self):
        # nearly reducible: second eigenvalue within 1e-6 of the first
        eps = 1e-6
        m = np.array([[1.0, eps], [eps, 1.0 - 1e-7]])
        lam, right, _ = perron_pair(m)
        np.testing.assert_allclose(m @ right, lam * right, rtol=0, atol=1e-12)
        assert np.isclose(lam, np.linalg.eigvalsh(m).max(), rtol=0, atol=1e-13)


class TestPressure:
    def test_golden_mean(self, golden):
        assert abs(pressure(golden, _zero_family(golden), [0.0]) - GOLDEN) <= 1e-12

    @pytest.mark.parametrize("a", [2, 3, 4, 5])
    def test_full_shift(self, a):
        spec = SubshiftSpec.full_shift(a)
        assert abs(pressure(spec, _zero_family(spec), [0.0]) - math.log(a)) <= 1e-12

    def test_constant_shift(self, golden):
        # adding a constant c to the potential adds c to the pressure
        fam = _zero_family(golden, depth=2)
        assert np.isclose(pressure(golden, fam, [-1.3]), GOLDEN - 1.3, rtol=0, atol=1e-12)

    def test_bernoulli_closed_form(self):
        spec, fam = bernoulli_family(3)
        t = np.array([0.3, -1.1])
        expected = math.log(1 + math.exp(t[0]) + math.exp(t[1]))
        assert np.isclose(pressure(spec, fam, t), expected, rtol=0, atol=1e-13)

    def test_coboundary_invariance(self, golden, rng):
        fam = random_family(golden, 2, 1, rng)
        h = LocallyConstantFn(golden, 2, rng.normal(size=(2, 2)))
        shifted = PotentialFamily(fam.base + LocallyConstantFn.coboundary(h), fam.directions)
        t = [0.4]
        assert np.isclose(pressure(golden, fam, t), pressure(golden, shifted, t), rtol=0, atol=1e-12)

    def test_transfer_matrix_entries(self, golden):
        tm = transfer_matrix(golden, _zero_family(golden), [0.0])
        assert tm.order == 1
        assert tm.index == [(1,), (2,)]
        np.testing.assert_array_equal(tm.entries, golden.incidence)


class TestGibbsMeasures:
    def test_normalization(self, golden, rng):
        fam = random_family(golden, 3, 2, rng)
        sys = solve_gibbs(golden, fam, [0.2, -0.5])
        assert np.isclose(sys.nu.sum(), 1.0)
        assert np.isclose(sys.phi @ sys.nu, 1.0)
        assert np.isclose(sys.mu.sum(), 1.0)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 5))
    def test_eigenmeasure_consistency(self, seed, n):
        # nu([w]) = sum_s nu([w s])
        rng = np.random.default_rng(seed)
        spec = SubshiftSpec.full_shift(2)
        fam = random_family(spec, 2, 1, rng)
        sys = solve_gibbs(spec, fam, [rng.normal()])
        for w in enumerate_admissible_words(spec, n):
            total = sum(math.exp(cylinder_log_prob(sys, list(w.symbols) + [s])) for s in (1, 2))
            assert np.isclose(total, math.exp(cylinder_log_prob(sys, w)), rtol=1e-10, atol=0)

    @given(st.integers(0, 2**31 - 1), st.integers(1, 4))
    def test_invariant_measure_is_shift_invariant(self, seed, n):
        # mu([w]) = sum_s mu([s w])
        rng = np.random.default_rng(seed)
        spec = SubshiftSpec.golden_mean()
        fam = random_family(spec, 3, 1, rng)
        sys = solve_gibbs(spec, fam, [rng.normal()])
        for w in enumerate_admissible_words(spec, n):
            pre = [s for s in (1, 2) if spec.incidence[s - 1, w.codes[0]]]
            total = sum(invariant_cylinder_prob(sys, [s] + list(w.symbols)) for s in pre)
            assert np.isclose(total, invariant_cylinder_prob(sys, w), rtol=1e-10, atol=0)

    def test_markov_measure_of_pairs(self):
        p = np.array([[0.3, 0.7], [0.6, 0.4]])
        spec = SubshiftSpec.full_shift(2)
        fam = markov_family(spec)
        sys = solve_gibbs(spec, fam, markov_to_theta(p))
        vals, vecs = np.linalg.eig(p.T)
        pi = np.real(vecs[:, np.argmax(np.real(vals))])
        pi /= pi.sum()
        for i in range(2):
            for j in range(2):
                assert np.isclose(invariant_cylinder_prob(sys, [i + 1, j + 1]), pi[i] * p[i, j], atol=1e-13)

    def test_markov_eigenmeasure_is_not_invariant(self):
        p = np.array([[0.3, 0.7], [0.6, 0.4]])
        spec = SubshiftSpec.full_shift(2)
        sys = solve_gibbs(spec, markov_family(spec), markov_to_theta(p))
        assert not np.allclose(sys.nu, sys.mu)

    def test_inadmissible_word(self, golden):
        sys = solve_gibbs(golden, _zero_family(golden), [0.0])
        with pytest.raises(AdmissibilityError):
            cylinder_log_prob(sys, [1, 1])


class TestOracle:
    def test_golden_mean_cylinder(self, golden):
        fam = _zero_family(golden)
        sys = solve_gibbs(golden, fam, [0.0])
        oracle = oracle_cylinder_prob(golden, fam, [0.0], [1, 2], iters=60)
        assert abs(math.log(oracle) - cylinder_log_prob(sys, [1, 2])) <= 1e-10

    @given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]), st.integers(1, 2))
    def test_matches_exact_cylinders(self, seed, a, depth):
        rng = np.random.default_rng(seed)
        spec = SubshiftSpec.full_shift(a) if a == 3 else SubshiftSpec.golden_mean()
        fam = random_family(spec, depth, 1, rng, scale=0.5)
        t = [rng.normal(scale=0.5)]
        sys = solve_gibbs(spec, fam, t)
        for w in enumerate_admissible_words(spec, int(rng.integers(1, 5))):
            exact = cylinder_log_prob(sys, w)
            # the oracle error decays like (|lambda_2| / lambda_1) ** iters
            assert abs(math.log(oracle_cylinder_prob(spec, fam, t, w, iters=400)) - exact) <= 1e-8


class TestDerivatives:
    @pytest.mark.parametrize("theta", [-2.0, -0.3, 0.0, 0.7, 3.0])
    def test_bernoulli_variance(self, theta):
        spec, fam = bernoulli_family(2)
        p = 1 / (1 + math.exp(-theta))
        np.testing.assert_allclose(asymptotic_covariance(spec, fam, [theta]), [[p * (1 - p)]], rtol=0, atol=1e-12)
        np.testing.assert_allclose(pressure_gradient(spec, fam, [theta]), [p], rtol=0, atol=1e-14)

    def test_gradient_and_hessian_by_differences(self, golden, rng):
        fam = random_family(golden, 2, 2, rng)
        t = np.array([0.3, -0.2])
        h = 1e-5
        fd = [(pressure(golden, fam, t + h * e) - pressure(golden, fam, t - h * e)) / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(pressure_gradient(golden, fam, t), fd, rtol=0, atol=1e-8)
        np.testing.assert_allclose(second_derivative_check(golden, fam, t), asymptotic_covariance(golden, fam, t),
                                   rtol=0, atol=1e-5)

    def test_series_agrees_with_resolvent(self, golden, rng):
        fam = random_family(golden, 3, 2, rng)
        t = [0.1, 0.4]
        np.testing.assert_allclose(covariance_series(golden, fam, t), asymptotic_covariance(golden, fam, t),
                                   rtol=0, atol=1e-12)

    def test_covariance_of_deeper_functions(self, golden, rng):
        # a depth-3 function cohomologous to a direction has the same variance
        fam = random_family(golden, 2, 1, rng)
        sys = solve_gibbs(golden, fam, [0.5])
        h = LocallyConstantFn(golden, 2, rng.normal(size=(2, 2)))
        f = fam.directions[0]
        g = f + LocallyConstantFn.coboundary(h) + 3.0
        np.testing.assert_allclose(covariance_of(sys, [g]), covariance_of(sys, [f]), rtol=0, atol=1e-12)


class TestCohomologyCheck:
    def test_independent_indicators(self):
        spec, fam = bernoulli_family(4)
        ok, min_eig = cohomology_independence_check(spec, fam)
        assert ok and min_eig > 1e-8

    def test_coboundary_direction(self, golden):
        h = LocallyConstantFn.indicator(golden, [1])
        fam = PotentialFamily(LocallyConstantFn.constant(golden, 0.0),
                              [LocallyConstantFn.indicator(golden, [2]), LocallyConstantFn.coboundary(h)])
        ok, min_eig = cohomology_independence_check(golden, fam)
        assert not ok and min_eig <= 1e-8

    def test_constant_direction(self, golden):
        ok, _ = cohomology_independence_check(golden, _zero_family(golden))
        assert not ok

    def test_markov_family_contains_coboundary(self):
        spec = SubshiftSpec.full_shift(2)
        sigma = asymptotic_covariance(spec, markov_family(spec), np.zeros(3))
        assert np.linalg.matrix_rank(sigma, tol=1e-9) == 2
