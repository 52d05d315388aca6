"""Likelihood-ratio tests with critical values from the quadratic-form limit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import quantile, xi_upper_quantile
from .errors import DegenerateModelError, DimensionError, InfeasibleError
from .inference import MleConfig, _Likelihood, _check_spec, mle
from .sampling import sample_path
from .shift_core import PotentialFamily, as_theta
from .thermo import asymptotic_covariance, cohomology_independence_check, solve_gibbs

__all__ = [
    "TestResult",
    "lr_test_simple",
    "lr_test_influence",
    "np_test",
    "calibrate_np_constant",
]


@dataclass(frozen=True)
class TestResult:
    """Likelihood ratio ``statistic = L_null / L`` and its critical value.

    ``reject`` is ``statistic <= critical_value``; the comparison is made on the
    log scale so that tiny ratios do not underflow.
    """

    __test__ = False

    statistic: float
    log_statistic: float
    critical_value: float
    reject: bool
    alpha: float | None
    z_used: float | None
    theta_null_hat: np.ndarray | None = None
    theta_hat: np.ndarray | None = None
    null_feasible: bool = True


def _critical(z: float) -> float:
    return 1.0 / (1.0 + z) if z != -1.0 else math.inf


def _decide(log_stat: float, c: float) -> bool:
    if c <= 0:
        return False
    if math.isinf(c):
        return True
    return log_stat <= math.log(c)


def _result(log_stat, c, alpha, z, theta0=None, theta_hat=None, null_feasible=True):
    stat = math.exp(log_stat) if log_stat < 700 else math.inf
    return TestResult(stat, float(log_stat), float(c), _decide(log_stat, c), alpha, z,
                      theta0, theta_hat, null_feasible)


def lr_test_simple(spec, fam: PotentialFamily, w, theta0, alpha: float = 0.05,
                   cfg: MleConfig | None = None, reps: int = 100_000, seed: int = 0) -> TestResult:
    """Test ``theta = theta0`` against the constrained maximum likelihood.

    ``z`` is the upper ``alpha`` quantile of ``Xi`` under the covariance at
    ``theta0``; the null is rejected when ``nu_theta0([w]) / L <= 1 / (1 + z)``.
    """
    _check_spec(spec, fam)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    cfg = cfg or MleConfig()
    t0 = as_theta(theta0, fam.d)
    est = mle(spec, fam, w, cfg)
    lik = _Likelihood(fam, w, cfg.constrain_base)
    log_null = lik.value(t0)
    sigma0 = asymptotic_covariance(None, fam, t0)
    z = xi_upper_quantile(sigma0, alpha, reps, seed)
    lo, hi = cfg.bounds(lik.n, fam.d)
    inside = bool(np.all(t0 >= lo) and np.all(t0 <= hi) and lik.moment_gap(t0) <= cfg.eta_for(lik.n) ** 2)
    return _result(log_null - est.loglik, _critical(z), alpha, z, t0, est.theta_hat, inside)


def lr_test_influence(spec, fam: PotentialFamily, w, k: int, alpha: float = 0.05,
                      cfg: MleConfig | None = None, reps: int = 100_000, seed: int = 0) -> TestResult:
    """Test whether direction ``k`` (1-based) has zero coefficient.

    The null fit maximizes over the same feasible set with ``theta_k = 0``; the
    critical value uses the covariance at that null fit.
    """
    _check_spec(spec, fam)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    d = fam.d
    if not 1 <= k <= d:
        raise DimensionError(f"coordinate k must lie in 1..{d}")
    cfg = cfg or MleConfig()
    k0 = k - 1
    lik = _Likelihood(fam, w, cfg.constrain_base)
    if d > 1:
        reduced = fam.without(k0)
        ok, min_eig = cohomology_independence_check(None, reduced, np.zeros(d - 1))
        if not ok:
            raise DegenerateModelError(
                f"remaining directions are dependent modulo coboundaries (min eigenvalue {min_eig:.3e})")
    null_feasible = True
    try:
        if d > 1:
            null = mle(spec, fam, w, cfg, fixed={k0: 0.0})
            theta_null, log_null = np.array(null.theta_hat), null.loglik
        else:
            theta_null = np.zeros(1)
            log_null = lik.value(theta_null)
            lo, hi = cfg.bounds(lik.n, d)
            null_feasible = bool(lo[0] <= 0 <= hi[0] and lik.moment_gap(theta_null) <= cfg.eta_for(lik.n) ** 2)
    except InfeasibleError as exc:
        theta_null = np.array(exc.closest)
        theta_null[k0] = 0.0
        log_null = -math.inf
        null_feasible = False
    full = mle(spec, fam, w, cfg, extra_starts=[theta_null] if null_feasible else ())
    sigma_hat = asymptotic_covariance(None, fam, theta_null)
    z = xi_upper_quantile(sigma_hat, alpha, reps, seed)
    log_stat = log_null - full.loglik if null_feasible or d == 1 else -math.inf
    return _result(log_stat, _critical(z), alpha, z, theta_null, full.theta_hat, null_feasible)


def np_test(spec, fam: PotentialFamily, w, theta0, theta1, c: float) -> TestResult:
    """Reject ``theta0`` in favour of ``theta1`` when ``nu_theta0([w]) / nu_theta1([w]) <= c``."""
    _check_spec(spec, fam)
    t0 = as_theta(theta0, fam.d)
    t1 = as_theta(theta1, fam.d)
    if np.array_equal(t0, t1):
        raise ValueError("the two simple hypotheses must differ")
    if not c > 0:
        raise ValueError("the level constant must be positive")
    lik = _Likelihood(fam, w)
    return _result(lik.value(t0) - lik.value(t1), c, None, None, t0)


def calibrate_np_constant(spec, fam: PotentialFamily, theta0, theta1, n: int, alpha: float,
                          reps: int = 2000, seed: int = 0) -> float:
    """Constant ``c`` whose rejection rate under ``theta0`` is about ``alpha``.

    Paths are drawn from the invariant measure at ``theta0``; ``c`` is the
    ``alpha`` order statistic of the simulated likelihood ratios.
    """
    _check_spec(spec, fam)
    t0 = as_theta(theta0, fam.d)
    t1 = as_theta(theta1, fam.d)
    sys = solve_gibbs(None, fam, t0)
    logs = []
    for i in range(reps):
        w = sample_path(sys, n, seed, stream=i).symbols
        lik = _Likelihood(fam, w)
        logs.append(lik.value(t0) - lik.value(t1))
    return float(math.exp(quantile(logs, alpha)))
