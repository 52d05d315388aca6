"""Limit laws: G^{-1}(N) N^t, the quadratic form Xi, quantiles, confidence boxes,
and weighted chi-square limits of product statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError, ModelError
from .shift_core import LocallyConstantFn, PotentialFamily, as_theta, window_values
from .thermo import GibbsSystem, asymptotic_covariance, covariance_of, solve_gibbs
from .sampling import make_rng, sample_path

__all__ = [
    "LimitSample",
    "ConfidenceRegion",
    "MisesEigen",
    "gaussian_draw",
    "limit_law_sample",
    "xi_upper_quantile",
    "quantile",
    "confidence_region",
    "mises_eigendata",
    "mises_statistic",
    "product_limit_weights",
    "weighted_chisq_sample",
    "efficiency_diagnostic",
]

REJECT_RATIO = 1e-10


def _check_sigma(sigma) -> np.ndarray:
    s = np.atleast_2d(np.asarray(sigma, dtype=float))
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError("covariance must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(s))))
    if not np.allclose(s, s.T, rtol=0, atol=1e-12 * scale):
        raise ModelError("covariance matrix is not symmetric")
    return 0.5 * (s + s.T)


def gaussian_draw(sigma, seed: int, count: int, stream: int = 0) -> np.ndarray:
    """``count`` rows of ``Normal(0, sigma)`` via a clamped eigendecomposition."""
    s = _check_sigma(sigma)
    vals, vecs = np.linalg.eigh(s)
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    if vals.size and vals.min() < -1e-12 * scale:
        raise ModelError(f"covariance matrix is not positive semidefinite (eigenvalue {vals.min():.3e})")
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    z = make_rng(seed, stream).standard_normal((int(count), s.shape[0]))
    return z @ root.T


@dataclass(frozen=True)
class LimitSample:
    """Accepted draws of ``G(N)^{-1} N^t`` with the matching ``Xi`` values.

    ``normals`` holds the accepted ``N`` rows in the same order.
    """

    draws: np.ndarray
    xi: np.ndarray
    normals: np.ndarray
    seed: int
    rejected: int

    @property
    def reps(self) -> int:
        return len(self.xi)

    @property
    def rejected_fraction(self) -> float:
        return self.rejected / (self.rejected + self.reps)


def limit_law_sample(sigma, reps: int, seed: int, batch: int = 65536) -> LimitSample:
    """Draw ``G(N)^{-1} N^t`` with ``G(N) = N^t N - sigma`` and ``N ~ Normal(0, sigma)``.

    Draws with smallest singular value of ``G`` below ``1e-10 * ||sigma||`` are
    rejected and replaced; the count is reported.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    s = _check_sigma(sigma)
    d = s.shape[0]
    norm = float(np.linalg.norm(s, 2))
    thresh = REJECT_RATIO * norm
    draws, xis, normals = [], [], []
    got = rejected = 0
    stream = 0
    while got < reps:
        size = min(batch, reps) if stream == 0 else min(batch, reps - got + 64)
        nb = gaussian_draw(s, seed, size, stream)
        stream += 1
        g = nb[:, :, np.newaxis] * nb[:, np.newaxis, :] - s
        if d == 1:
            smin = np.abs(g[:, 0, 0])
        else:
            # G is symmetric, so its singular values are the moduli of its eigenvalues
            smin = np.abs(np.linalg.eigvalsh(g)).min(axis=1)
        ok = smin >= thresh
        if norm == 0:
            ok[:] = False
        rejected += int((~ok).sum())
        nb, g = nb[ok], g[ok]
        if d == 1:
            x = nb / g[:, 0, :]
        else:
            x = np.linalg.solve(g, nb[:, :, np.newaxis])[:, :, 0]
        take = min(len(nb), reps - got)
        draws.append(x[:take])
        xis.append(np.einsum("ij,ij->i", nb[:take], x[:take]))
        normals.append(nb[:take])
        got += take
        if stream > 1000 and got == 0:
            raise ModelError("every draw was rejected; covariance is degenerate")
    return LimitSample(np.concatenate(draws), np.concatenate(xis), np.concatenate(normals), int(seed), rejected)


def quantile(draws, q: float) -> float:
    """Order statistic number ``ceil(q * reps)`` (1-based) of the sorted draws."""
    arr = np.sort(np.asarray(draws, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("quantile of an empty sample")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    k = math.ceil(round(q * arr.size, 9))
    k = min(max(k, 1), arr.size)
    return float(arr[k - 1])


@lru_cache(maxsize=128)
def _xi_quantile_cached(key: bytes, d: int, alpha: float, reps: int, seed: int) -> float:
    sigma = np.frombuffer(key, dtype=float).reshape(d, d)
    return quantile(limit_law_sample(sigma, reps, seed).xi, 1.0 - alpha)


def xi_upper_quantile(sigma, alpha: float, reps: int = 100_000, seed: int = 0) -> float:
    """``z`` with ``Prob(Xi >= z) = alpha`` (Monte Carlo order statistic)."""
    s = _check_sigma(sigma)
    return _xi_quantile_cached(np.ascontiguousarray(s).tobytes(), s.shape[0], float(alpha), int(reps), int(seed))


@dataclass(frozen=True)
class ConfidenceRegion:
    """Box ``theta_hat - below <= theta <= theta_hat + above``.

    ``below`` is the upper ``1 - alpha/(2d)`` quantile of the limit coordinate
    divided by ``sqrt(n)``; ``above`` is minus the lower ``alpha/(2d)`` quantile
    divided by ``sqrt(n)``. Each coordinate misses with limiting probability
    ``alpha/d``, so the box has nominal joint coverage at least ``1 - alpha``.
    """

    theta_hat: np.ndarray
    below: np.ndarray
    above: np.ndarray
    nominal_alpha: float
    n: int

    @property
    def lower(self) -> np.ndarray:
        return self.theta_hat - self.below

    @property
    def upper(self) -> np.ndarray:
        return self.theta_hat + self.above

    @property
    def nominal_coverage(self) -> float:
        return 1.0 - self.nominal_alpha

    def contains(self, theta) -> bool:
        t = np.asarray(theta, dtype=float)
        return bool(np.all(t >= self.lower) and np.all(t <= self.upper))


def confidence_region(theta_hat, sigma_hat, n: int, alpha: float, reps: int = 100_000,
                      seed: int = 0) -> ConfidenceRegion:
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    s = _check_sigma(sigma_hat)
    d = s.shape[0]
    th = as_theta(theta_hat, d)
    sample = limit_law_sample(s, reps, seed)
    tail = alpha / (2 * d)
    lo = np.array([quantile(sample.draws[:, i], tail) for i in range(d)])
    hi = np.array([quantile(sample.draws[:, i], 1.0 - tail) for i in range(d)])
    root = math.sqrt(n)
    return ConfidenceRegion(th, hi / root, -lo / root, float(alpha), int(n))


@dataclass(frozen=True)
class MisesEigen:
    lambda1: float
    lambda2: float
    phi1: LocallyConstantFn
    phi2: LocallyConstantFn


def _block(sys: GibbsSystem, *fs):
    k = max([sys.order + 1] + [f.depth for f in fs])
    codes, pi, _ = sys.block_chain(k)
    return k, codes, pi


def mises_eigendata(f: LocallyConstantFn, g: LocallyConstantFn, sys: GibbsSystem) -> MisesEigen:
    """Eigenvalues ``int fg +- ||f|| ||g||`` of ``u -> f <g, u> + g <f, u>`` in ``L2(mu)``.

    ``f`` and ``g`` are centred under ``mu`` first. When ``f`` and ``g`` are
    parallel the second eigenvector is undefined and ``phi2`` is returned as zero.
    """
    k, codes, pi = _block(sys, f, g)
    fv = f.lift(k).evaluate_codes(codes)
    gv = g.lift(k).evaluate_codes(codes)
    fv = fv - pi @ fv
    gv = gv - pi @ gv
    nf = math.sqrt(float(pi @ (fv * fv)))
    ng = math.sqrt(float(pi @ (gv * gv)))
    if nf <= 1e-14 or ng <= 1e-14:
        raise ValueError("mises_eigendata needs functions with nonzero centred L2 norm")
    inner = float(pi @ (fv * gv))
    lam1 = inner + nf * ng
    lam2 = inner - nf * ng
    phis = []
    for sign in (1.0, -1.0):
        v = fv / (nf * nf * ng) + sign * gv / (nf * ng * ng)
        norm = math.sqrt(float(pi @ (v * v)))
        v = v / norm if norm > 1e-12 * (1.0 / (nf * ng)) else np.zeros_like(v)
        table = np.zeros((sys.spec.alphabet_size,) * k)
        table[tuple(codes.T)] = v
        phis.append(LocallyConstantFn(sys.spec, k, table))
    return MisesEigen(lam1, lam2, phis[0], phis[1])


def mises_statistic(sys: GibbsSystem, f: LocallyConstantFn, g: LocallyConstantFn, w) -> float:
    """``(1/n) S_n f S_n g`` for ``f, g`` centred under ``mu``."""
    fc = f - sys.mean(f)
    gc = g - sys.mean(g)
    sf = window_values(fc, w).sum()
    sg = window_values(gc, w).sum()
    return float(sf * sg / len(w))


def product_limit_weights(sys: GibbsSystem, f: LocallyConstantFn, g: LocallyConstantFn):
    """Weights ``(l1, l2)`` with ``(1/n) S_n f S_n g -> l1 Z1^2 + l2 Z2^2``.

    Uses the joint asymptotic covariance ``C`` of ``(f, g)``; the weights are the
    eigenvalues of ``C`` times the symmetric form ``[[0, 1/2], [1/2, 0]]``.
    """
    c = covariance_of(sys, [f, g])
    form = np.array([[0.0, 0.5], [0.5, 0.0]])
    vals = np.sort(np.linalg.eigvals(form @ c).real)[::-1]
    return float(vals[0]), float(vals[1])


def weighted_chisq_sample(lambda1: float, lambda2: float, reps: int, seed: int, stream: int = 0) -> np.ndarray:
    z = make_rng(seed, stream).standard_normal((int(reps), 2))
    return lambda1 * z[:, 0] ** 2 + lambda2 * z[:, 1] ** 2


def efficiency_diagnostic(spec, fam: PotentialFamily, theta, n: int, reps: int, seed: int,
                          cfg=None, limit_reps: int = 10_000):
    """``(lhs, rhs)``: ``n`` times the mean squared error of the estimator over
    simulated fits, and the Monte Carlo mean of ``||G(N)^{-1} N^t||^2``."""
    from .inference import mle

    th = as_theta(theta, fam.d)
    sys = solve_gibbs(spec, fam, th)
    errs = []
    for i in range(reps):
        w = sample_path(sys, n, seed, stream=i).symbols
        est = mle(spec, fam, w, cfg)
        errs.append(float(np.sum((est.theta_hat - th) ** 2)))
    lhs = n * float(np.mean(errs))
    sample = limit_law_sample(asymptotic_covariance(None, fam, system=sys), limit_reps, seed)
    rhs = float(np.mean(np.sum(sample.draws ** 2, axis=1)))
    return lhs, rhs
