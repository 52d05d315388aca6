"""Transfer-operator linear algebra for locally constant potentials.

For a family of common depth ``M`` the operator acts on functions of the first
``r = max(M, 2) - 1`` coordinates. With ``K[w', w] = exp(F(j.w))`` whenever
``w' = (j.w)[:r]``, the transfer operator is ``L g = K.T @ g``; hence the
eigenfunction ``phi`` is the left and the eigenmeasure ``nu`` (on r-cylinders)
the right Perron vector of ``K``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AdmissibilityError, ConvergenceError, DimensionError, ModelError
from .shift_core import (
    LocallyConstantFn,
    PotentialFamily,
    SubshiftSpec,
    _flat_index,
    admissible_codes,
    admissible_mask,
    as_theta,
    as_word,
)

__all__ = [
    "DEFAULT_TOL",
    "TransferMatrix",
    "GibbsSystem",
    "perron_pair",
    "solve_gibbs",
    "transfer_matrix",
    "pressure",
    "pressure_gradient",
    "asymptotic_covariance",
    "covariance_series",
    "covariance_of",
    "second_derivative_check",
    "cylinder_log_prob",
    "oracle_cylinder_prob",
    "invariant_cylinder_prob",
    "cohomology_independence_check",
]

DEFAULT_TOL = 1e-13
MAX_ITER = 100_000
_EPS = np.finfo(float).eps


def perron_pair(m: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER,
                right0=None, left0=None):
    """Leading eigenvalue and right/left Perron vectors of a primitive nonnegative matrix.

    Vectors are returned max-normalized. Power iteration is used first; when
    the spectral gap is small it switches to repeated squaring followed by
    shifted inverse steps, and for nearly periodic spectra to a dense
    eigensolver.
    """
    m = np.asarray(m, dtype=float)
    lam_r, right = _power(m, tol, max_iter, right0)
    lam_l, left = _power(m.T, tol, max_iter, left0)
    lam = float(left @ (m @ right) / (left @ right))
    return lam, right, left


def _residual(m, x):
    z = m @ x
    lam = z.max()
    return lam, z / lam, float(np.max(np.abs(z - lam * x)) / lam)


def _power(m, tol, max_iter, x0):
    n = m.shape[0]
    floor = max(tol, 64 * _EPS * n)
    x = np.ones(n) if x0 is None else np.maximum(np.asarray(x0, dtype=float), 0.0)
    if not np.any(x > 0):
        x = np.ones(n)
    x = x / x.max()
    it = 0
    res = np.inf
    while it < max_iter:
        for _ in range(7):
            y = m @ x
            x = y / y.max()
        it += 8
        lam, x, res = _residual(m, x)
        if res <= floor:
            return lam, x
        if it == 256:
            # small spectral gap: squaring gives a start, shifted inverse steps polish it
            x = _squaring_start(m / lam, x)
            for _ in range(6):
                lam, x, res = _residual(m, x)
                if res <= floor:
                    return lam, x
                x = _inverse_step(m, lam, x)
        if it == 512:
            # nearly periodic spectrum (|lambda_2| ~ lambda_1): fall back to a dense solve
            lam, x, res = _dense_perron(m)
            if res <= max(floor, 64 * _EPS * n * float(np.abs(m).max()) / lam):
                return lam, x
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations (residual {res:.3e})")


def _dense_perron(m):
    vals, vecs = np.linalg.eig(m)
    k = int(np.argmax(vals.real))
    x = np.abs(vecs[:, k].real)
    x = x / x.max()
    lam = float(vals[k].real)
    return lam, x, float(np.max(np.abs(m @ x - lam * x)) / lam)


def _inverse_step(m, lam, x):
    shift = lam * (1.0 + 1e-9)
    try:
        y = np.linalg.solve(m - shift * np.eye(m.shape[0]), x)
    except np.linalg.LinAlgError:
        return x
    y = np.abs(y)
    return y / y.max() if y.max() > 0 else x


def _squaring_start(b, x):
    for _ in range(80):
        b = b @ b
        top = b.max()
        if not np.isfinite(top) or top == 0:
            break
        b /= top
        y = b @ x
        if y.max() > 0:
            y = y / y.max()
            if np.max(np.abs(y - x)) < 1e-15:
                return y
            x = y
    return x


@dataclass(frozen=True)
class _Layout:
    spec: SubshiftSpec
    order: int
    words: np.ndarray        # (N, r) admissible r-words
    edges: np.ndarray        # (E, r+1) admissible (r+1)-words
    head: np.ndarray         # index of edges[:, :r]
    tail: np.ndarray         # index of edges[:, 1:]
    word_index: np.ndarray   # dense r-word index -> row, -1 if inadmissible
    edge_values: np.ndarray  # (d+1, E) values of f0..fd on edges
    dense_values: np.ndarray  # (d+1, a**(r+1)) dense tables


def _layout(fam: PotentialFamily) -> _Layout:
    cache = fam._cache
    if "layout" in cache:
        return cache["layout"]
    spec = fam.spec
    a = spec.alphabet_size
    r = max(fam.common_depth, 2) - 1
    words = admissible_codes(spec, r)
    edges = admissible_codes(spec, r + 1)
    word_index = -np.ones(a ** r, dtype=np.int64)
    word_index[_flat_index(words, a)] = np.arange(len(words))
    head = word_index[_flat_index(edges[:, :r], a)]
    tail = word_index[_flat_index(edges[:, 1:], a)]
    dense = np.asarray(fam.stacked_tables(r + 1))
    lay = _Layout(spec, r, words, edges, head, tail, word_index,
                  dense[:, _flat_index(edges, a)], dense)
    cache["layout"] = lay
    return lay


@dataclass(frozen=True)
class TransferMatrix:
    """Finite transfer matrix of order ``r`` indexed by admissible r-words.

    ``entries[w', w] = exp(F(j.w))`` when ``w' = (j.w)[:r]``; ``index`` lists
    the r-words (1-based tuples) in lexicographic order.
    """

    order: int
    index: list
    entries: np.ndarray


@dataclass(frozen=True, eq=False)
class GibbsSystem:
    """Solved Perron data of ``F_theta`` at word resolution.

    ``phi``, ``nu`` and ``mu`` are vectors over admissible r-words; ``nu`` and
    ``mu`` sum to one and ``sum(phi * nu) == 1``.
    """

    family: PotentialFamily
    theta: np.ndarray
    lam: float
    pressure: float
    phi: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    order: int
    edge_mu: np.ndarray
    edge_potential: np.ndarray
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def spec(self) -> SubshiftSpec:
        return self.family.spec

    @property
    def layout(self) -> _Layout:
        return _layout(self.family)

    @property
    def words(self) -> list:
        return [tuple(int(c) + 1 for c in w) for w in self.layout.words]

    def potential_table(self) -> np.ndarray:
        """Dense flat table of ``F_theta`` on (r+1)-words."""
        if "dense" not in self._memo:
            lay = self.layout
            self._memo["dense"] = lay.dense_values[0] + self.theta @ lay.dense_values[1:]
        return self._memo["dense"]

    def forward_kernel(self) -> np.ndarray:
        """Transition matrix of the r-word chain of ``mu`` (rows sum to one)."""
        if "fwd" not in self._memo:
            lay = self.layout
            n = len(lay.words)
            q = np.zeros((n, n))
            q[lay.head, lay.tail] = np.exp(self.edge_potential - self.pressure) * self.nu[lay.tail] / self.nu[lay.head]
            q /= q.sum(axis=1, keepdims=True)
            self._memo["fwd"] = q
        return self._memo["fwd"]

    def block_chain(self, k: int):
        """Stationary chain on admissible k-words (``k >= r + 1``).

        Returns ``(codes, pi, Q)`` with ``Q[u, u']`` the probability of moving
        from ``u`` to ``u' = u[1:] + s``.
        """
        r = self.order
        if k < r + 1:
            raise DimensionError("block length must exceed the operator order")
        key = ("block", k)
        if key in self._memo:
            return self._memo[key]
        spec = self.spec
        a = spec.alphabet_size
        lay = self.layout
        codes = admissible_codes(spec, k)
        dense_f = self.potential_table()
        windows = np.lib.stride_tricks.sliding_window_view(codes, r + 1, axis=1)
        fsum = dense_f[_flat_index(windows, a)].sum(axis=1)
        head = lay.word_index[_flat_index(codes[:, :r], a)]
        last = lay.word_index[_flat_index(codes[:, k - r:], a)]
        log_pi = np.log(self.phi[head]) + fsum - (k - r) * self.pressure + np.log(self.nu[last])
        pi = np.exp(log_pi - log_pi.max())
        pi /= pi.sum()
        index = -np.ones(a ** k, dtype=np.int64)
        index[_flat_index(codes, a)] = np.arange(len(codes))
        q = np.zeros((len(codes), len(codes)))
        for s in range(a):
            ok = spec.incidence[codes[:, -1], s]
            src = np.flatnonzero(ok)
            nxt = np.concatenate([codes[src, 1:], np.full((len(src), 1), s)], axis=1)
            dst = index[_flat_index(nxt, a)]
            new_last = lay.word_index[_flat_index(nxt[:, k - r:], a)]
            q[src, dst] = (np.exp(dense_f[_flat_index(nxt[:, k - r - 1:], a)] - self.pressure)
                           * self.nu[new_last] / self.nu[last[src]])
        q /= q.sum(axis=1, keepdims=True)
        out = (codes, pi, q)
        self._memo[key] = out
        return out

    def mean(self, f: LocallyConstantFn) -> float:
        """Exact ``mu``-expectation of a locally constant function."""
        k = max(f.depth, self.order + 1)
        if k == self.order + 1:
            vals = f.lift(k).table.ravel()[_flat_index(self.layout.edges, self.spec.alphabet_size)]
            return float(self.edge_mu @ vals)
        codes, pi, _ = self.block_chain(k)
        return float(pi @ f.lift(k).evaluate_codes(codes))


def _as_system_args(spec, fam, p):
    if not isinstance(fam, PotentialFamily):
        raise ModelError("expected a PotentialFamily")
    if spec is not None and spec != fam.spec:
        raise ModelError("family lives on a different shift than the one supplied")
    return as_theta(p, fam.d)


def solve_gibbs(spec: SubshiftSpec | None, fam: PotentialFamily, p, tol: float = DEFAULT_TOL,
                warm: GibbsSystem | None = None) -> GibbsSystem:
    if tol <= 0:
        raise ValueError("tol must be positive")
    theta = _as_system_args(spec, fam, p)
    lay = _layout(fam)
    fe = lay.edge_values[0] + theta @ lay.edge_values[1:]
    shift = float(fe.max())
    n = len(lay.words)
    k = np.zeros((n, n))
    k[lay.head, lay.tail] = np.exp(fe - shift)
    lam_s, nu, phi = perron_pair(
        k, tol=tol,
        right0=None if warm is None else warm.nu,
        left0=None if warm is None else warm.phi,
    )
    press = float(np.log(lam_s) + shift)
    nu = nu / nu.sum()
    phi = phi / (phi @ nu)
    mu = phi * nu
    edge_mu = phi[lay.head] * np.exp(fe - press) * nu[lay.tail]
    edge_mu /= edge_mu.sum()
    mu = mu / mu.sum()
    theta = theta.copy()
    for arr in (theta, phi, nu, mu, edge_mu, fe):
        arr.setflags(write=False)
    return GibbsSystem(fam, theta, float(np.exp(press)), press, phi, nu, mu, lay.order, edge_mu, fe)


def transfer_matrix(spec: SubshiftSpec | None, fam: PotentialFamily, p) -> TransferMatrix:
    theta = _as_system_args(spec, fam, p)
    lay = _layout(fam)
    fe = lay.edge_values[0] + theta @ lay.edge_values[1:]
    n = len(lay.words)
    k = np.zeros((n, n))
    k[lay.head, lay.tail] = np.exp(fe)
    index = [tuple(int(c) + 1 for c in w) for w in lay.words]
    return TransferMatrix(lay.order, index, k)


def pressure(spec, fam, p) -> float:
    return solve_gibbs(spec, fam, p).pressure


def _gradient(sys: GibbsSystem) -> np.ndarray:
    return sys.layout.edge_values[1:] @ sys.edge_mu


def pressure_gradient(spec, fam, p=None, *, system: GibbsSystem | None = None) -> np.ndarray:
    """``mu``-means of the directions, i.e. the gradient of the pressure."""
    sys = system if system is not None else solve_gibbs(spec, fam, p)
    return _gradient(sys)


def _covariance_from_chain(pi, q, values, method="resolvent", cutoff=1e-14, max_terms=100_000):
    g = values - (values @ pi)[:, np.newaxis]
    gw = g * pi
    base = gw @ g.T
    if method == "resolvent":
        n = len(pi)
        a = np.eye(n) - q + np.outer(np.ones(n), pi)
        h = np.linalg.solve(a, q @ g.T)
        cross = gw @ h
        sigma = base + cross + cross.T
    elif method == "series":
        sigma = base.copy()
        cur = g.T.copy()
        for _ in range(max_terms):
            cur = q @ cur
            term = gw @ cur
            sigma += term + term.T
            if np.max(np.abs(term)) < cutoff:
                break
        else:
            raise ConvergenceError("Green-Kubo series did not reach the cutoff")
    else:
        raise ValueError(f"unknown method {method!r}")
    sigma = 0.5 * (sigma + sigma.T)
    return sigma


def covariance_of(sys: GibbsSystem, fs: Sequence[LocallyConstantFn], method: str = "resolvent") -> np.ndarray:
    """Asymptotic covariance of Birkhoff sums of arbitrary locally constant functions."""
    k = max([sys.order + 1] + [f.depth for f in fs])
    codes, pi, q = sys.block_chain(k)
    values = np.stack([f.lift(k).evaluate_codes(codes) for f in fs])
    return _covariance_from_chain(pi, q, values, method)


def asymptotic_covariance(spec, fam, p=None, *, system: GibbsSystem | None = None,
                          method: str = "resolvent") -> np.ndarray:
    """``d x d`` matrix ``lim (1/n) Cov(S_n f_i, S_n f_j)`` under ``mu_theta``.

    The default solves the Poisson equation of the stationary (r+1)-word chain;
    ``method="series"`` sums the correlation series until terms drop below 1e-14.
    """
    sys = system if system is not None else solve_gibbs(spec, fam, p)
    codes, pi, q = sys.block_chain(sys.order + 1)
    return _covariance_from_chain(pi, q, sys.layout.edge_values[1:], method)


def covariance_series(spec, fam, p) -> np.ndarray:
    return asymptotic_covariance(spec, fam, p, method="series")


def second_derivative_check(spec, fam, p, h: float = 1e-3) -> np.ndarray:
    """Central finite-difference Hessian of the pressure."""
    theta = _as_system_args(spec, fam, p)
    d = fam.d
    hess = np.empty((d, d))
    e = np.eye(d) * h

    def pr(t):
        return solve_gibbs(None, fam, t).pressure

    p0 = pr(theta)
    for i in range(d):
        hess[i, i] = (pr(theta + e[i]) - 2 * p0 + pr(theta - e[i])) / h ** 2
        for j in range(i):
            val = (pr(theta + e[i] + e[j]) - pr(theta + e[i] - e[j])
                   - pr(theta - e[i] + e[j]) + pr(theta - e[i] - e[j])) / (4 * h ** 2)
            hess[i, j] = hess[j, i] = val
    return hess


def _checked_codes(sys: GibbsSystem, w) -> np.ndarray:
    word = as_word(w)
    spec = sys.spec
    if len(word) == 0:
        raise AdmissibilityError("empty word")
    if word.codes.max() >= spec.alphabet_size or not spec.is_admissible(word.codes):
        raise AdmissibilityError(f"{word!r} is not admissible")
    return word.codes


def cylinder_log_prob(sys: GibbsSystem, w) -> float:
    """Exact ``log nu_theta([w])`` by peeling one symbol at a time."""
    codes = _checked_codes(sys, w)
    r = sys.order
    a = sys.spec.alphabet_size
    lay = sys.layout
    n = codes.size
    if n < r:
        ext = lay.words[np.all(lay.words[:, :n] == codes, axis=1)]
        return float(np.log(sys.nu[lay.word_index[_flat_index(ext, a)]].sum()))
    last = lay.word_index[_flat_index(codes[n - r:], a)]
    if n == r:
        return float(np.log(sys.nu[last]))
    windows = np.lib.stride_tricks.sliding_window_view(codes, r + 1)
    fsum = sys.potential_table()[_flat_index(windows, a)].sum()
    return float(fsum - (n - r) * sys.pressure + np.log(sys.nu[last]))


def invariant_cylinder_prob(sys: GibbsSystem, w) -> float:
    """``mu_theta([w]) = phi(w[:r]) * nu([w])`` (summed over extensions if short)."""
    codes = _checked_codes(sys, w)
    r = sys.order
    a = sys.spec.alphabet_size
    lay = sys.layout
    n = codes.size
    if n < r:
        mask = np.all(lay.words[:, :n] == codes, axis=1)
        return float(sys.mu[mask].sum())
    head = lay.word_index[_flat_index(codes[:r], a)]
    return float(sys.phi[head] * np.exp(cylinder_log_prob(sys, w)))


def oracle_cylinder_prob(spec, fam: PotentialFamily, p, w, iters: int = 60) -> float:
    """``nu([w])`` as the ratio of transfer-operator iterates of ``1_[w]`` and ``1``.

    Both iterates are integrated against the measure that is uniform on
    r-cylinders. No eigen-solve is involved; the error decays like the
    ``iters``-th power of the modulus ratio of the two leading eigenvalues.
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    theta = _as_system_args(spec, fam, p)
    spec = fam.spec
    a = spec.alphabet_size
    r = max(fam.common_depth, 2) - 1
    word = as_word(w, spec)
    n = len(word)
    dense = fam.stacked_tables(r + 1)
    fd = (dense[0] + theta @ dense[1:]).reshape((a,) * (r + 1))
    mask = admissible_mask(spec, r + 1)
    weight = np.where(mask, np.exp(fd - fd[mask].max()), 0.0)

    def step(g):
        if g.ndim < r + 1:
            g = g.reshape(g.shape + (1,) * (r + 1 - g.ndim))
        return (weight.reshape(weight.shape + (1,) * (g.ndim - r - 1)) * g).sum(axis=0)

    def iterate(g):
        log_scale = 0.0
        for _ in range(iters):
            g = step(g)
            top = g.max()
            g = g / top
            log_scale += np.log(top)
        return g, log_scale

    key = ("oracle_den", theta.tobytes(), iters)
    if key not in fam._cache:
        den, log_den = iterate(np.ones((a,) * r))
        fam._cache[key] = (_integrate_uniform(spec, den, r), log_den)
    den_int, log_den = fam._cache[key]
    num = np.zeros((a,) * n)
    num[tuple(word.codes)] = 1.0
    num, log_num = iterate(num)
    return float(np.exp(log_num - log_den) * _integrate_uniform(spec, num, r) / den_int)


def _integrate_uniform(spec: SubshiftSpec, g: np.ndarray, r: int) -> float:
    a = spec.alphabet_size
    if g.ndim < r:
        g = np.broadcast_to(g.reshape(g.shape + (1,) * (r - g.ndim)), (a,) * r)
    inc = spec.incidence.astype(float)
    trans = inc / inc.sum(axis=1, keepdims=True)
    while g.ndim > r:
        shape = (1,) * (g.ndim - 2) + (a, a)
        g = (g * trans.reshape(shape)).sum(axis=-1)
    mask = admissible_mask(spec, r)
    return float(g[mask].sum() / mask.sum())


def cohomology_independence_check(spec, fam: PotentialFamily, p=None, tol: float = 1e-8):
    """Whether the directions are independent modulo coboundaries and constants.

    Returns ``(independent, smallest_eigenvalue_of_sigma)``.
    """
    if p is None:
        p = np.zeros(fam.d)
    sigma = asymptotic_covariance(spec, fam, p)
    min_eig = float(np.linalg.eigvalsh(sigma).min())
    return min_eig > tol, min_eig
