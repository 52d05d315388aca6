"""Constrained maximum likelihood, maximum-potential estimation, moment covariance
and pressure roots.

Both estimators search only the orthogonal complement of the null space of the
covariance matrix. Directions in that null space are cohomologous to constants,
so they do not change the invariant measure. When the null space is trivial the
search space is all of R^d; otherwise the minimal-norm representative is returned.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.stats import qmc

from .errors import ConvergenceError, DimensionError, InfeasibleError, ModelError
from .shift_core import PotentialFamily, _flat_index, as_theta, as_word, window_values
from .thermo import GibbsSystem, asymptotic_covariance, solve_gibbs
from .sampling import empirical_moments

__all__ = [
    "MleConfig",
    "EstimationResult",
    "MpeResult",
    "default_eta",
    "log_likelihood",
    "likelihood_gradient",
    "feasible",
    "mle",
    "mpe",
    "moment_covariance",
    "pressure_root",
    "null_directions",
]


def default_eta(n: int) -> float:
    return max(n ** -0.25, 0.05)


@dataclass(frozen=True)
class MleConfig:
    """Estimator settings.

    ``eta=None`` selects ``max(n**-0.25, 0.05)``; ``box`` (a ``(d, 2)`` array of
    bounds) overrides ``[-1/eta, 1/eta]^d``; ``grid_starts=None`` selects
    ``3**min(d, 4)`` lattice starts. ``constrain_base`` toggles the moment
    constraint on the ``f0`` component.
    """

    eta: float | None = None
    box: object = None
    grid_starts: int | None = None
    opt_tol: float = 1e-6
    max_iter: int = 200
    constrain_base: bool = True
    warm_start: bool = True

    def __post_init__(self):
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.opt_tol > 0:
            raise ValueError("opt_tol must be positive")
        if self.grid_starts is not None and self.grid_starts < 0:
            raise ValueError("grid_starts must be nonnegative")

    def eta_for(self, n: int) -> float:
        return default_eta(n) if self.eta is None else float(self.eta)

    def bounds(self, n: int, d: int):
        if self.box is None:
            b = 1.0 / self.eta_for(n)
            return np.full(d, -b), np.full(d, b)
        box = np.asarray(self.box, dtype=float)
        if box.shape == (2,):
            box = np.tile(box, (d, 1))
        if box.shape != (d, 2) or np.any(box[:, 0] > box[:, 1]):
            raise DimensionError(f"box must be a ({d}, 2) array of increasing bounds")
        return box[:, 0].copy(), box[:, 1].copy()


@dataclass(frozen=True)
class EstimationResult:
    theta_hat: np.ndarray
    loglik: float
    converged: bool
    constraint_active: bool
    n_used: int
    eta: float
    box_active: bool = False
    moment_active: bool = False
    moment_gap: float = 0.0
    null_dim: int = 0
    iterations: int = 0
    starts: int = 0


@dataclass(frozen=True)
class MpeResult:
    theta_tilde: np.ndarray
    objective: float
    newton_iters: int
    converged: bool = True
    null_dim: int = 0
    gradient_norm: float = 0.0


def null_directions(fam: PotentialFamily, rel_tol: float = 1e-9, theta=None) -> np.ndarray:
    """Orthonormal basis (columns) of the near-null space of the covariance matrix."""
    key = ("null", rel_tol)
    if theta is None and key in fam._cache:
        return fam._cache[key]
    t = np.zeros(fam.d) if theta is None else theta
    sigma = asymptotic_covariance(None, fam, t)
    vals, vecs = np.linalg.eigh(sigma)
    scale = max(vals.max(), 1e-300)
    out = vecs[:, vals <= rel_tol * scale]
    if theta is None:
        fam._cache[key] = out
    return out


def _subspace(d: int, null: np.ndarray, fixed_idx) -> np.ndarray:
    rows = [null.T] if null.size else []
    for i in fixed_idx:
        e = np.zeros((1, d))
        e[0, i] = 1.0
        rows.append(e)
    if not rows:
        return np.eye(d)
    return linalg.null_space(np.vstack(rows))


class _Likelihood:
    """Exact ``log nu_t([w])`` split into linear, pressure and last-word terms."""

    def __init__(self, fam: PotentialFamily, w, constrain_base: bool = True):
        word = as_word(w, fam.spec)
        n = len(word)
        if n < fam.common_depth:
            raise DimensionError(f"word length {n} is shorter than the family depth {fam.common_depth}")
        self.fam = fam
        self.word = word
        self.n = n
        lay = solve_gibbs(None, fam, np.zeros(fam.d)).layout
        self.r = r = lay.order
        a = fam.spec.alphabet_size
        codes = word.codes
        if n < r:
            raise DimensionError(f"word length must be at least the operator order {r}")
        if n > r:
            windows = np.lib.stride_tricks.sliding_window_view(codes, r + 1)
            counts = np.bincount(_flat_index(windows, a), minlength=a ** (r + 1))
            self.linear = lay.dense_values @ counts
        else:
            self.linear = np.zeros(fam.d + 1)
        self.last = int(lay.word_index[_flat_index(codes[n - r:], a)])
        self.alpha = empirical_moments(fam, word)
        self.comp = slice(0, fam.d + 1) if constrain_base else slice(1, fam.d + 1)
        self._solves = {}
        self._last = None

    def system(self, theta) -> GibbsSystem:
        key = np.asarray(theta, dtype=float).tobytes()
        sys = self._solves.get(key)
        if sys is None:
            if len(self._solves) > 512:
                self._solves.clear()
            sys = solve_gibbs(None, self.fam, theta, warm=self._last)
            self._solves[key] = sys
            self._last = sys
        return sys

    def value(self, theta) -> float:
        sys = self.system(theta)
        return float(self.linear[0] + sys.theta @ self.linear[1:]
                     - (self.n - self.r) * sys.pressure + np.log(sys.nu[self.last]))

    def moment_gap(self, theta) -> float:
        sys = self.system(theta)
        means = sys.layout.edge_values @ sys.edge_mu
        return float(np.max(np.abs(self.alpha[self.comp] - means[self.comp])))

    def last_log_nu(self, theta) -> float:
        return float(np.log(self.system(theta).nu[self.last]))

    def gradient(self, theta, basis: np.ndarray | None = None) -> np.ndarray:
        """Gradient along the columns of ``basis`` (default: coordinates)."""
        theta = np.asarray(theta, dtype=float)
        d = self.fam.d
        basis = np.eye(d) if basis is None else basis
        sys = self.system(theta)
        means = sys.layout.edge_values[1:] @ sys.edge_mu
        analytic = self.linear[1:] - (self.n - self.r) * means
        h = 1e-5 * (1.0 + np.max(np.abs(theta)))
        base = np.array([
            (self.last_log_nu(theta + h * basis[:, j]) - self.last_log_nu(theta - h * basis[:, j])) / (2 * h)
            for j in range(basis.shape[1])
        ])
        return basis.T @ analytic + base


def log_likelihood(spec, fam: PotentialFamily, w, theta) -> float:
    """``log nu_theta([w])``."""
    _check_spec(spec, fam)
    return _Likelihood(fam, w).value(as_theta(theta, fam.d))


def likelihood_gradient(spec, fam: PotentialFamily, w, theta) -> np.ndarray:
    _check_spec(spec, fam)
    return _Likelihood(fam, w).gradient(as_theta(theta, fam.d))


def _check_spec(spec, fam):
    if not isinstance(fam, PotentialFamily):
        raise ModelError("expected a PotentialFamily")
    if spec is not None and spec != fam.spec:
        raise ModelError("family lives on a different shift than the one supplied")


def feasible(spec, fam: PotentialFamily, w, theta, cfg: MleConfig | None = None) -> bool:
    """Membership of ``theta`` in the box-and-moment constrained set."""
    _check_spec(spec, fam)
    cfg = cfg or MleConfig()
    lik = _Likelihood(fam, w, cfg.constrain_base)
    t = as_theta(theta, fam.d)
    lo, hi = cfg.bounds(lik.n, fam.d)
    eta = cfg.eta_for(lik.n)
    return bool(np.all(t >= lo) and np.all(t <= hi) and lik.moment_gap(t) <= eta ** 2)


@dataclass
class _Run:
    theta: np.ndarray
    value: float
    gap: float
    feasible: bool
    converged: bool
    iterations: int
    stalled_on_moment: bool = False


class _Problem:
    def __init__(self, lik: _Likelihood, lo, hi, eta, basis, anchor, opt_tol, max_iter):
        self.lik = lik
        self.lo, self.hi = lo, hi
        self.bound = eta ** 2
        self.basis = basis          # columns span the search space through ``anchor``
        self.anchor = anchor
        self.opt_tol = opt_tol
        self.max_iter = max_iter
        self.scale = lik.n

    def project(self, theta):
        return self.anchor + self.basis @ (self.basis.T @ (theta - self.anchor))

    def in_box(self, theta, slack=1e-12):
        return bool(np.all(theta >= self.lo - slack) and np.all(theta <= self.hi + slack))

    def is_feasible(self, theta):
        return self.in_box(theta) and self.lik.moment_gap(theta) <= self.bound

    def _step(self, theta, grad_dirs, hess, basis):
        reduced = basis.T @ hess @ basis
        g = grad_dirs
        try:
            step = np.linalg.solve(reduced + 1e-12 * np.trace(reduced) * np.eye(len(g)) / max(len(g), 1), g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(reduced, g, rcond=None)[0]
        return basis @ step

    def run(self, start) -> _Run:
        lik = self.lik
        theta = self.project(np.clip(start, self.lo, self.hi))
        if not self.in_box(theta):
            theta = self.project(np.clip(theta, self.lo, self.hi))
            if not self.in_box(theta, 1e-9):
                return _Run(theta, -np.inf, np.inf, False, False, 0)
            theta = np.clip(theta, self.lo, self.hi)
        value = lik.value(theta)
        converged = False
        stalled = False
        it = 0
        for it in range(1, self.max_iter + 1):
            feas = self.is_feasible(theta)
            sigma = asymptotic_covariance(None, lik.fam, system=lik.system(theta))
            hess = self.scale * sigma
            at_lo = theta <= self.lo + 1e-12
            at_hi = theta >= self.hi - 1e-12
            active = np.zeros(len(theta), dtype=bool)
            basis = self.basis
            for _ in range(len(theta) + 1):
                g = lik.gradient(theta, basis) if basis.shape[1] else np.zeros(0)
                step = self._step(theta, g, hess, basis) if basis.shape[1] else np.zeros(len(theta))
                push = (at_lo & (step < -1e-15)) | (at_hi & (step > 1e-15))
                if not np.any(push & ~active):
                    break
                active |= push
                extra = np.flatnonzero(active)
                basis = _restrict(self.basis, extra)
            gnorm = float(np.max(np.abs(g))) if g.size else 0.0
            small_step = float(np.max(np.abs(step))) <= 1e-10 * (1.0 + float(np.max(np.abs(theta))))
            if gnorm <= self.opt_tol and small_step:
                converged = True
                break
            # fraction to the box boundary
            with np.errstate(divide="ignore", invalid="ignore"):
                room = np.where(step > 0, (self.hi - theta) / step, np.where(step < 0, (self.lo - theta) / step, np.inf))
            amax = float(min(1.0, np.min(room))) if room.size else 1.0
            alpha = amax
            slope = float(g @ (basis.T @ step)) if g.size else 0.0
            accepted = False
            for _ in range(60):
                cand = np.clip(theta + alpha * step, self.lo, self.hi)
                cv = lik.value(cand)
                ok = cv >= value + 1e-4 * alpha * slope - 1e-12 * abs(value)
                if ok and feas and not self.is_feasible(cand):
                    ok = False
                if ok:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted or np.array_equal(cand, theta):
                if gnorm <= self.opt_tol:
                    converged = True
                elif feas and self.lik.moment_gap(theta) > 0.5 * self.bound:
                    stalled = True
                    converged = True
                break
            theta, value = cand, cv
        gap = lik.moment_gap(theta)
        return _Run(theta, value, gap, self.is_feasible(theta), converged, it, stalled)


def _restrict(basis: np.ndarray, fixed_idx) -> np.ndarray:
    if basis.shape[1] == 0:
        return basis
    rows = basis[fixed_idx, :]
    null = linalg.null_space(rows)
    if null.size == 0:
        return np.zeros((basis.shape[0], 0))
    out = basis @ null
    q, _ = np.linalg.qr(out)
    return q


def _grid(lo, hi, count: int | None, free: np.ndarray, seed: int = 0) -> list:
    nfree = len(free)
    centre = 0.5 * (lo + hi)
    if nfree == 0:
        return [centre]
    levels = [0.25, 0.5, 0.75]
    pts = []
    if nfree <= 4:
        for combo in itertools.product(levels, repeat=nfree):
            p = centre.copy()
            p[free] = lo[free] + (hi[free] - lo[free]) * np.asarray(combo)
            pts.append(p)
    else:
        u = qmc.Sobol(d=nfree, scramble=True, seed=seed).random(81)
        for row in u:
            p = centre.copy()
            p[free] = lo[free] + (hi[free] - lo[free]) * row
            pts.append(p)
    pts.sort(key=lambda p: (float(np.linalg.norm(p - centre)), tuple(p)))
    if count is not None:
        pts = pts[:count]
    return pts


def mle(spec, fam: PotentialFamily, w, cfg: MleConfig | None = None, *, fixed=None,
        extra_starts=()) -> EstimationResult:
    """Maximize ``log nu_t([w])`` over the box intersected with the moment constraint.

    ``fixed`` maps 0-based coordinates to values held constant during the search
    (the feasible set is unchanged, so the result is the restricted maximum).
    """
    _check_spec(spec, fam)
    cfg = cfg or MleConfig()
    lik = _Likelihood(fam, w, cfg.constrain_base)
    d = fam.d
    n = lik.n
    eta = cfg.eta_for(n)
    lo, hi = cfg.bounds(n, d)
    fixed = dict(fixed or {})
    fixed_idx = sorted(fixed)
    anchor = np.zeros(d)
    for i, v in fixed.items():
        if not 0 <= i < d:
            raise DimensionError(f"fixed coordinate {i} out of range")
        anchor[i] = float(v)
    null = null_directions(fam)
    basis = _subspace(d, null, fixed_idx)
    problem = _Problem(lik, lo, hi, eta, basis, anchor, cfg.opt_tol, cfg.max_iter)

    free = np.array([i for i in range(d) if i not in fixed], dtype=int)
    starts = []
    if cfg.warm_start and basis.shape[1]:
        warm = _mpe_core(lik, anchor, basis, cfg.opt_tol, 100, lo, hi)
        starts.append(np.clip(warm[0], lo, hi))
    for p in _grid(lo, hi, cfg.grid_starts, free):
        p = p.copy()
        p[fixed_idx] = anchor[fixed_idx]
        starts.append(p)
    for p in extra_starts:
        starts.append(as_theta(p, d))
    uniq, seen = [], set()
    for p in starts:
        key = tuple(np.round(p, 10))
        if key not in seen:
            seen.add(key)
            uniq.append(p)

    runs = [problem.run(s) for s in uniq]
    good = [r for r in runs if r.feasible]
    if not good:
        best = min(runs, key=lambda r: r.gap)
        raise InfeasibleError(
            f"no feasible parameter: smallest moment mismatch {best.gap:.4g} exceeds eta^2 = {eta ** 2:.4g}",
            closest=best.theta, violation=best.gap,
        )
    top = max(r.value for r in good)
    tol = 1e-9 * max(1.0, abs(top))
    ties = [r for r in good if r.value >= top - tol]
    best = min(ties, key=lambda r: (float(np.linalg.norm(r.theta)), -r.value))
    theta = best.theta
    box_active = bool(np.any(theta[free] <= lo[free] + 1e-10) or np.any(theta[free] >= hi[free] - 1e-10))
    moment_active = bool(best.stalled_on_moment or best.gap >= eta ** 2 * (1 - 1e-6))
    theta = theta.copy()
    theta.setflags(write=False)
    return EstimationResult(
        theta_hat=theta, loglik=best.value, converged=best.converged,
        constraint_active=box_active or moment_active, n_used=n, eta=eta,
        box_active=box_active, moment_active=moment_active, moment_gap=best.gap,
        null_dim=null.shape[1], iterations=sum(r.iterations for r in runs), starts=len(runs),
    )


def _mpe_core(lik: _Likelihood, anchor, basis, opt_tol, max_iter, lo=None, hi=None):
    fam = lik.fam
    alpha = lik.alpha

    def objective(t):
        return float(alpha[0] + t @ alpha[1:] - lik.system(t).pressure)

    theta = anchor.copy()
    val = objective(theta)
    gnorm = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        sys = lik.system(theta)
        grad = basis.T @ (alpha[1:] - sys.layout.edge_values[1:] @ sys.edge_mu)
        gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
        if gnorm <= opt_tol:
            converged = True
            break
        sigma = basis.T @ asymptotic_covariance(None, fam, system=sys) @ basis
        vals, vecs = np.linalg.eigh(sigma)
        keep = vals > 1e-12 * max(vals.max(), 1e-300)
        step = vecs[:, keep] @ ((vecs[:, keep].T @ grad) / vals[keep])
        if not np.any(keep):
            step = grad
        direction = basis @ step
        slope = float(grad @ step)
        t = 1.0
        while t > 1e-12:
            cand = theta + t * direction
            if lo is not None:
                cand = np.clip(cand, lo - 10 * (hi - lo), hi + 10 * (hi - lo))
            cv = objective(cand)
            if cv >= val + 1e-4 * t * slope - 1e-14 * abs(val):
                break
            t *= 0.5
        else:
            break
        theta, val = cand, cv
    return theta, val, it, converged, gnorm


def mpe(spec, fam: PotentialFamily, w, cfg: MleConfig | None = None) -> MpeResult:
    """Damped Newton on the concave objective ``<alpha_n, (1, t)> - P(F_t)``."""
    _check_spec(spec, fam)
    cfg = cfg or MleConfig()
    lik = _Likelihood(fam, w, cfg.constrain_base)
    null = null_directions(fam)
    basis = _subspace(fam.d, null, [])
    # Newton converges quadratically, so a much tighter stop than the MLE's costs little
    theta, val, it, conv, gnorm = _mpe_core(lik, np.zeros(fam.d), basis, min(cfg.opt_tol, 1e-11), cfg.max_iter)
    theta = theta.copy()
    theta.setflags(write=False)
    return MpeResult(theta, val, it, conv, null.shape[1], gnorm)


def newey_west_bandwidth(n: int) -> int:
    return int(np.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def moment_covariance(fam: PotentialFamily, w, anchor=None, bandwidth: int | None = None) -> np.ndarray:
    """Lag-window (Bartlett) estimate of the asymptotic covariance of the directions.

    The windows past the end of ``w`` are completed by ``anchor`` (default: the
    canonical continuation). The Bartlett weights keep the estimate positive
    semidefinite.
    """
    word = as_word(w, fam.spec)
    n = len(word)
    if n < fam.common_depth:
        raise DimensionError(f"word length {n} is shorter than the family depth {fam.common_depth}")
    vals = np.stack([window_values(f, word, anchor) for f in fam.directions])
    g = vals - vals.mean(axis=1, keepdims=True)
    g[np.ptp(vals, axis=1) == 0] = 0.0
    b = newey_west_bandwidth(n) if bandwidth is None else int(bandwidth)
    b = max(0, min(b, n - 1))
    sigma = g @ g.T / n
    for h in range(1, b + 1):
        gam = g[:, h:] @ g[:, :-h].T / n
        sigma += (1.0 - h / (b + 1.0)) * (gam + gam.T)
    return 0.5 * (sigma + sigma.T)


def pressure_root(spec, fam_d1: PotentialFamily, interval, tol: float = 1e-12) -> float:
    """Parameter ``t`` with ``P(f0 + t f1) = 0`` inside ``interval``."""
    _check_spec(spec, fam_d1)
    if fam_d1.d != 1:
        raise DimensionError("pressure_root needs a one-parameter family")
    lo, hi = (float(x) for x in interval)
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")

    def pr(t):
        return solve_gibbs(None, fam_d1, [t]).pressure

    def slope(t):
        sys = solve_gibbs(None, fam_d1, [t])
        return float(sys.layout.edge_values[1] @ sys.edge_mu)

    plo, phi_ = pr(lo), pr(hi)
    if plo == 0:
        return lo
    if phi_ == 0:
        return hi
    if np.sign(plo) == np.sign(phi_):
        raise ModelError(f"pressure has no sign change on [{lo}, {hi}] ({plo:.4g}, {phi_:.4g})")
    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo == 0 or s_hi == 0 or np.sign(s_lo) != np.sign(s_hi):
        raise ModelError("pressure is not monotone on the interval (derivative changes sign)")
    root = optimize.brentq(pr, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(pr(root)) > tol:
        raise ConvergenceError(f"pressure root residual {abs(pr(root)):.3e} exceeds tol {tol:g}")
    return float(root)
