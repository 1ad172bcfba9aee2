"""Scalar min-max problem whose saddle point predicts the LASSO error.

The objective is

    D(a, b, x) = (1/n) sum_j (g_j a + s2) / (1 - g_j mu)
                 - (b^2 mu / 4 + x / 2 + a b^2 / (2 x))
                 + (x / a) E[e(X0 + (a b / x) Z; lam a / x)]

with ``mu = mu(a, b)`` the root of the trace equation below, and the
prediction is ``MSE -> argmin_a max_b sup_x D``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .priors import SparsePrior, expectation_excess

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class ConvergenceError(RuntimeError):
    """A numerical search stopped before meeting its tolerance.

    ``best`` carries the last iterate when one exists.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class ScalarProblem:
    eigenvalues: np.ndarray
    n: int
    sigma2: float
    lam: float
    prior: SparsePrior

    def __post_init__(self):
        gam = np.asarray(self.eigenvalues, dtype=float)
        if gam.ndim != 1 or gam.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-D array")
        if np.any(gam < 0):
            raise ValueError("eigenvalues must be nonnegative")
        if gam.max() <= 0:
            raise ValueError("correlation spectrum is identically zero")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        gam = gam.copy()
        gam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", gam)

    @property
    def m(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def delta(self) -> float:
        return self.m / self.n

    def with_lambda(self, lam: float) -> "ScalarProblem":
        return replace(self, lam=lam)


@dataclass(frozen=True)
class SolverOptions:
    mu_tol: float = 1e-12
    mu_max_iter: int = 500
    search_tol: float = 1e-9  # golden-section width, in log of the variable
    max_doublings: int = 60
    stationarity_tol: float = 1e-6
    newton_tol: float = 1e-11
    newton_max_iter: int = 60
    fd_step: float = 1e-6  # relative step for gradient checks
    hessian_step: float = 1e-4
    alpha0: Optional[float] = None  # defaults to E[X0^2]
    beta0: float = 1.0
    chi0: float = 1.0


@dataclass(frozen=True)
class SaddlePoint:
    alpha_star: float
    beta_star: float
    chi_star: float
    mu_star: float
    objective_value: float
    converged: bool
    iterations: int
    gradient: tuple[float, float, float] = field(default=(np.nan,) * 3)
    curvature: tuple[float, float, float] = field(default=(np.nan,) * 3)
    reduced_alpha_curvature: float = np.nan

    @property
    def point(self) -> np.ndarray:
        return np.array([self.alpha_star, self.beta_star, self.chi_star])


def _golden_max(f: Callable[[float], float], u0: float, tol: float,
                max_doublings: int) -> tuple[float, float, int]:
    """Maximize a unimodal ``f`` over the real line starting near ``u0``.

    ``u`` is the log of the search variable, so each expansion move of
    ``log 2`` doubles (or halves) the variable. The bracket slides until its
    middle point beats both ends, then golden-section search shrinks it.
    Returns ``(argmax, max, evaluations)``.
    """
    step = math.log(2.0)
    a, b, c = u0 - step, u0, u0 + step
    fa, fb, fc = f(a), f(b), f(c)
    evals = 3
    doublings = 0
    while not (fb >= fa and fb >= fc):
        if doublings >= max_doublings:
            raise ConvergenceError("bracket expansion exhausted", best=b)
        if fa > fc:
            a, b, c = a - step, a, b
            fb, fc = fa, fb
            fa = f(a)
        else:
            a, b, c = b, c, c + step
            fa, fb = fb, fc
            fc = f(c)
        evals += 1
        doublings += 1

    x1 = c - INV_PHI * (c - a)
    x2 = a + INV_PHI * (c - a)
    f1, f2 = f(x1), f(x2)
    evals += 2
    while c - a > tol:
        if f1 >= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - INV_PHI * (c - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (c - a)
            f2 = f(x2)
        evals += 1
    if f1 >= f2:
        return x1, f1, evals
    return x2, f2, evals


class CGMTEngine:
    """Evaluates and solves the scalar min-max problem for one configuration."""

    def __init__(self, problem: ScalarProblem, opts: SolverOptions | None = None):
        self.problem = problem
        self.opts = opts or SolverOptions()
        gam = problem.eigenvalues
        self._gam = gam[gam > 0]
        self._n_zero = int(np.sum(gam == 0))
        self._gmax = float(gam.max())
        self._mu_cache: dict[tuple[float, float], float] = {}

    # ---- trace equation -------------------------------------------------

    def mu_residual(self, alpha: float, beta: float, mu: float) -> float:
        """(1/n) sum_j g_j (g_j a + s2) / (1 - g_j mu)^2 - b^2 / 4.

        This is the trace equation with the 1/g_j denominators cleared, so
        zero eigenvalues drop out.
        """
        g = self._gam
        den = 1.0 - g * mu
        return float(np.sum(g * (g * alpha + self.problem.sigma2) / (den * den)) / self.problem.n
                     - 0.25 * beta * beta)

    def solve_mu(self, alpha: float, beta: float) -> float:
        """Unique root of the trace equation on ``(-inf, 1/g_max)``."""
        if alpha <= 0 or beta <= 0:
            raise ValueError(f"alpha and beta must be positive, got {alpha}, {beta}")
        key = (alpha, beta)
        hit = self._mu_cache.get(key)
        if hit is not None:
            return hit
        mu = self._solve_mu(alpha, beta)
        if len(self._mu_cache) > 200_000:
            self._mu_cache.clear()
        self._mu_cache[key] = mu
        return mu

    def _solve_mu(self, alpha: float, beta: float) -> float:
        g, n, s2 = self._gam, self.problem.n, self.problem.sigma2
        num = g * (g * alpha + s2)
        target = 0.25 * beta * beta
        pole = 1.0 / self._gmax
        # work in d = 1 - g_max * mu > 0, so the pole sits at d = 0
        r = g / self._gmax

        def resid(d):
            den = 1.0 - r + r * d
            return float(np.sum(num / (den * den)) / n - target)

        # bracket: resid is decreasing in d, +inf at 0+, -target as d -> inf
        hi = 1.0
        while resid(hi) > 0:
            hi *= 2.0
            if hi > 1e300:
                raise ConvergenceError("could not bracket mu from below")
        lo = hi
        while resid(lo) <= 0:
            lo *= 0.5
            if lo < 1e-300:
                raise ConvergenceError("could not bracket mu near the pole")
        # lo: resid > 0 (mu above root), hi: resid <= 0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if resid(mid) > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-3 * hi:
                break
        # Newton in mu from the side where the residual is positive; the
        # residual is increasing and convex in mu, so iterates decrease
        # monotonically to the root without crossing the pole.
        mu = (1.0 - lo) * pole
        tol = self.opts.mu_tol * target
        for _ in range(self.opts.mu_max_iter):
            den = 1.0 - g * mu
            f = float(np.sum(num / (den * den)) / n - target)
            if abs(f) <= tol:
                return mu
            fp = float(np.sum(2.0 * g * num / (den * den * den)) / n)
            new = mu - f / fp
            if not new < mu and f > 0:
                return mu
            if new >= pole:
                new = 0.5 * (mu + pole)
            if new == mu:
                return mu
            mu = new
        raise ConvergenceError(f"mu iteration did not converge at alpha={alpha}, beta={beta}", best=mu)

    # ---- objective ------------------------------------------------------

    def trace_term(self, alpha: float, beta: float) -> tuple[float, float]:
        """``(1/n) sum_j (g_j a + s2)/(1 - g_j mu) - b^2 mu / 4`` and ``mu``."""
        mu = self.solve_mu(alpha, beta)
        g = self._gam
        s2 = self.problem.sigma2
        total = float(np.sum((g * alpha + s2) / (1.0 - g * mu)))
        total += self._n_zero * s2  # g_j = 0 terms reduce to s2
        return total / self.problem.n - 0.25 * beta * beta * mu, mu

    def chi_term(self, alpha: float, beta: float, chi: float) -> float:
        """Part of D that depends on ``chi``.

        Evaluated as ``-x/2 + (x/(2a)) (E[X0^2] - E[(|X0 + cZ| - t)_+^2])``,
        which equals ``-x/2 - a b^2/(2x) + (x/a) E[e(X0 + cZ; t)]`` exactly
        but does not cancel two large terms when ``x`` is small.
        """
        prior = self.problem.prior
        c = alpha * beta / chi
        t = self.problem.lam * alpha / chi
        excess = expectation_excess(prior, c, t)
        return -0.5 * chi + (chi / (2.0 * alpha)) * (prior.second_moment - excess)

    def objective(self, alpha: float, beta: float, chi: float) -> float:
        if alpha <= 0 or beta <= 0 or chi <= 0:
            raise ValueError(f"D is defined for positive arguments, got {alpha}, {beta}, {chi}")
        tr, _ = self.trace_term(alpha, beta)
        return tr + self.chi_term(alpha, beta, chi)

    def gradient(self, point, rel_step: float | None = None) -> np.ndarray:
        """Central finite-difference gradient with relative steps."""
        h_rel = self.opts.fd_step if rel_step is None else rel_step
        p = np.asarray(point, dtype=float)
        grad = np.empty(3)
        for i in range(3):
            h = h_rel * p[i]
            up, dn = p.copy(), p.copy()
            up[i] += h
            dn[i] -= h
            grad[i] = (self.objective(*up) - self.objective(*dn)) / (up[i] - dn[i])
        return grad

    def hessian(self, point, rel_step: float | None = None) -> np.ndarray:
        h_rel = self.opts.hessian_step if rel_step is None else rel_step
        p = np.asarray(point, dtype=float)
        H = np.empty((3, 3))
        f0 = self.objective(*p)
        h = h_rel * p
        for i in range(3):
            e_i = np.zeros(3)
            e_i[i] = h[i]
            H[i, i] = (self.objective(*(p + e_i)) - 2 * f0 + self.objective(*(p - e_i))) / h[i] ** 2
            for j in range(i + 1, 3):
                e_j = np.zeros(3)
                e_j[j] = h[j]
                val = (self.objective(*(p + e_i + e_j)) - self.objective(*(p + e_i - e_j))
                       - self.objective(*(p - e_i + e_j)) + self.objective(*(p - e_i - e_j)))
                H[i, j] = H[j, i] = val / (4 * h[i] * h[j])
        return H

    # ---- nested search ----------------------------------------------------

    def sup_chi(self, alpha: float, beta: float, chi0: float | None = None) -> tuple[float, float]:
        """``(argmax_chi D, max_chi D)`` at fixed ``(alpha, beta)``."""
        tr, _ = self.trace_term(alpha, beta)
        u0 = math.log(self.opts.chi0 if chi0 is None else chi0)
        u, val, _ = _golden_max(lambda u: self.chi_term(alpha, beta, math.exp(u)),
                                u0, self.opts.search_tol, self.opts.max_doublings)
        return math.exp(u), tr + val

    def max_beta(self, alpha: float) -> tuple[float, float, float]:
        """``(beta, chi, value)`` maximizing D over ``beta`` and ``chi``."""
        chi_hint = [self.opts.chi0]

        def inner(u):
            chi, val = self.sup_chi(alpha, math.exp(u), chi_hint[0])
            chi_hint[0] = chi
            return val

        u, val, _ = _golden_max(inner, math.log(self.opts.beta0), self.opts.search_tol,
                                self.opts.max_doublings)
        beta = math.exp(u)
        chi, val = self.sup_chi(alpha, beta, chi_hint[0])
        return beta, chi, val

    def nested_search(self) -> tuple[np.ndarray, int]:
        alpha0 = self.opts.alpha0 or self.problem.prior.second_moment

        def outer(u):
            return -self.max_beta(math.exp(u))[2]

        u, _, evals = _golden_max(outer, math.log(alpha0), self.opts.search_tol,
                                  self.opts.max_doublings)
        alpha = math.exp(u)
        beta, chi, _ = self.max_beta(alpha)
        return np.array([alpha, beta, chi]), evals

    def newton_polish(self, point: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
        """Damped Newton on grad D = 0, minimizing ||grad D|| along the step."""
        p = point.copy()
        g = self.gradient(p)
        it = 0
        for it in range(1, self.opts.newton_max_iter + 1):
            if np.max(np.abs(g)) <= self.opts.newton_tol:
                break
            H = self.hessian(p)
            try:
                step = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            improved = False
            while t > 1e-6:
                trial = p + t * step
                if np.all(trial > 0):
                    gt = self.gradient(trial)
                    if np.linalg.norm(gt) < np.linalg.norm(g):
                        p, g = trial, gt
                        improved = True
                        break
                t *= 0.5
            if not improved:
                break
        return p, g, it

    def solve_saddle(self) -> SaddlePoint:
        """Locate the saddle point and certify it locally.

        Raises ``ConvergenceError`` (with the best ``SaddlePoint`` attached)
        when the gradient check or the curvature signature fails.
        """
        start, evals = self.nested_search()
        point, grad, iters = self.newton_polish(start)
        if np.any(point <= 0):
            raise ConvergenceError(f"saddle left the positive orthant: {point}")
        alpha, beta, chi = (float(v) for v in point)
        _, mu = self.trace_term(alpha, beta)
        H = self.hessian(point)
        y = H[1:, 1:]
        reduced = H[0, 0] - H[0, 1:] @ np.linalg.solve(y, H[1:, 0])
        fd_grad = self.gradient(point)
        ok = bool(np.max(np.abs(fd_grad)) <= self.opts.stationarity_tol
                  and H[1, 1] <= 0 and H[2, 2] <= 0 and reduced >= 0
                  and mu < 1.0 / self._gmax)
        sp = SaddlePoint(alpha_star=alpha, beta_star=beta, chi_star=chi, mu_star=mu,
                         objective_value=self.objective(alpha, beta, chi), converged=ok,
                         iterations=evals + iters,
                         gradient=tuple(float(v) for v in fd_grad),
                         curvature=(float(H[0, 0]), float(H[1, 1]), float(H[2, 2])),
                         reduced_alpha_curvature=float(reduced))
        if not ok:
            raise ConvergenceError(f"saddle certification failed at {point} "
                                   f"(grad {fd_grad}, curvature {sp.curvature}, reduced {reduced})",
                                   best=sp)
        log.debug("saddle at lam=%g: %s", self.problem.lam, sp)
        return sp


def solve_mu(problem: ScalarProblem, alpha: float, beta: float) -> float:
    return CGMTEngine(problem).solve_mu(alpha, beta)


def objective_D(problem: ScalarProblem, alpha: float, beta: float, chi: float) -> float:
    return CGMTEngine(problem).objective(alpha, beta, chi)


def solve_saddle(problem: ScalarProblem, opts: SolverOptions | None = None) -> SaddlePoint:
    return CGMTEngine(problem, opts).solve_saddle()
