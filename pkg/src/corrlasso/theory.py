"""Asymptotic MSE, support recovery, EER and cosine similarity from a saddle point.

Throughout, the effective scalar channel is ``X0 + c Z`` followed by soft
thresholding at ``t`` with ``c = a*b/x`` and ``t = lam*a/x`` evaluated at the
saddle point ``(a, b, x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import CGMTEngine, ScalarProblem, SaddlePoint, SolverOptions
from .kernels import gauss_pdf, gauss_q, normal_expectation, soft_threshold
from .priors import SparsePrior, QUAD_NODES

EER_ROUTE_TOL = 1e-10
COSINE_ROUTE_TOL = 1e-8


class UndefinedMetricError(ValueError):
    """The metric has no value at this point (e.g. a zero estimate)."""


@dataclass(frozen=True)
class TheoryReport:
    mse: float
    phi_on: float
    phi_off: float
    eer: float
    cosine: float
    xi: float
    saddle: SaddlePoint

    def metrics(self) -> dict[str, float]:
        return {"mse": self.mse, "phi_on": self.phi_on, "phi_off": self.phi_off,
                "eer": self.eer, "cosine": self.cosine}


def channel(saddle: SaddlePoint, lam: float) -> tuple[float, float]:
    """Noise level ``c`` and threshold ``t`` of the scalar channel."""
    a, b, x = saddle.alpha_star, saddle.beta_star, saddle.chi_star
    return a * b / x, lam * a / x


def _require_converged(saddle: SaddlePoint):
    if not saddle.converged:
        raise ValueError("saddle point did not converge; refusing to derive metrics")


def predict_mse(saddle: SaddlePoint) -> float:
    _require_converged(saddle)
    return saddle.alpha_star


# ---- support recovery ---------------------------------------------------

def _prob_detect(value: float, c: float, t: float, xi: float) -> float:
    # P(|eta(value + cZ; t)| >= xi) by quadrature of the indicator, cut at its jumps
    hi = (t + xi - value) / c
    lo = (-t - xi - value) / c

    def indicator(z):
        return (np.abs(soft_threshold(value + c * z, t)) >= xi).astype(float)

    return normal_expectation(indicator, (lo, hi), n_nodes=QUAD_NODES)


def support_quadrature(saddle: SaddlePoint, prior: SparsePrior, lam: float,
                       xi: float) -> tuple[float, float]:
    """``(phi_on, phi_off)`` by quadrature: the on-support law for phi_on and
    the pure-noise channel for phi_off."""
    c, t = channel(saddle, lam)
    on = sum(w * _prob_detect(v, c, t, xi) for v, w in prior.conditional_atoms)
    off = 1.0 - _prob_detect(0.0, c, t, xi)
    return on, off


def support_closed_form(saddle: SaddlePoint, lam: float, xi: float) -> tuple[float, float]:
    """Sparse-Bernoulli closed forms for ``(phi_on, phi_off)``."""
    a, b, x = saddle.alpha_star, saddle.beta_star, saddle.chi_star
    on = gauss_q(lam / b + x * (xi + 1) / (a * b)) + gauss_q(lam / b + x * (xi - 1) / (a * b))
    off = 1.0 - 2.0 * gauss_q(lam / b + x * xi / (a * b))
    return float(on), float(off)


def predict_support(saddle: SaddlePoint, prior: SparsePrior, lam: float,
                    xi: float) -> tuple[float, float]:
    _require_converged(saddle)
    if xi <= 0:
        raise ValueError(f"xi must be positive, got {xi}")
    if prior.kind == "sparse_bernoulli":
        return support_closed_form(saddle, lam, xi)
    return support_quadrature(saddle, prior, lam, xi)


def eer_closed_form(saddle: SaddlePoint, lam: float, xi: float) -> float:
    """Three-term sparse-Bernoulli EER expression."""
    a, b, x = saddle.alpha_star, saddle.beta_star, saddle.chi_star
    return float(gauss_q(x * (1 - xi) / (a * b) - lam / b)
                 - gauss_q(x * (1 + xi) / (a * b) + lam / b)
                 + 2.0 * gauss_q(x * xi / (a * b) + lam / b))


def predict_eer(saddle: SaddlePoint, prior: SparsePrior, lam: float, xi: float) -> float:
    """``2 - phi_on - phi_off``; for sparse-Bernoulli also checks the direct
    three-term expression and raises ``ArithmeticError`` on disagreement."""
    on, off = predict_support(saddle, prior, lam, xi)
    eer = 2.0 - on - off
    if prior.kind == "sparse_bernoulli":
        direct = eer_closed_form(saddle, lam, xi)
        if abs(direct - eer) > EER_ROUTE_TOL:
            raise ArithmeticError(f"EER routes disagree: {eer!r} vs {direct!r}")
    return eer


# ---- cosine similarity --------------------------------------------------

def cosine_terms_closed_form(saddle: SaddlePoint, lam: float,
                             kappa: float) -> tuple[float, float, float]:
    """``(I0, I1, I2)`` for the sparse-Bernoulli prior.

    ``I0 = E[eta X0]``, ``I1 + I2 = E[eta^2]`` split into on- and off-support
    contributions.
    """
    a, b, x = saddle.alpha_star, saddle.beta_star, saddle.chi_star
    s = x / (a * b)
    r = lam / b
    i0 = (kappa / x) * (a * b * (gauss_pdf(s - r) - gauss_pdf(s + r))
                        + (x - lam * a) * gauss_q(r - s)
                        + (x + lam * a) * gauss_q(r + s))
    # phi(r + s) * exp(2 lam x / (a b^2)) == phi(s - r); the product is formed in
    # log space so the exponential cannot overflow
    u = r + s
    phi_exp = np.exp(-0.5 * u * u + 2 * lam * x / (a * b * b)) / np.sqrt(2 * np.pi)
    i1 = (kappa / x ** 2) * ((a * a * b * b + (lam * a - x) ** 2) * gauss_q(r - s)
                             + (a * a * b * b + (lam * a + x) ** 2) * gauss_q(r + s)
                             - a * b * ((lam * a - x) * phi_exp + (lam * a + x) * gauss_pdf(u)))
    i2 = (2 * (1 - kappa) * a * a / x ** 2) * ((lam * lam + b * b) * gauss_q(r)
                                                - lam * b * gauss_pdf(r))
    return float(i0), float(i1), float(i2)


def cosine_closed_form(saddle: SaddlePoint, lam: float, kappa: float) -> float:
    i0, i1, i2 = cosine_terms_closed_form(saddle, lam, kappa)
    den = kappa * (i1 + i2)
    if not den > 0:
        raise UndefinedMetricError("estimate is identically zero; cosine undefined")
    return i0 / np.sqrt(den)


def cosine_quadrature(saddle: SaddlePoint, prior: SparsePrior, lam: float) -> float:
    """``E[eta X0] / sqrt(E[X0^2] E[eta^2])`` by quadrature over the full prior."""
    c, t = channel(saddle, lam)
    num = 0.0
    sq = 0.0
    for v, w in prior.full_atoms:
        kinks = ((t - v) / c, (-t - v) / c)
        eta = lambda z, v=v: soft_threshold(v + c * z, t)
        if v != 0.0:
            num += w * v * normal_expectation(eta, kinks, n_nodes=QUAD_NODES)
        sq += w * normal_expectation(lambda z, eta=eta: eta(z) ** 2, kinks, n_nodes=QUAD_NODES)
    den = prior.second_moment * sq
    if not den > 0:
        raise UndefinedMetricError("estimate is identically zero; cosine undefined")
    return num / np.sqrt(den)


def predict_cosine(saddle: SaddlePoint, prior: SparsePrior, lam: float,
                   kappa: float | None = None) -> float:
    _require_converged(saddle)
    kappa = prior.kappa if kappa is None else kappa
    if not 0 < kappa < 1:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    quad = cosine_quadrature(saddle, prior, lam)
    if prior.kind != "sparse_bernoulli":
        return quad
    closed = cosine_closed_form(saddle, lam, kappa)
    if abs(closed - quad) > COSINE_ROUTE_TOL:
        raise ArithmeticError(f"cosine routes disagree: {closed!r} vs {quad!r}")
    return closed


def predict(saddle: SaddlePoint, prior: SparsePrior, lam: float, xi: float) -> TheoryReport:
    on, off = predict_support(saddle, prior, lam, xi)
    return TheoryReport(mse=predict_mse(saddle), phi_on=on, phi_off=off,
                        eer=predict_eer(saddle, prior, lam, xi),
                        cosine=predict_cosine(saddle, prior, lam),
                        xi=xi, saddle=saddle)


def theory_report(problem: ScalarProblem, xi: float,
                  opts: SolverOptions | None = None) -> TheoryReport:
    """Solve the saddle problem and derive every prediction."""
    saddle = CGMTEngine(problem, opts).solve_saddle()
    return predict(saddle, problem.prior, problem.lam, xi)
