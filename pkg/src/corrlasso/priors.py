"""Sparse signal priors: sampling and the scalar expectations of the cost kernel."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import math

import numpy as np

from .kernels import cost_e, erf, gauss_pdf, gauss_q, normal_expectation

QUAD_NODES = 200
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass(frozen=True)
class SparsePrior:
    """``(1 - kappa) * delta_0 + kappa * P_atoms``.

    ``atoms`` lists ``(value, weight)`` pairs of the on-support law; the
    sparse-Bernoulli prior is the single atom ``(1.0, 1.0)``.
    """

    kappa: float
    kind: str = "sparse_bernoulli"
    atoms: tuple[tuple[float, float], ...] = ((1.0, 1.0),)

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.kind == "sparse_bernoulli":
            if tuple(self.atoms) != ((1.0, 1.0),):
                raise ValueError("sparse_bernoulli prior takes no atoms")
        elif self.kind == "sparse_generic":
            if not self.atoms:
                raise ValueError("sparse_generic prior needs at least one atom")
            weights = np.array([w for _, w in self.atoms], dtype=float)
            if np.any(weights <= 0):
                raise ValueError("atom weights must be positive")
            if abs(weights.sum() - 1.0) > 1e-12:
                raise ValueError(f"atom weights must sum to 1, got {weights.sum()}")
        else:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        object.__setattr__(self, "atoms",
                           tuple((float(v), float(w)) for v, w in self.atoms))

    @classmethod
    def bernoulli(cls, kappa: float) -> "SparsePrior":
        return cls(kappa=kappa)

    @classmethod
    def generic(cls, kappa: float, atoms: Sequence[tuple[float, float]]) -> "SparsePrior":
        return cls(kappa=kappa, kind="sparse_generic", atoms=tuple(map(tuple, atoms)))

    @property
    def conditional_atoms(self) -> tuple[tuple[float, float], ...]:
        """Law of X0 given that the entry is on the support."""
        return self.atoms

    @property
    def full_atoms(self) -> tuple[tuple[float, float], ...]:
        """Law of X0 including the point mass at zero."""
        return ((0.0, 1.0 - self.kappa),) + tuple(
            (v, self.kappa * w) for v, w in self.atoms)

    @property
    def second_moment(self) -> float:
        return self.kappa * sum(w * v * v for v, w in self.atoms)


@dataclass(frozen=True)
class SignalVector:
    entries: np.ndarray
    support: np.ndarray  # sorted indices

    @property
    def k(self) -> int:
        return int(self.support.size)


def sample_signal(prior: SparsePrior, n: int, rng_seed) -> SignalVector:
    """Draw a k-sparse vector with ``k = round(kappa * n)``.

    The support is a uniformly random k-subset and on-support values are iid
    from the atoms. ``rng_seed`` may be an int or a ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    k = round_half_up(prior.kappa * n)
    if k < 1 or k >= n:
        raise ValueError(f"kappa*n = {prior.kappa * n} rounds to k={k}; need 1 <= k < n")
    rng = np.random.default_rng(rng_seed)
    support = np.sort(rng.choice(n, size=k, replace=False))
    values = np.array([v for v, _ in prior.atoms])
    weights = np.array([w for _, w in prior.atoms])
    x = np.zeros(n)
    x[support] = rng.choice(values, size=k, p=weights)
    return SignalVector(entries=x, support=support)


def _check_ct(c, t):
    if c <= 0 or t <= 0:
        raise ValueError(f"c and t must be positive, got c={c}, t={t}")


def bernoulli_scaled_expectation(kappa, alpha, beta, chi, lam):
    """``(chi/alpha) * E[e(X0 + (alpha*beta/chi) Z; lam*alpha/chi)]`` for the
    sparse-Bernoulli prior, in closed form."""
    a, b, x, lm, k = alpha, beta, chi, lam, kappa
    r = lm / b
    s = x / (a * b)
    zero_part = (a * (1 - k) / x) * (b * b / 2 + b * lm * gauss_pdf(r)
                                      - (lm * lm + b * b) * gauss_q(r))
    # phi((a*lm + x)/(a*b)) * exp(2*lm*x/(a*b^2)), combined in log space to avoid overflow
    u = (a * lm + x) / (a * b)
    phi_exp = np.exp(-0.5 * u * u + 2 * lm * x / (a * b * b)) / np.sqrt(2 * np.pi)
    one_part = (k * (lm - a * lm * lm / (2 * x)) * gauss_q(r - s)
                - k * (lm + a * lm * lm / (2 * x)) * gauss_q(r + s)
                + (a * b * lm * k / x) * (gauss_pdf(r + s) + gauss_pdf(r - s))
                - (k * b / (2 * x)) * ((a * lm - x) * gauss_pdf(u) + (a * lm + x) * phi_exp)
                + (k / 4) * (a * b * b / x + x / a)
                * (erf((a * lm + x) / (np.sqrt(2) * a * b)) + erf((a * lm - x) / (np.sqrt(2) * a * b))))
    return float(zero_part + one_part)


def _atom_excess(value: float, c: float, t: float) -> float:
    # E[(|W| - t)_+^2] for W ~ N(value, c^2): one Gaussian partial moment per tail
    total = 0.0
    for d in ((value - t) / c, (-value - t) / c):
        cdf = 0.5 * math.erfc(-d / _SQRT2)
        pdf = math.exp(-0.5 * d * d) * _INV_SQRT_2PI
        total += (1.0 + d * d) * cdf + d * pdf
    return c * c * total


def expectation_excess(prior: SparsePrior, c: float, t: float) -> float:
    """``E[(|X0 + cZ| - t)_+^2]`` over the full prior, in closed form.

    Since ``e(a; t) = a^2/2 - (|a| - t)_+^2 / 2``, this gives
    ``E[e] = (E[X0^2] + c^2 - excess) / 2`` without the cancellation that
    direct evaluation of ``E[e]`` suffers once ``c`` is large.
    """
    _check_ct(c, t)
    return sum(w * _atom_excess(v, c, t) for v, w in prior.full_atoms)


def _atom_expectation(value: float, c: float, t: float, n_nodes: int) -> float:
    kinks = ((t - value) / c, (-t - value) / c)
    return normal_expectation(lambda z: cost_e(value + c * z, t), kinks, n_nodes=n_nodes)


def expectation_e_quadrature(prior: SparsePrior, c: float, t: float,
                             n_nodes: int = QUAD_NODES) -> float:
    """``E[e(X0 + cZ; t)]`` over the full prior, by panel quadrature per atom."""
    _check_ct(c, t)
    return sum(w * _atom_expectation(v, c, t, n_nodes) for v, w in prior.full_atoms)


def expectation_e(prior: SparsePrior, c: float, t: float) -> float:
    """``E[e(X0 + cZ; t)]`` with X0 drawn from the full prior (zero mass
    included) and Z standard normal.

    Closed form for sparse-Bernoulli, quadrature otherwise.
    """
    _check_ct(c, t)
    if prior.kind == "sparse_bernoulli":
        # the closed form is parametrized by (alpha, beta, chi, lam); alpha = chi = 1
        # makes c = beta and t = lam
        return bernoulli_scaled_expectation(prior.kappa, 1.0, c, 1.0, t)
    return expectation_e_quadrature(prior, c, t)
