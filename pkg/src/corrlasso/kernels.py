"""Scalar special functions shared by the theory and simulation sides."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.polynomial.legendre import leggauss
from scipy import special

SQRT2 = np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _check_threshold(b):
    if np.any(np.asarray(b) <= 0):
        raise ValueError(f"threshold must be positive, got {b}")


@dataclass(frozen=True)
class PiecewiseEval:
    value: float
    branch: str  # "upper", "middle" or "lower"


def cost_e(a, b):
    """Piecewise-quadratic cost kernel e(a; b).

    ``b*a - b**2/2`` above ``b``, ``a**2/2`` on ``|a| <= b`` and
    ``-b*a - b**2/2`` below ``-b``. Works elementwise on arrays.
    """
    _check_threshold(b)
    a = np.asarray(a, dtype=float)
    out = np.where(a > b, b * a - 0.5 * b * b,
                   np.where(a < -b, -b * a - 0.5 * b * b, 0.5 * a * a))
    return out[()] if out.ndim == 0 else out


def cost_e_eval(a: float, b: float) -> PiecewiseEval:
    """Scalar ``cost_e`` that also reports which branch was taken."""
    _check_threshold(b)
    if a > b:
        return PiecewiseEval(b * a - 0.5 * b * b, "upper")
    if a < -b:
        return PiecewiseEval(-b * a - 0.5 * b * b, "lower")
    return PiecewiseEval(0.5 * a * a, "middle")


def soft_threshold(a, b):
    """Soft-thresholding map ``sign(a) * max(|a| - b, 0)``."""
    _check_threshold(b)
    a = np.asarray(a, dtype=float)
    out = np.sign(a) * np.maximum(np.abs(a) - b, 0.0)
    return out[()] if out.ndim == 0 else out


def gauss_pdf(x):
    x = np.asarray(x, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out[()] if out.ndim == 0 else out


def gauss_q(x):
    """Standard normal upper tail, evaluated through ``erfc`` so deep tails
    keep full relative precision."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / SQRT2)


def erf(x):
    return special.erf(x)


@lru_cache(maxsize=None)
def _hermite(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermegauss(n_nodes)
    w = w / np.sqrt(2.0 * np.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def hermite_nodes(n_nodes: int) -> list[tuple[float, float]]:
    """Gauss-Hermite rule for E[f(Z)], Z ~ N(0, 1) (probabilists' weights).

    Returned weights sum to one.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be at least 1")
    x, w = _hermite(int(n_nodes))
    return [(float(xi), float(wi)) for xi, wi in zip(x, w)]


@lru_cache(maxsize=None)
def _legendre(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n_nodes)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def normal_expectation(func: Callable[[np.ndarray], np.ndarray],
                       breakpoints: Iterable[float] = (),
                       n_nodes: int = 200, span: float = 14.0) -> float:
    """E[func(Z)] for Z ~ N(0, 1) by composite Gauss-Legendre quadrature.

    The line ``[-span, span]`` is cut at ``breakpoints`` (kinks or jumps of
    ``func``) so each panel integrates a smooth function; mass outside
    ``|z| > 14`` is below 1e-44 and is dropped. ``func`` must accept arrays.
    """
    cuts = sorted(float(b) for b in breakpoints if -span < b < span)
    edges = np.array([-span, *cuts, span])
    x, w = _legendre(n_nodes)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    z = (lo + hi) * 0.5 + half * x[None, :]
    vals = func(z.ravel()).reshape(z.shape) * gauss_pdf(z)
    return float(np.sum(half * w[None, :] * vals))
