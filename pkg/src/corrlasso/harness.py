"""Monte Carlo trials on correlated Gaussian designs and theory/simulation sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import ProblemConfig
from .correlation import CorrelationSpectrum
from .engine import ConvergenceError, ScalarProblem, SolverOptions
from .priors import SignalVector, sample_signal
from .solver import LassoInstance, LassoOptions, solve_lasso
from .theory import TheoryReport, theory_report

log = logging.getLogger(__name__)

METRICS = ("mse", "phi_on", "phi_off", "eer", "cosine")
EER_IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class TrialOutcome:
    mse: float
    phi_on: float
    phi_off: float
    eer: float
    cosine: float  # nan when the estimate is identically zero
    solver_converged: bool
    seed: int
    ties: int = 0  # entries with |x_hat_i| == xi exactly
    estimate: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def metrics(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in METRICS}


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    std: float
    stderr: float
    count: int


@dataclass(frozen=True)
class EmpiricalReport:
    summaries: dict[str, MetricSummary]
    trial_count: int
    nonconverged_count: int
    settings: dict
    tie_count: int = 0

    def __getitem__(self, metric: str) -> MetricSummary:
        return self.summaries[metric]


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    empirical: Optional[EmpiricalReport]
    theory: Optional[TheoryReport]
    error: Optional[str] = None


def empirical_metrics(x_hat, x0: SignalVector, xi: float):
    """``(mse, phi_on, phi_off, eer, cosine)`` of one estimate.

    ``cosine`` is ``None`` when ``x_hat`` is identically zero. EER is counted
    from its own strict-inequality definition.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    x = x0.entries
    if x_hat.shape != x.shape:
        raise ValueError(f"length mismatch: {x_hat.shape} vs {x.shape}")
    if x0.k == 0:
        raise ValueError("true signal has empty support")
    if not xi > 0:
        raise ValueError(f"xi must be positive, got {xi}")
    on = np.zeros(x.size, dtype=bool)
    on[x0.support] = True
    mag = np.abs(x_hat)
    mse = float(np.mean((x_hat - x) ** 2))
    phi_on = float(np.mean(mag[on] >= xi))
    phi_off = float(np.mean(mag[~on] <= xi))
    eer = float(np.mean(mag[on] < xi) + np.mean(mag[~on] > xi))
    norm_hat = np.linalg.norm(x_hat)
    cosine = None if norm_hat == 0 else float(x_hat @ x / (norm_hat * np.linalg.norm(x)))
    return mse, phi_on, phi_off, eer, cosine


def _draw_instance(config: ProblemConfig, spectrum: CorrelationSpectrum, seed: int):
    rng = np.random.default_rng(seed)
    n, m = config.n, config.m
    H = rng.standard_normal((m, n)) / np.sqrt(n)  # N(0, 1/n) entries
    A = spectrum.sqrt_factor @ H
    x0 = sample_signal(config.prior_model(), n, rng)
    z = rng.standard_normal(m) * np.sqrt(config.noise_variance)
    return A, x0, A @ x0.entries + z


def _outcome(x_hat, x0, xi, converged, seed, keep_estimate):
    mse, on, off, eer, cos = empirical_metrics(x_hat, x0, xi)
    ties = int(np.sum(np.abs(x_hat) == xi))
    if ties == 0 and abs(eer - (2.0 - on - off)) > EER_IDENTITY_TOL:
        raise ArithmeticError(f"EER identity violated: {eer} vs {2 - on - off}")
    return TrialOutcome(mse=mse, phi_on=on, phi_off=off, eer=eer,
                        cosine=np.nan if cos is None else cos,
                        solver_converged=converged, seed=seed, ties=ties,
                        estimate=x_hat if keep_estimate else None)


def _check_spectrum(config: ProblemConfig, spectrum: CorrelationSpectrum | None):
    if spectrum is None:
        return config.correlation_model().spectrum()
    if spectrum.m != config.m:
        raise ValueError(f"spectrum has m={spectrum.m}, config needs m={config.m}")
    return spectrum


def run_trial(config: ProblemConfig, seed: int, spectrum: CorrelationSpectrum | None = None,
              lam: float | None = None, lasso_opts: LassoOptions | None = None,
              keep_estimate: bool = True) -> TrialOutcome:
    """One realization: draw ``A = S H``, ``x0`` and noise from ``seed``,
    solve the LASSO and score the estimate."""
    spectrum = _check_spectrum(config, spectrum)
    lam = float(config.lambdas[0] if lam is None else lam)
    A, x0, y = _draw_instance(config, spectrum, seed)
    sol = solve_lasso(LassoInstance(A, y, lam), lasso_opts)
    if not sol.converged:
        log.warning("LASSO did not converge (seed %d, lambda %g, kkt %.3e)",
                    seed, lam, sol.kkt_residual)
    return _outcome(sol.estimate, x0, config.xi, sol.converged, seed, keep_estimate)


def _trial_all_lambdas(args):
    config, spectrum, seed, lambdas, lasso_opts = args
    A, x0, y = _draw_instance(config, spectrum, seed)
    out = []
    for lam in lambdas:
        sol = solve_lasso(LassoInstance(A, y, float(lam)), lasso_opts)
        out.append(_outcome(sol.estimate, x0, config.xi, sol.converged, seed, False))
    return out


def summarize(outcomes: Sequence[TrialOutcome], settings: dict) -> EmpiricalReport:
    if not outcomes:
        raise ValueError("need at least one trial")
    summaries = {}
    for metric in METRICS:
        vals = np.array([getattr(o, metric) for o in outcomes], dtype=float)
        vals = vals[np.isfinite(vals)]
        cnt = int(vals.size)
        if cnt == 0:
            summaries[metric] = MetricSummary(np.nan, np.nan, np.nan, 0)
            continue
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if cnt > 1 else np.nan
        summaries[metric] = MetricSummary(mean, std, std / np.sqrt(cnt), cnt)
    return EmpiricalReport(summaries=summaries, trial_count=len(outcomes),
                           nonconverged_count=sum(not o.solver_converged for o in outcomes),
                           settings=settings,
                           tie_count=sum(o.ties for o in outcomes))


def scalar_problem(config: ProblemConfig, spectrum: CorrelationSpectrum, lam: float) -> ScalarProblem:
    return ScalarProblem(eigenvalues=spectrum.eigenvalues, n=config.n,
                         sigma2=config.noise_variance, lam=float(lam),
                         prior=config.prior_model())


def run_sweep(config: ProblemConfig, lambdas: Sequence[float] | None = None,
              trials: int | None = None, base_seed: int | None = None,
              spectrum: CorrelationSpectrum | None = None, workers: int = 1,
              engine_opts: SolverOptions | None = None,
              lasso_opts: LassoOptions | None = None) -> list[SweepPoint]:
    """Theory and/or simulation at every lambda of the grid.

    Trial ``i`` uses seed ``base_seed + i`` at every grid point, so all grid
    points see the same designs, signals and noise. Each trial's draws are
    made once and reused across the lambda grid. Results are reduced in
    trial-index order regardless of ``workers``.
    """
    lambdas = np.asarray(config.lambdas if lambdas is None else lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("lambda grid is empty")
    trials = config.trials if trials is None else int(trials)
    base_seed = config.base_seed if base_seed is None else int(base_seed)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    spectrum = _check_spectrum(config, spectrum)
    settings = config.with_overrides(trials=trials, base_seed=base_seed).to_dict()

    theories: list[Optional[TheoryReport]] = [None] * lambdas.size
    errors: list[Optional[str]] = [None] * lambdas.size
    if config.mode in ("theory", "both"):
        for i, lam in enumerate(lambdas):
            try:
                theories[i] = theory_report(scalar_problem(config, spectrum, lam),
                                            config.xi, engine_opts)
            except (ConvergenceError, ArithmeticError, ValueError) as exc:
                log.error("theory failed at lambda=%g: %s", lam, exc)
                errors[i] = f"theory: {exc}"

    empiricals: list[Optional[EmpiricalReport]] = [None] * lambdas.size
    if config.mode in ("empirical", "both"):
        jobs = [(config, spectrum, base_seed + i, lambdas, lasso_opts) for i in range(trials)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                per_trial = list(pool.map(_trial_all_lambdas, jobs, chunksize=4))
        else:
            per_trial = [_trial_all_lambdas(job) for job in jobs]
        for j, lam in enumerate(lambdas):
            try:
                empiricals[j] = summarize([row[j] for row in per_trial],
                                          dict(settings, **{"lambda": float(lam)}))
            except (ValueError, ArithmeticError) as exc:
                errors[j] = (errors[j] + "; " if errors[j] else "") + f"empirical: {exc}"

    return [SweepPoint(lam=float(lam), empirical=empiricals[i], theory=theories[i], error=errors[i])
            for i, lam in enumerate(lambdas)]
