"""Asymptotic performance of the LASSO under correlated Gaussian designs."""

from .config import ConfigError, LambdaGrid, ProblemConfig, config_from_mapping, parse_config
from .correlation import CorrelationModel, CorrelationSpectrum, build_exponential, spectral_decompose
from .engine import (CGMTEngine, ConvergenceError, SaddlePoint, ScalarProblem, SolverOptions,
                     objective_D, solve_mu, solve_saddle)
from .harness import (EmpiricalReport, SweepPoint, TrialOutcome, empirical_metrics, run_sweep,
                      run_trial)
from .kernels import cost_e, gauss_pdf, gauss_q, hermite_nodes, soft_threshold
from .priors import SignalVector, SparsePrior, expectation_e, sample_signal
from .report import emit_csv
from .solver import LassoInstance, LassoOptions, LassoSolution, kkt_residual, solve_lasso
from .theory import (TheoryReport, predict, predict_cosine, predict_eer, predict_mse,
                     predict_support, theory_report)

__version__ = "0.1.0"
