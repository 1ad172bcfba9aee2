import numpy as np
import pytest

from corrlasso.correlation import build_exponential, spectral_decompose
from corrlasso.engine import ScalarProblem
from corrlasso.priors import SparsePrior

PAPER = dict(n=400, delta=0.7, rho=0.7, sigma2=0.01, kappa=0.1)

_ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {name}" + (f" -- {detail}" if detail else ""))


@pytest.fixture
def record():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def paper_spectrum():
    return spectral_decompose(build_exponential(PAPER["rho"], 280))


@pytest.fixture(scope="session")
def bernoulli():
    return SparsePrior.bernoulli(PAPER["kappa"])


@pytest.fixture(scope="session")
def paper_problem(paper_spectrum, bernoulli):
    def make(lam=0.1, sigma2=PAPER["sigma2"]):
        return ScalarProblem(paper_spectrum.eigenvalues, PAPER["n"], sigma2, lam, bernoulli)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
