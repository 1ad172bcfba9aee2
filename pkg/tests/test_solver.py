import numpy as np
import pytest

from corrlasso.kernels import soft_threshold
from corrlasso.solver import LassoInstance, LassoOptions, kkt_residual, solve_lasso
from oracles import lasso_enumeration_oracle, random_lasso_instances


@pytest.fixture(scope="module")
def instances():
    return random_lasso_instances(12, seed=99)


def test_identity_design_is_half_lambda_soft_threshold(rng):
    y = rng.standard_normal(30) * 2
    for lam in (0.1, 1.0, 3.0):
        inst = LassoInstance(np.eye(30), y, lam)
        x = solve_lasso(inst).estimate
        np.testing.assert_allclose(x, soft_threshold(y, lam / 2), rtol=0, atol=1e-12)
        assert kkt_residual(inst, soft_threshold(y, lam / 2)) <= 1e-12


def test_large_lambda_gives_exact_zero(rng):
    A = rng.standard_normal((20, 30))
    y = rng.standard_normal(20)
    lam = 2.0 * np.max(np.abs(A.T @ y)) * 1.01
    sol = solve_lasso(LassoInstance(A, y, lam))
    assert np.all(sol.estimate == 0.0)
    assert sol.converged
    assert kkt_residual(LassoInstance(A, y, lam), np.zeros(30)) == 0.0


def test_matches_enumeration_oracle(instances):
    for A, y, lam in instances:
        best, _ = lasso_enumeration_oracle(A, y, lam)
        sol = solve_lasso(LassoInstance(A, y, lam))
        assert sol.converged
        assert sol.objective - best <= 1e-8


def test_solution_has_small_kkt_residual(instances):
    for A, y, lam in instances:
        sol = solve_lasso(LassoInstance(A, y, lam))
        assert sol.kkt_residual <= 1e-9
        assert kkt_residual(LassoInstance(A, y, lam), sol.estimate) == pytest.approx(sol.kkt_residual, abs=1e-15)


def test_perturbation_raises_residual(instances):
    A, y, lam = instances[0]
    inst = LassoInstance(A, y, lam)
    x = solve_lasso(inst).estimate
    base = kkt_residual(inst, x)
    for i in range(A.shape[1]):
        x2 = x.copy()
        x2[i] += 1e-3
        assert kkt_residual(inst, x2) > base


def test_column_permutation_round_trip(rng):
    A = rng.standard_normal((40, 60)) / np.sqrt(40)
    x0 = np.zeros(60)
    x0[:6] = 1.0
    y = A @ x0 + 0.05 * rng.standard_normal(40)
    perm = rng.permutation(60)
    x = solve_lasso(LassoInstance(A, y, 0.1)).estimate
    xp = solve_lasso(LassoInstance(A[:, perm], y, 0.1)).estimate
    back = np.empty_like(xp)
    back[perm] = xp
    np.testing.assert_allclose(back, x, rtol=0, atol=1e-10)


def test_objective_is_monotone_in_iterations(rng):
    A = rng.standard_normal((30, 50)) / np.sqrt(30)
    y = rng.standard_normal(30)
    inst = LassoInstance(A, y, 0.05)
    objs = [solve_lasso(inst, LassoOptions(max_iter=k, polish=False, tol=0.0)).objective
            for k in (1, 2, 5, 10, 20, 50, 100, 200, 400)]
    assert np.all(np.diff(objs) <= 1e-14)


def test_nonconvergence_is_flagged(rng):
    A = rng.standard_normal((30, 50)) / np.sqrt(30)
    y = rng.standard_normal(30)
    sol = solve_lasso(LassoInstance(A, y, 0.01), LassoOptions(max_iter=3, polish=False))
    assert not sol.converged
    assert sol.kkt_residual > 1e-9
    assert sol.estimate.shape == (50,)


def test_paper_scale_instance_converges(rng):
    from corrlasso.correlation import build_exponential, spectral_decompose
    S = spectral_decompose(build_exponential(0.7, 280)).sqrt_factor
    A = S @ rng.standard_normal((280, 400)) / np.sqrt(400)
    x0 = np.zeros(400)
    x0[rng.choice(400, 40, replace=False)] = 1.0
    y = A @ x0 + 0.1 * rng.standard_normal(280)
    for lam in (0.01, 0.14, 0.5):
        sol = solve_lasso(LassoInstance(A, y, lam))
        assert sol.converged and sol.kkt_residual <= 1e-9


@pytest.mark.parametrize("A, y, lam", [(np.ones((3, 2)), np.ones(2), 1.0),
                                       (np.ones((3, 2)), np.ones(3), 0.0),
                                       (np.ones((3, 2)), np.array([1.0, np.nan, 1.0]), 1.0)])
def test_instance_validation(A, y, lam):
    with pytest.raises(ValueError):
        LassoInstance(A, y, lam)
