import numpy as np
import pytest
from scipy import stats

from corrlasso.config import config_from_mapping
from corrlasso.correlation import spectral_decompose
from corrlasso.harness import (METRICS, EmpiricalReport, empirical_metrics, run_sweep, run_trial,
                               summarize)
from corrlasso.priors import SignalVector, SparsePrior, sample_signal


def small_config(**kw):
    raw = dict(n=100, delta=0.7, kappa=0.1, rho=0.7, sigma2=0.01, **{"lambda": 0.1},
               trials=4, base_seed=0)
    raw.update(kw)
    return config_from_mapping(raw)


@pytest.fixture
def x0(bernoulli):
    return sample_signal(bernoulli, 400, 5)


def reference_metrics(x_hat, x, support, xi):
    n = len(x)
    on_idx = set(int(i) for i in support)
    off_idx = [i for i in range(n) if i not in on_idx]
    mse = sum((x_hat[i] - x[i]) ** 2 for i in range(n)) / n
    phi_on = sum(1 for i in on_idx if abs(x_hat[i]) >= xi) / len(on_idx)
    phi_off = sum(1 for i in off_idx if abs(x_hat[i]) <= xi) / len(off_idx)
    eer = sum(1 for i in on_idx if abs(x_hat[i]) < xi) / len(on_idx) \
        + sum(1 for i in off_idx if abs(x_hat[i]) > xi) / len(off_idx)
    dot = sum(a * b for a, b in zip(x_hat, x))
    cos = dot / (sum(a * a for a in x_hat) ** 0.5 * sum(b * b for b in x) ** 0.5)
    return mse, phi_on, phi_off, eer, cos


def test_perfect_estimate(x0):
    assert empirical_metrics(x0.entries, x0, 0.001) == (0.0, 1.0, 1.0, 0.0, pytest.approx(1.0, abs=1e-15))


def test_zero_estimate(x0):
    mse, on, off, eer, cos = empirical_metrics(np.zeros(400), x0, 0.001)
    assert mse == pytest.approx(0.1) and on == 0.0 and off == 1.0 and eer == 1.0
    assert cos is None


def test_doubled_estimate(x0):
    mse, *_, cos = empirical_metrics(2 * x0.entries, x0, 0.001)
    assert cos == pytest.approx(1.0, abs=1e-15) and mse == pytest.approx(0.1)


def test_dual_implementation(rng):
    for _ in range(25):
        x = np.zeros(10)
        support = np.sort(rng.choice(10, 3, replace=False))
        x[support] = rng.standard_normal(3)
        x_hat = rng.standard_normal(10) * rng.integers(0, 2, 10)
        x_hat[0] = 0.3
        got = empirical_metrics(x_hat, SignalVector(x, support), 0.2)
        assert got == pytest.approx(reference_metrics(x_hat, x, support, 0.2), abs=1e-14)


def test_metric_validation(x0):
    with pytest.raises(ValueError):
        empirical_metrics(np.zeros(10), x0, 0.001)
    with pytest.raises(ValueError):
        empirical_metrics(np.zeros(400), x0, 0.0)
    with pytest.raises(ValueError):
        empirical_metrics(np.zeros(5), SignalVector(np.zeros(5), np.array([], dtype=int)), 0.1)


def test_trial_is_deterministic():
    cfg = small_config()
    a, b = run_trial(cfg, 17), run_trial(cfg, 17)
    assert a == b
    np.testing.assert_array_equal(a.estimate, b.estimate)
    assert a != run_trial(cfg, 18)


def test_trial_invariants():
    out = run_trial(small_config(), 3)
    assert 0 <= out.phi_on <= 1 and 0 <= out.phi_off <= 1
    assert out.ties == 0 and abs(out.eer - (2 - out.phi_on - out.phi_off)) <= 1e-12
    assert out.solver_converged and out.seed == 3


def test_noiseless_overdetermined_recovery():
    cfg = small_config(rho=0.0, delta=2.0, sigma2=1e-12, **{"lambda": 1e-8})
    assert run_trial(cfg, 0).mse <= 1e-6


def test_summary_statistics():
    cfg = small_config()
    outs = [run_trial(cfg, s, keep_estimate=False) for s in range(5)]
    rep = summarize(outs, {})
    vals = np.array([o.mse for o in outs])
    assert rep["mse"].mean == pytest.approx(vals.mean())
    assert rep["mse"].std == pytest.approx(vals.std(ddof=1))
    assert rep["mse"].stderr == pytest.approx(vals.std(ddof=1) / np.sqrt(5))
    assert rep.trial_count == 5 and rep.nonconverged_count == 0
    with pytest.raises(ValueError):
        summarize([], {})


def test_single_point_single_trial_sweep():
    cfg = small_config(trials=1)
    (point,) = run_sweep(cfg)
    trial = run_trial(cfg, cfg.base_seed)
    assert point.error is None
    for metric in METRICS:
        assert point.empirical[metric].mean == getattr(trial, metric)
        assert point.empirical[metric].count == 1
    assert point.theory.mse == point.theory.saddle.alpha_star


def test_same_seed_sweeps_are_identical():
    cfg = small_config(mode="empirical", **{"lambda": {"start": 0.05, "stop": 0.3, "count": 3}})
    a, b = run_sweep(cfg), run_sweep(cfg)
    assert [p.empirical for p in a] == [p.empirical for p in b]
    c = run_sweep(cfg, base_seed=1)
    assert [p.empirical for p in a] != [p.empirical for p in c]


def test_workers_do_not_change_results():
    cfg = small_config(mode="empirical", trials=6, **{"lambda": {"start": 0.05, "stop": 0.3, "count": 2}})
    assert [p.empirical for p in run_sweep(cfg)] == [p.empirical for p in run_sweep(cfg, workers=2)]


def test_theory_failures_are_recorded(monkeypatch):
    import corrlasso.harness as harness
    from corrlasso.engine import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("forced")
    monkeypatch.setattr(harness, "theory_report", boom)
    points = run_sweep(small_config(trials=1, **{"lambda": {"start": 0.1, "stop": 0.2, "count": 2}}))
    assert all(p.error == "theory: forced" and p.theory is None for p in points)
    assert all(p.empirical is not None for p in points)


def test_rotated_correlation_is_statistically_indistinguishable(rng):
    cfg = small_config(mode="empirical", trials=200)
    spec = cfg.correlation_model().spectrum()
    sigma = spec.sqrt_factor @ spec.sqrt_factor
    Q, _ = np.linalg.qr(rng.standard_normal((cfg.m, cfg.m)))
    rotated = Q @ sigma @ Q.T
    rot_spec = spectral_decompose(0.5 * (rotated + rotated.T))

    def per_trial(spectrum, base):
        return [run_trial(cfg, base + i, spectrum=spectrum, keep_estimate=False) for i in range(200)]

    a, b = per_trial(spec, 0), per_trial(rot_spec, 10_000)
    for metric in METRICS:
        va = np.array([getattr(o, metric) for o in a])
        vb = np.array([getattr(o, metric) for o in b])
        assert stats.ttest_ind(va, vb, equal_var=False).pvalue > 0.01, metric


def test_spectrum_size_mismatch():
    cfg = small_config()
    with pytest.raises(ValueError):
        run_trial(cfg, 0, spectrum=spectral_decompose(np.eye(3)))
