import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrlasso.kernels import (cost_e, cost_e_eval, gauss_pdf, gauss_q, hermite_nodes,
                               normal_expectation, soft_threshold)

finite = st.floats(-50, 50, allow_nan=False)
positive = st.floats(1e-3, 20, allow_nan=False)


@pytest.mark.parametrize("a, b, expected, branch", [
    (2.0, 1.0, 1.5, "upper"),
    (0.5, 1.0, 0.125, "middle"),
    (-2.0, 1.0, 1.5, "lower"),
    (1.0, 1.0, 0.5, "middle"),  # |a| == b is the middle branch
])
def test_cost_e_branches(a, b, expected, branch):
    assert cost_e(a, b) == pytest.approx(expected, abs=0)
    ev = cost_e_eval(a, b)
    assert ev.value == expected and ev.branch == branch


@pytest.mark.parametrize("fn", [cost_e, soft_threshold, cost_e_eval])
def test_threshold_must_be_positive(fn):
    with pytest.raises(ValueError):
        fn(1.0, 0.0)
    with pytest.raises(ValueError):
        fn(1.0, -1.0)


def test_soft_threshold_examples():
    assert soft_threshold(2.0, 1.0) == 1.0
    assert soft_threshold(0.5, 1.0) == 0.0
    assert soft_threshold(-2.0, 1.0) == -1.0
    np.testing.assert_array_equal(soft_threshold(np.array([3.0, -0.2, -4.0]), 1.0), [2.0, 0.0, -3.0])


def test_cost_e_derivative_matches_clip(rng):
    a = rng.uniform(-5, 5, 100)
    b = rng.uniform(0.1, 3, 100)
    h = 1e-6
    fd = (cost_e(a + h, b) - cost_e(a - h, b)) / (2 * h)
    assert np.max(np.abs(fd - np.clip(a, -b, b))) <= 1e-8


@pytest.mark.parametrize("b", [0.1, 1.0, 7.5])
def test_cost_e_continuous_at_breakpoints(b):
    for edge in (b, -b):
        left = cost_e(np.nextafter(edge, -np.inf), b)
        right = cost_e(np.nextafter(edge, np.inf), b)
        assert abs(left - right) <= 1e-12


@given(finite, finite, positive)
def test_soft_threshold_is_one_lipschitz(a1, a2, b):
    assert abs(soft_threshold(a1, b) - soft_threshold(a2, b)) <= abs(a1 - a2) + 1e-12


@given(finite, positive)
def test_soft_threshold_formula(a, b):
    assert soft_threshold(a, b) == np.sign(a) * max(abs(a) - b, 0.0)


def test_gauss_q_values():
    assert gauss_q(0.0) == 0.5
    assert gauss_q(1.0) == pytest.approx(0.15865525393145707, rel=1e-14)
    for x in (0.3, 1.7, 2.9):
        assert gauss_q(x) + gauss_q(-x) == pytest.approx(1.0, abs=1e-15)


def test_gauss_q_deep_tail_keeps_relative_precision():
    # Q(10) = 7.619853024160527e-24; 1 - Phi(10) would round to 0
    assert gauss_q(10.0) == pytest.approx(7.619853024160527e-24, rel=1e-12)
    assert gauss_q(37.0) > 0  # ~5.7e-300, still representable


def test_gauss_pdf():
    assert gauss_pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))


def test_hermite_nodes():
    (x, w), = hermite_nodes(1)
    assert x == 0.0 and w == pytest.approx(1.0)
    nodes = np.array(hermite_nodes(2))
    assert np.sum(nodes[:, 1] * nodes[:, 0] ** 2) == pytest.approx(1.0, abs=1e-14)
    nodes = np.array(hermite_nodes(3))
    assert np.sum(nodes[:, 1] * nodes[:, 0] ** 4) == pytest.approx(3.0, abs=1e-13)
    with pytest.raises(ValueError):
        hermite_nodes(0)


def test_normal_expectation_handles_kinks_and_jumps():
    # E[(Z - 0.3)_+] = phi(0.3) - 0.3 Q(0.3)
    val = normal_expectation(lambda z: np.maximum(z - 0.3, 0.0), [0.3])
    assert val == pytest.approx(gauss_pdf(0.3) - 0.3 * gauss_q(0.3), abs=1e-14)
    # P(Z >= 1.2) through an indicator
    assert normal_expectation(lambda z: (z >= 1.2).astype(float), [1.2]) == pytest.approx(gauss_q(1.2), abs=1e-13)
