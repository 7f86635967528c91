import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gradguide.numerics import (
    Rng, ShapeError, axpy, bernoulli, frobenius_norm, gaussian, matmul, relu,
    softmax_cross_entropy,
)


@pytest.mark.parametrize("t, expected", [
    (np.zeros((2, 2)), 0.0),
    ([[3, 4]], 5.0),
    ([[1, 1], [1, 1]], 2.0),
])
def test_frobenius_norm_examples(t, expected):
    assert frobenius_norm(t) == expected


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 4), elements=finite), st.floats(-1e3, 1e3))
def test_frobenius_norm_is_absolutely_homogeneous(t, c):
    lhs = frobenius_norm(c * t)
    rhs = abs(c) * frobenius_norm(t)
    assert abs(lhs - rhs) <= 1e-12 + 1e-12 * rhs


def test_axpy_examples():
    np.testing.assert_array_equal(axpy(0, [[9, 9]], [[1, 2]]), [[1, 2]])
    np.testing.assert_array_equal(axpy(1, [[1, 1]], [[1, 1]]), [[2, 2]])
    np.testing.assert_allclose(axpy(-0.1, [[10, 0]], [[1, 1]]), [[0, 1]], atol=1e-15)


def test_axpy_shape_mismatch():
    with pytest.raises(ShapeError):
        axpy(1.0, np.ones((1, 2)), np.ones((2, 1)))


def test_matmul_relu():
    np.testing.assert_array_equal(matmul(np.eye(2), [[1], [2]]), [[1], [2]])
    np.testing.assert_array_equal(relu([[-1, 2]]), [[0, 2]])
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_cross_entropy_uniform():
    loss, d = softmax_cross_entropy([0.0, 0.0], 0)
    assert loss == pytest.approx(math.log(2), abs=1e-15)
    np.testing.assert_allclose(d, [-0.5, 0.5], atol=1e-15)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(ValueError):
        softmax_cross_entropy(np.zeros((2, 3)), [0, 3])
    with pytest.raises(ShapeError):
        softmax_cross_entropy(np.zeros((2, 3)), [0])


@pytest.mark.parametrize("seed", range(5))
def test_cross_entropy_gradient_matches_finite_differences(seed):
    g = np.random.default_rng(seed)
    logits = g.normal(scale=3.0, size=(6, 5))
    labels = g.integers(0, 5, size=6)
    _, analytic = softmax_cross_entropy(logits, labels)

    def f(z):
        # independent evaluation through scipy-free logsumexp
        m = z.max(axis=1, keepdims=True)
        lse = (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))[:, 0]
        return np.mean(lse - z[np.arange(6), labels])

    eps = 1e-6
    numeric = np.zeros_like(logits)
    for idx in np.ndindex(*logits.shape):
        up, dn = logits.copy(), logits.copy()
        up[idx] += eps
        dn[idx] -= eps
        numeric[idx] = (f(up) - f(dn)) / (2 * eps)
    rel = np.abs(analytic - numeric).max() / max(np.abs(analytic).max(), 1e-12)
    assert rel < 1e-6


def test_bernoulli_degenerate(rng):
    assert all(bernoulli(rng, 0.0) == 0 for _ in range(1000))
    assert all(bernoulli(rng, 1.0) == 1 for _ in range(1000))


def test_bernoulli_frequency(rng):
    draws = [bernoulli(rng, 0.2) for _ in range(100_000)]
    assert 0.19 <= np.mean(draws) <= 0.21


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_bernoulli_rejects_invalid_alpha(rng, alpha):
    with pytest.raises(ValueError):
        bernoulli(rng, alpha)


def test_gaussian_rejects_negative_std(rng):
    with pytest.raises(ValueError):
        gaussian(rng, (2,), 0.0, -1.0)


def test_same_seed_same_stream():
    a = gaussian(Rng(7), (50, 3))
    b = gaussian(Rng(7), (50, 3))
    assert a.tobytes() == b.tobytes()


def test_split_streams_are_independent():
    root = Rng(7)
    first = gaussian(root.split("data"), (10,))
    # drawing heavily from a sibling stream leaves "data" untouched
    other = root.split("gate")
    for _ in range(100):
        bernoulli(other, 0.5)
    again = gaussian(root.split("data"), (10,))
    assert first.tobytes() == again.tobytes()
    assert not np.array_equal(first, gaussian(root.split("gate"), (10,)))


def test_rng_rejects_out_of_range_seed():
    with pytest.raises(ValueError):
        Rng(-1)
    with pytest.raises(ValueError):
        Rng(2**64)
