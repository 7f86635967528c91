"""Dense float64 tensor helpers and explicit, splittable randomness.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. Every public
function here validates shapes and refuses to return non-finite values.
"""
from __future__ import annotations

import zlib

import numpy as np

DTYPE = np.float64


class ShapeError(ValueError):
    """Raised when tensor shapes do not conform."""


class NonFiniteError(FloatingPointError):
    """Raised when a NaN or Inf would escape a public operation."""


def as_tensor(x) -> np.ndarray:
    t = np.asarray(x, dtype=DTYPE)
    if t.ndim == 0:
        t = t.reshape(1)
    return t


def check_finite(t: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(t)):
        raise NonFiniteError(f"{what} contains non-finite entries")
    return t


def frobenius_norm(t) -> float:
    t = as_tensor(t).ravel()
    # rescale by the largest entry so tiny nonzero tensors never underflow to 0
    peak = float(np.max(np.abs(t))) if t.size else 0.0
    if peak == 0.0:
        return 0.0
    return peak * float(np.sqrt(np.dot(t / peak, t / peak)))


def axpy(a: float, x, y) -> np.ndarray:
    """Return ``a * x + y`` elementwise."""
    x, y = as_tensor(x), as_tensor(y)
    if x.shape != y.shape:
        raise ShapeError(f"axpy shape mismatch: {x.shape} vs {y.shape}")
    return check_finite(a * x + y, "axpy result")


def matmul(a, b) -> np.ndarray:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul cannot conform {a.shape} and {b.shape}")
    return a @ b


def relu(t) -> np.ndarray:
    return np.maximum(as_tensor(t), 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy over a batch and its exact gradient.

    ``logits`` is ``(n, C)`` (a 1-D vector is treated as a batch of one) and
    ``labels`` holds ``n`` integer class indices. Returns ``(loss, dlogits)``
    with ``dlogits`` shaped like ``logits``.
    """
    logits = as_tensor(logits)
    squeeze = logits.ndim == 1
    if squeeze:
        logits = logits[None, :]
    labels = np.atleast_1d(np.asarray(labels))
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ShapeError("labels must be integers")
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"label out of range [0, {c})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(log_norm - z[rows, labels]))
    grad = np.exp(z - log_norm[:, None])
    grad[rows, labels] -= 1.0
    grad /= n
    if squeeze:
        grad = grad[0]
    if not np.isfinite(loss):
        raise NonFiniteError("cross-entropy loss is not finite")
    return loss, check_finite(grad, "dlogits")


class Rng:
    """Seeded random stream backed by numpy's PCG64.

    Substreams are derived by name with :meth:`split`, so draws made for one
    purpose (say, shuffling) never shift the draws made for another.
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self._spawn_key = tuple(_spawn_key)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=self._spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def split(self, name: str) -> "Rng":
        key = zlib.crc32(name.encode("utf-8"))
        return Rng(self.seed, self._spawn_key + (key,))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, spawn_key={self._spawn_key})"


def gaussian(rng: Rng, shape, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    if std < 0:
        raise ValueError("std must be nonnegative")
    return rng.generator.normal(mean, std, size=tuple(shape)).astype(DTYPE)


def bernoulli(rng: Rng, alpha: float) -> int:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    # always consume exactly one uniform so streams stay aligned across alphas
    return int(rng.generator.random() < alpha)
