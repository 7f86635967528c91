"""Approximate the missing old-task gradient and inject it into the live one.

The approximation for a parameter ``p`` is the displacement ``p - p*`` from the
snapshot taken at the end of the previous task, capped so its norm never
exceeds that of the live gradient. A single Bernoulli(alpha) draw per step
decides whether the guidance term is added at all.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .model import GradientSet, ParameterSet
from .numerics import Rng, ShapeError, bernoulli, frobenius_norm


@dataclass(frozen=True)
class Checkpoint:
    """Frozen copy of the trainable parameters after task ``after_task``."""

    params: ParameterSet
    after_task: int

    @classmethod
    def snapshot(cls, params: ParameterSet, after_task: int) -> "Checkpoint":
        return cls(params.trainable_subset(), after_task)


@dataclass(frozen=True)
class GuidanceConfig:
    alpha: float = 0.2
    scaling_enabled: bool = True
    gate_enabled: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")


def direction(current: Mapping[str, np.ndarray], optimal: Checkpoint) -> GradientSet:
    """Per-parameter displacement ``current - optimal`` over the checkpoint's keys."""
    out: GradientSet = {}
    for name, anchor in optimal.params.items():
        if name not in current:
            raise KeyError(f"checkpoint parameter {name!r} missing from current params")
        if current[name].shape != anchor.shape:
            raise ShapeError(
                f"{name}: current shape {current[name].shape} != checkpoint {anchor.shape}"
            )
        out[name] = current[name] - anchor
    return out


def scaled_guidance(dir: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Cap ``dir`` to the norm of ``grad``, keeping its direction.

    At equal norms both branches give ``dir`` back, so the ``>=`` test is
    interchangeable with a strict one.
    """
    if np.shape(dir) != np.shape(grad):
        raise ShapeError(f"direction {np.shape(dir)} vs gradient {np.shape(grad)}")
    grad_norm = frobenius_norm(grad)
    if grad_norm == 0:
        raise ValueError("zero-norm gradient; callers must skip such parameters")
    dir_norm = frobenius_norm(dir)
    if dir_norm >= grad_norm:
        return dir / dir_norm * grad_norm
    return np.array(dir, copy=True)


def apply_guidance(
    grads: GradientSet,
    current: ParameterSet,
    optimal: Checkpoint,
    cfg: GuidanceConfig,
    rng: Rng,
) -> tuple[GradientSet, bool]:
    """Add the gated guidance term to ``grads``; returns ``(new_grads, gated)``.

    Exactly one Bernoulli draw is consumed per call, before any parameter is
    visited, even when the gate is disabled. Parameters absent from ``grads``
    or with an all-zero gradient are left as they are.
    """
    draw = bernoulli(rng, cfg.alpha)
    if cfg.gate_enabled and draw == 0:
        return dict(grads), False

    out = dict(grads)
    for name in current:
        if name not in grads:
            continue
        grad = grads[name]
        if frobenius_norm(grad) == 0:
            continue
        if name not in optimal.params:
            raise KeyError(f"no checkpoint entry for trainable parameter {name!r}")
        anchor = optimal.params[name]
        if anchor.shape != current[name].shape:
            raise ShapeError(f"{name}: checkpoint shape {anchor.shape} != {current[name].shape}")
        dir = current[name] - anchor
        out[name] = grad + (scaled_guidance(dir, grad) if cfg.scaling_enabled else dir)
    return out, True
