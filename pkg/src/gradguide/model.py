"""Feed-forward classifier with an optional frozen-base low-rank adapter.

Parameters live in a :class:`ParameterSet` keyed by name (``fc0.W``,
``fc0.b``, ... and, in adapter mode, ``fc0.A`` / ``fc0.B``). The effective
weight of an adapted layer is ``W + B @ A``; only ``A`` and ``B`` train.
Gradients are computed by a hand-written backward pass.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping

import numpy as np

from . import container
from .numerics import DTYPE, Rng, ShapeError, gaussian, softmax, softmax_cross_entropy

GradientSet = Dict[str, np.ndarray]


@dataclass(frozen=True)
class ModelConfig:
    input_dim: int = 32
    hidden_dims: tuple = (64,)
    num_classes: int = 10
    adapter_rank: int = 8
    init_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or self.num_classes < 1:
            raise ValueError("input_dim and num_classes must be positive")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden_dims must be positive")
        if self.adapter_rank < 0:
            raise ValueError("adapter_rank must be nonnegative")
        if not self.init_std > 0:
            raise ValueError("init_std must be positive")
        if self.adapter_rank:
            for fan_in, fan_out in self.layer_shapes():
                if self.adapter_rank > min(fan_in, fan_out):
                    raise ValueError(
                        f"adapter_rank {self.adapter_rank} exceeds min(fan_in, fan_out)"
                        f" = {min(fan_in, fan_out)} for a {fan_in}->{fan_out} layer"
                    )

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.num_classes]
        return list(zip(dims[:-1], dims[1:]))


@dataclass(frozen=True)
class Batch:
    inputs: np.ndarray
    labels: np.ndarray
    task_id: int = 0
    origin: np.ndarray | None = None  # per-sample source task, when known

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=DTYPE)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2:
            raise ShapeError(f"inputs must be 2-D, got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise ShapeError(f"{x.shape[0]} inputs but labels of shape {y.shape}")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)
        if self.origin is not None:
            object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.int64))

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def take(self, idx) -> "Batch":
        origin = None if self.origin is None else self.origin[idx]
        return Batch(self.inputs[idx], self.labels[idx], self.task_id, origin)


class ParameterSet(Mapping):
    """Immutable ordered mapping of parameter name to float64 array."""

    def __init__(self, entries: Mapping[str, np.ndarray], trainable=None):
        self._entries = {}
        for name, value in entries.items():
            arr = np.array(value, dtype=DTYPE, copy=True)
            arr.setflags(write=False)
            self._entries[name] = arr
        self.trainable = frozenset(self._entries if trainable is None else trainable)
        missing = self.trainable - self._entries.keys()
        if missing:
            raise KeyError(f"trainable names not present: {sorted(missing)}")

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def replace(self, updates: Mapping[str, np.ndarray]) -> "ParameterSet":
        """Return a successor with some entries swapped; others are shared."""
        new = ParameterSet.__new__(ParameterSet)
        new._entries = dict(self._entries)
        for name, value in updates.items():
            if name not in new._entries:
                raise KeyError(name)
            if np.shape(value) != new._entries[name].shape:
                raise ShapeError(f"shape change for {name}")
            arr = np.array(value, dtype=DTYPE, copy=True)
            arr.setflags(write=False)
            new._entries[name] = arr
        new.trainable = self.trainable
        return new

    def trainable_subset(self) -> "ParameterSet":
        return ParameterSet({k: v for k, v in self.items() if k in self.trainable})

    def equals(self, other: "ParameterSet") -> bool:
        """Bit-exact comparison of names, order, trainable set and values."""
        return (
            list(self) == list(other)
            and self.trainable == other.trainable
            and all(np.array_equal(self[k], other[k]) for k in self)
        )

    def __repr__(self) -> str:
        shapes = ", ".join(f"{k}{tuple(v.shape)}" for k, v in self.items())
        return f"ParameterSet({shapes}; trainable={sorted(self.trainable)})"


def _num_layers(params: Mapping[str, np.ndarray]) -> int:
    n = 0
    while f"fc{n}.W" in params:
        n += 1
    return n


def init(config: ModelConfig) -> ParameterSet:
    rng = Rng(config.seed).split("model-init")
    entries: dict[str, np.ndarray] = {}
    trainable: list[str] = []
    r = config.adapter_rank
    for i, (fan_in, fan_out) in enumerate(config.layer_shapes()):
        entries[f"fc{i}.W"] = gaussian(rng, (fan_out, fan_in), 0.0, config.init_std)
        entries[f"fc{i}.b"] = np.zeros(fan_out)
        if r:
            entries[f"fc{i}.A"] = gaussian(rng, (r, fan_in), 0.0, config.init_std)
            entries[f"fc{i}.B"] = np.zeros((fan_out, r))
            trainable += [f"fc{i}.A", f"fc{i}.B"]
        else:
            trainable += [f"fc{i}.W", f"fc{i}.b"]
    return ParameterSet(entries, trainable)


def effective_weight(params: Mapping[str, np.ndarray], i: int) -> np.ndarray:
    W = params[f"fc{i}.W"]
    if f"fc{i}.A" in params:
        return W + params[f"fc{i}.B"] @ params[f"fc{i}.A"]
    return W


def _forward(params, x):
    n_layers = _num_layers(params)
    acts = [x]
    pre = []
    h = x
    for i in range(n_layers):
        z = h @ effective_weight(params, i).T + params[f"fc{i}.b"]
        pre.append(z)
        h = np.maximum(z, 0.0) if i < n_layers - 1 else z
        acts.append(h)
    return acts, pre


def _check_batch(params, batch: Batch):
    W0 = params["fc0.W"]
    if batch.inputs.shape[1] != W0.shape[1]:
        raise ShapeError(
            f"batch has {batch.inputs.shape[1]} features, model expects {W0.shape[1]}"
        )
    if len(batch) < 1:
        raise ShapeError("empty batch")


def logits(params: Mapping[str, np.ndarray], inputs) -> np.ndarray:
    acts, _ = _forward(params, np.asarray(inputs, dtype=DTYPE))
    return acts[-1]


def predict_proba(params, inputs) -> np.ndarray:
    return softmax(logits(params, inputs))


def predict(params, inputs) -> np.ndarray:
    # np.argmax returns the first maximal index, i.e. ties go to the lowest class
    return np.argmax(logits(params, inputs), axis=1)


def loss_and_grad(params: ParameterSet, batch: Batch) -> tuple[float, GradientSet]:
    """Mean cross-entropy over ``batch`` and its gradient w.r.t. trainable params."""
    _check_batch(params, batch)
    acts, pre = _forward(params, batch.inputs)
    loss, dz = softmax_cross_entropy(acts[-1], batch.labels)
    grads: GradientSet = {}
    for i in reversed(range(len(pre))):
        h_in = acts[i]
        dW_eff = dz.T @ h_in
        if f"fc{i}.A" in params:
            A, B = params[f"fc{i}.A"], params[f"fc{i}.B"]
            grads[f"fc{i}.A"] = B.T @ dW_eff
            grads[f"fc{i}.B"] = dW_eff @ A.T
        grads[f"fc{i}.W"] = dW_eff
        grads[f"fc{i}.b"] = dz.sum(axis=0)
        if i:
            dh = dz @ effective_weight(params, i)
            dz = dh * (pre[i - 1] > 0)
    ordered = {k: grads[k] for k in params if k in params.trainable}
    return loss, ordered


def accuracy(params: Mapping[str, np.ndarray], eval_set: Batch) -> float:
    if len(eval_set) == 0:
        raise ValueError("accuracy needs a nonempty evaluation set")
    return float(np.mean(predict(params, eval_set.inputs) == eval_set.labels))


def save_params(params: ParameterSet, path, meta: dict | None = None) -> None:
    header = {"kind": "parameters", "trainable": sorted(params.trainable)}
    header.update(meta or {})
    container.write(path, dict(params.items()), header)


def load_params(path) -> tuple[ParameterSet, dict]:
    arrays, meta = container.read(path)
    if meta.get("kind") != "parameters":
        raise container.MalformedFileError(f"{path} does not hold a parameter set")
    return ParameterSet(arrays, meta["trainable"]), meta
