"""Per-task sample memory for completed tasks and mixed-batch construction."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import container
from .model import Batch
from .numerics import Rng, ShapeError


@dataclass
class ReplayBuffer:
    capacity_per_task: int
    per_task: dict[int, Batch] = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity_per_task < 0:
            raise ValueError("capacity_per_task must be nonnegative")

    def __len__(self) -> int:
        return sum(len(b) for b in self.per_task.values())

    @property
    def task_ids(self) -> list[int]:
        return sorted(self.per_task)

    def union(self) -> Batch | None:
        """All stored samples, concatenated in ascending task order."""
        parts = [self.per_task[t] for t in self.task_ids if len(self.per_task[t])]
        if not parts:
            return None
        return Batch(
            np.concatenate([p.inputs for p in parts]),
            np.concatenate([p.labels for p in parts]),
            task_id=parts[-1].task_id,
            origin=np.concatenate([np.full(len(p), p.task_id) for p in parts]),
        )

    def save(self, path) -> None:
        arrays = {}
        for t in self.task_ids:
            arrays[f"task{t}.inputs"] = self.per_task[t].inputs
            arrays[f"task{t}.labels"] = self.per_task[t].labels
        meta = {"kind": "replay", "capacity_per_task": self.capacity_per_task,
                "task_ids": self.task_ids}
        container.write(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "ReplayBuffer":
        arrays, meta = container.read(path)
        if meta.get("kind") != "replay":
            raise container.MalformedFileError(f"{path} does not hold a replay buffer")
        buf = cls(int(meta["capacity_per_task"]))
        for t in meta["task_ids"]:
            buf.per_task[int(t)] = Batch(arrays[f"task{t}.inputs"], arrays[f"task{t}.labels"], int(t))
        return buf


def store(buffer: ReplayBuffer, task_id: int, dataset: Batch, rng: Rng) -> ReplayBuffer:
    """Return a new buffer that also holds a uniform subset of ``dataset``."""
    if task_id in buffer.per_task:
        raise ValueError(f"task {task_id} is already stored in the replay buffer")
    k = min(buffer.capacity_per_task, len(dataset))
    idx = rng.generator.permutation(len(dataset))[:k]
    kept = Batch(dataset.inputs[idx], dataset.labels[idx], task_id)
    return ReplayBuffer(buffer.capacity_per_task, {**buffer.per_task, task_id: kept})


def sample_replay(buffer: ReplayBuffer, n: int, rng: Rng) -> Batch:
    """Draw ``n`` samples uniformly, with replacement, from the pooled memory."""
    if n < 1:
        raise ValueError("n must be at least 1")
    pool = buffer.union()
    if pool is None:
        raise ValueError("cannot sample from an empty replay buffer")
    idx = rng.generator.integers(0, len(pool), size=n)
    return pool.take(idx)


def mix(new_batch: Batch, replay_batch: Batch | None) -> Batch:
    if replay_batch is None or len(replay_batch) == 0:
        return new_batch
    if new_batch.inputs.shape[1] != replay_batch.inputs.shape[1]:
        raise ShapeError(
            f"feature dims differ: {new_batch.inputs.shape[1]} vs {replay_batch.inputs.shape[1]}"
        )
    origin = None
    if new_batch.origin is not None or replay_batch.origin is not None:
        origin = np.concatenate([
            new_batch.origin if new_batch.origin is not None
            else np.full(len(new_batch), new_batch.task_id),
            replay_batch.origin if replay_batch.origin is not None
            else np.full(len(replay_batch), replay_batch.task_id),
        ])
    return Batch(
        np.concatenate([new_batch.inputs, replay_batch.inputs]),
        np.concatenate([new_batch.labels, replay_batch.labels]),
        new_batch.task_id,
        origin,
    )
