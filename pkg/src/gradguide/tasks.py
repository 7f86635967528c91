"""Synthetic Gaussian-cluster task sequences and their on-disk format.

Two regimes are produced:

* ``homogeneous`` -- every task samples from one shared set of class
  clusters; task ``t`` owns the classes ``[t*c, (t+1)*c)``.
* ``shifted`` -- as above, but each task's clusters are translated by
  ``shift_magnitude`` along a task-specific random unit direction.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import container
from .model import Batch
from .numerics import Rng

REGIMES = ("homogeneous", "shifted")


@dataclass(frozen=True)
class SequenceSpec:
    regime: str = "homogeneous"
    num_tasks: int = 5
    samples_per_task: int = 2000
    test_per_task: int = 500
    input_dim: int = 32
    classes_per_task: int = 2
    shift_magnitude: float = 0.0
    cluster_std: float = 1.0
    separation: float = 6.0
    class_budget: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.num_tasks < 2:
            raise ValueError("num_tasks must be at least 2")
        for name in ("samples_per_task", "test_per_task", "input_dim", "classes_per_task"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.shift_magnitude < 0 or self.cluster_std < 0 or self.separation < 0:
            raise ValueError("shift_magnitude, cluster_std and separation must be nonnegative")

    @property
    def num_classes(self) -> int:
        return self.num_tasks * self.classes_per_task


@dataclass(frozen=True)
class Task:
    task_id: int
    train: Batch
    test: Batch
    name: str


def class_means(spec: SequenceSpec) -> np.ndarray:
    """Cluster centres shared by every task, shape ``(num_classes, input_dim)``.

    Centres sit on a sphere of radius ``separation / sqrt(2)`` so that, in
    high dimension, two centres are about ``separation`` apart.
    """
    g = Rng(spec.seed).split("class-means").generator
    u = g.standard_normal((spec.num_classes, spec.input_dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u * (spec.separation / np.sqrt(2.0))


def task_shifts(spec: SequenceSpec) -> np.ndarray:
    """Per-task translation vectors, shape ``(num_tasks, input_dim)``."""
    if spec.regime == "homogeneous":
        return np.zeros((spec.num_tasks, spec.input_dim))
    g = Rng(spec.seed).split("task-shifts").generator
    v = g.standard_normal((spec.num_tasks, spec.input_dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * spec.shift_magnitude


def _draw(g: np.random.Generator, means: np.ndarray, classes: np.ndarray, n: int, std: float,
          shift: np.ndarray, task_id: int) -> Batch:
    labels = classes[np.arange(n) % len(classes)]
    labels = labels[g.permutation(n)]
    x = means[labels] + shift + std * g.standard_normal((n, means.shape[1]))
    return Batch(x, labels, task_id, np.full(n, task_id))


def generate(spec: SequenceSpec) -> list[Task]:
    if spec.num_classes > spec.class_budget:
        raise ValueError(
            f"{spec.num_tasks} tasks x {spec.classes_per_task} classes = {spec.num_classes}"
            f" exceeds the class budget of {spec.class_budget}"
        )
    means = class_means(spec)
    shifts = task_shifts(spec)
    root = Rng(spec.seed)
    tasks = []
    c = spec.classes_per_task
    for t in range(spec.num_tasks):
        classes = np.arange(t * c, (t + 1) * c)
        train = _draw(root.split(f"task{t}-train").generator, means, classes,
                      spec.samples_per_task, spec.cluster_std, shifts[t], t)
        test = _draw(root.split(f"task{t}-test").generator, means, classes,
                     spec.test_per_task, spec.cluster_std, shifts[t], t)
        tasks.append(Task(t, train, test, f"{spec.regime}-task{t}"))
    return tasks


def save(tasks: list[Task], path, spec: SequenceSpec | None = None) -> None:
    arrays = {}
    for task in tasks:
        for split in ("train", "test"):
            b = getattr(task, split)
            arrays[f"task{task.task_id}.{split}.inputs"] = b.inputs
            arrays[f"task{task.task_id}.{split}.labels"] = b.labels
    meta = {
        "kind": "tasks",
        "tasks": [{"task_id": t.task_id, "name": t.name} for t in tasks],
        "spec": dataclasses.asdict(spec) if spec is not None else None,
    }
    container.write(path, arrays, meta)


def load(path) -> list[Task]:
    arrays, meta = container.read(path)
    if meta.get("kind") != "tasks":
        raise container.MalformedFileError(f"{path} does not hold a task sequence")
    tasks = []
    try:
        for entry in meta["tasks"]:
            t = int(entry["task_id"])
            splits = {
                split: Batch(arrays[f"task{t}.{split}.inputs"], arrays[f"task{t}.{split}.labels"],
                             t, np.full(len(arrays[f"task{t}.{split}.labels"]), t))
                for split in ("train", "test")
            }
            tasks.append(Task(t, splits["train"], splits["test"], entry["name"]))
    except (KeyError, TypeError) as exc:
        raise container.MalformedFileError(f"task file is missing {exc}") from exc
    return tasks
