"""Sequential task training with SGD, replay mixing and gated guidance.

Variants:

``full``            replay mixing and guidance
``guidance_only``   guidance, no replay memory
``replay_only``     replay mixing, no guidance
``sequential``      plain fine-tuning task after task
``multitask``       one joint pass over the pooled training sets
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import model as mdl
from .guidance import Checkpoint, GuidanceConfig, apply_guidance
from .metrics import AccuracyMatrix, export
from .model import Batch, GradientSet, ModelConfig, ParameterSet
from .numerics import NonFiniteError, Rng
from .replay import ReplayBuffer, mix, sample_replay, store
from .tasks import Task

log = logging.getLogger(__name__)

VARIANTS = ("full", "guidance_only", "replay_only", "sequential", "multitask")
_GUIDED = ("full", "guidance_only")
_REPLAYED = ("full", "replay_only")


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "full"
    lr: float = 0.05
    batch_size: int = 32
    epochs_per_task: int = 5
    guidance: GuidanceConfig = GuidanceConfig()
    replay_capacity: int = 20
    seed: int = 0
    per_task_alpha: tuple = ()  # ((task_id, alpha), ...)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1 or self.epochs_per_task < 1:
            raise ValueError("batch_size and epochs_per_task must be positive")
        if self.replay_capacity < 0:
            raise ValueError("replay_capacity must be nonnegative")
        pta = self.per_task_alpha
        if isinstance(pta, dict):
            pta = tuple(sorted(pta.items()))
        pta = tuple((int(t), float(a)) for t, a in pta)
        for t, a in pta:
            if t < 1:
                raise ValueError(f"per-task alpha for task {t}: task 0 takes no alpha")
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"per-task alpha {a} for task {t} outside [0, 1]")
        object.__setattr__(self, "per_task_alpha", pta)

    @property
    def uses_guidance(self) -> bool:
        return self.variant in _GUIDED

    @property
    def uses_replay(self) -> bool:
        return self.variant in _REPLAYED

    def guidance_for(self, task_id: int) -> GuidanceConfig:
        overrides = dict(self.per_task_alpha)
        if task_id in overrides:
            return dataclasses.replace(self.guidance, alpha=overrides[task_id])
        return self.guidance


@dataclass(frozen=True)
class StepRecord:
    step: int
    task: int
    loss: float
    gated: bool
    guided: bool  # apply_guidance was consulted this step
    replay_n: int


@dataclass
class TrainState:
    params: ParameterSet
    buffer: ReplayBuffer
    rng: Rng
    checkpoint: Checkpoint | None = None
    completed_tasks: int = 0
    step_log: list[StepRecord] = field(default_factory=list)

    @classmethod
    def start(cls, params: ParameterSet, cfg: TrainConfig) -> "TrainState":
        capacity = cfg.replay_capacity if cfg.uses_replay else 0
        return cls(params, ReplayBuffer(capacity), Rng(cfg.seed))

    def stream(self, purpose: str, task_id: int) -> Rng:
        # independent substreams keep variants aligned step for step
        return self.rng.split(f"{purpose}/task{task_id}")


def sgd_step(params: ParameterSet, grads: GradientSet, lr: float) -> ParameterSet:
    """Plain SGD: ``p - lr * g`` for each trainable ``p`` that has a gradient."""
    updates = {}
    for name, g in grads.items():
        if name not in params.trainable:
            raise KeyError(f"gradient for non-trainable parameter {name!r}")
        if not np.all(np.isfinite(g)):
            bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
            raise NonFiniteError(f"gradient of {name} has {bad} non-finite entries")
        updates[name] = params[name] - lr * g
    return params.replace(updates)


def train_task(state: TrainState, task: Task, cfg: TrainConfig) -> TrainState:
    if task.task_id != state.completed_tasks:
        raise ValueError(
            f"expected task {state.completed_tasks} next, got task {task.task_id}"
        )
    shuffle = state.stream("shuffle", task.task_id).generator
    replay_rng = state.stream("replay", task.task_id)
    gate_rng = state.stream("gate", task.task_id)
    gcfg = cfg.guidance_for(task.task_id)

    params = state.params
    step_log = list(state.step_log)
    step = step_log[-1].step + 1 if step_log else 0
    use_replay = cfg.uses_replay and len(state.buffer) > 0
    use_guidance = cfg.uses_guidance and state.checkpoint is not None
    n = len(task.train)

    for _ in range(cfg.epochs_per_task):
        order = shuffle.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            batch = task.train.take(order[lo:lo + cfg.batch_size])
            replay_n = 0
            if use_replay:
                batch = mix(batch, sample_replay(state.buffer, len(batch), replay_rng))
                replay_n = len(batch) // 2
            loss, grads = mdl.loss_and_grad(params, batch)
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at step {step} (task {task.task_id})")
            gated = False
            if use_guidance:
                grads, gated = apply_guidance(grads, params, state.checkpoint, gcfg, gate_rng)
            params = sgd_step(params, grads, cfg.lr)
            step_log.append(StepRecord(step, task.task_id, loss, gated, use_guidance, replay_n))
            step += 1

    buffer = state.buffer
    if cfg.uses_replay:
        buffer = store(buffer, task.task_id, task.train, state.stream("store", task.task_id))
    return TrainState(
        params=params,
        buffer=buffer,
        rng=state.rng,
        checkpoint=Checkpoint.snapshot(params, task.task_id),
        completed_tasks=state.completed_tasks + 1,
        step_log=step_log,
    )


def pool_tasks(tasks: list[Task]) -> Task:
    train = Batch(
        np.concatenate([t.train.inputs for t in tasks]),
        np.concatenate([t.train.labels for t in tasks]),
        0,
        np.concatenate([np.full(len(t.train), t.task_id) for t in tasks]),
    )
    return Task(0, train, tasks[0].test, "pooled")


def _evaluate_row(params, tasks, upto: int) -> np.ndarray:
    row = np.full(len(tasks), np.nan)
    for i in range(upto + 1):
        row[i] = mdl.accuracy(params, tasks[i].test)
    return row


@dataclass
class RunOutput:
    matrix: AccuracyMatrix
    params: ParameterSet
    steps: list[StepRecord]
    checkpoints: list[Checkpoint]


def run_sequence(tasks: list[Task], model_cfg: ModelConfig, cfg: TrainConfig,
                 output_dir=None) -> RunOutput:
    """Train through ``tasks`` in order, evaluating every seen task after each one."""
    if not tasks:
        raise ValueError("run_sequence needs at least one task")
    sizes = [len(t.test) for t in tasks]
    state = TrainState.start(mdl.init(model_cfg), cfg)
    checkpoints = []

    if cfg.variant == "multitask":
        state = train_task(state, pool_tasks(tasks), cfg)
        matrix = AccuracyMatrix.empty(1, sizes)
        matrix.values[0] = _evaluate_row(state.params, tasks, len(tasks) - 1)
        checkpoints.append(state.checkpoint)
    else:
        matrix = AccuracyMatrix.empty(len(tasks), sizes)
        for t, task in enumerate(tasks):
            state = train_task(state, task, cfg)
            matrix.values[t] = _evaluate_row(state.params, tasks, t)
            checkpoints.append(state.checkpoint)
            log.debug("variant=%s task=%d accs=%s", cfg.variant, t, matrix.values[t, :t + 1])

    out = RunOutput(matrix, state.params, state.step_log, checkpoints)
    if output_dir is not None:
        write_run(out, output_dir, model_cfg, cfg, state.buffer)
    return out


def config_echo(model_cfg: ModelConfig, cfg: TrainConfig) -> dict:
    return {"model": dataclasses.asdict(model_cfg), "train": dataclasses.asdict(cfg)}


def write_run(out: RunOutput, output_dir, model_cfg: ModelConfig, cfg: TrainConfig,
              buffer: ReplayBuffer | None = None, extra: dict | None = None) -> None:
    d = Path(output_dir)
    d.mkdir(parents=True, exist_ok=True)
    echo = config_echo(model_cfg, cfg)
    echo.update(extra or {})
    (d / "run.json").write_text(json.dumps(echo, indent=2, sort_keys=True) + "\n")
    for ck in out.checkpoints:
        mdl.save_params(ck.params, d / f"checkpoint_task{ck.after_task}.bin",
                        {"after_task": ck.after_task})
    if buffer is not None and buffer.per_task:
        buffer.save(d / "replay.bin")
    with open(d / "steps.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["step", "task", "loss", "gated", "guided", "replay_n"])
        for r in out.steps:
            w.writerow([r.step, r.task, repr(float(r.loss)), int(r.gated), int(r.guided), r.replay_n])
    export(out.matrix, d / "matrix.csv")
