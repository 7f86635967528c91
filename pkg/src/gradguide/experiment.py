"""Seed loops and the ablation grid, shared by the CLI and the acceptance suite."""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentConfig
from .metrics import RunResult
from .tasks import generate
from .trainer import VARIANTS, run_sequence

BASE_VARIANTS = VARIANTS


@dataclass(frozen=True)
class Cell:
    """One (ablation, variant, seed) unit of work."""

    ablation: str
    variant: str
    seed: int
    alpha: float | None = None
    scaling_enabled: bool = True
    gate_enabled: bool = True
    clear_per_task_alpha: bool = False

    @property
    def subdir(self) -> str:
        return f"{self.ablation}/{self.variant}/seed{self.seed}"


def run_cell(cfg: ExperimentConfig, cell: Cell, out_root=None) -> RunResult:
    spec, model_cfg, train_cfg = cfg.for_seed(cell.seed)
    g = dataclasses.replace(
        train_cfg.guidance,
        alpha=train_cfg.guidance.alpha if cell.alpha is None else cell.alpha,
        scaling_enabled=train_cfg.guidance.scaling_enabled and cell.scaling_enabled,
        gate_enabled=train_cfg.guidance.gate_enabled and cell.gate_enabled,
    )
    train_cfg = dataclasses.replace(
        train_cfg,
        variant=cell.variant,
        guidance=g,
        per_task_alpha=() if cell.clear_per_task_alpha else train_cfg.per_task_alpha,
    )
    tasks = generate(spec)
    out_dir = None if out_root is None else Path(out_root) / cell.subdir
    out = run_sequence(tasks, model_cfg, train_cfg, out_dir)
    return RunResult(cell.variant, cell.seed, out.matrix, cell.ablation,
                     alpha=g.alpha if train_cfg.uses_guidance else None)


def _run_cell_args(args):
    return run_cell(*args)


def run_cells(cfg: ExperimentConfig, cells: list[Cell], out_root=None, jobs: int = 1) -> list[RunResult]:
    """Run independent cells, optionally in worker processes; order is preserved."""
    work = [(cfg, c, out_root) for c in cells]
    if jobs <= 1 or len(cells) <= 1:
        return [_run_cell_args(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell_args, work))


def run_cells_for(cfg: ExperimentConfig) -> list[Cell]:
    return [Cell("base", cfg.train.variant, s) for s in cfg.seeds]


def ablation_cells(cfg: ExperimentConfig) -> list[Cell]:
    cells = [Cell("base", v, s) for v in BASE_VARIANTS for s in cfg.seeds]
    cells += [Cell("no_scaling", "full", s, scaling_enabled=False) for s in cfg.seeds]
    cells += [Cell("no_gate", "full", s, gate_enabled=False) for s in cfg.seeds]
    for a in cfg.ablate_alphas:
        cells += [Cell(f"alpha_{a:g}", "full", s, alpha=a, clear_per_task_alpha=True)
                  for s in cfg.seeds]
    return cells
