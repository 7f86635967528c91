"""Accuracy matrices, final average accuracy, forgetting and CSV export."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NA = "NA"


@dataclass
class AccuracyMatrix:
    """``values[t, i]`` is accuracy on task ``i`` after training stage ``t``.

    Entries not yet defined (task ``i`` unseen at stage ``t``) hold NaN and are
    written as ``NA``. A multitask run has a single row.
    """

    values: np.ndarray
    test_sizes: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.test_sizes = np.asarray(self.test_sizes, dtype=np.int64)
        if self.values.ndim != 2 or self.values.shape[1] != self.test_sizes.shape[0]:
            raise ValueError("values must be (stages, tasks) matching test_sizes")
        if np.any(self.test_sizes <= 0):
            raise ValueError("test sizes must be positive")
        defined = self.values[~np.isnan(self.values)]
        if np.any((defined < 0) | (defined > 1)):
            raise ValueError("accuracies must lie in [0, 1]")

    @classmethod
    def empty(cls, stages: int, test_sizes) -> "AccuracyMatrix":
        sizes = np.asarray(test_sizes)
        return cls(np.full((stages, len(sizes)), np.nan), sizes)

    @property
    def num_tasks(self) -> int:
        return self.values.shape[1]

    @property
    def final_row(self) -> np.ndarray:
        return self.values[-1]


def faa(m: AccuracyMatrix) -> float:
    """Final accuracies averaged with weights proportional to test-set size."""
    last = m.final_row
    if np.any(np.isnan(last)):
        raise ValueError("final row of the accuracy matrix has undefined entries")
    w = m.test_sizes / m.test_sizes.sum()
    return float(np.dot(w, last))


def faa_unweighted(m: AccuracyMatrix) -> float:
    last = m.final_row
    if np.any(np.isnan(last)):
        raise ValueError("final row of the accuracy matrix has undefined entries")
    return float(np.mean(last))


def forgetting(m: AccuracyMatrix) -> float:
    """Mean drop from best-ever to final accuracy over all but the last task."""
    if m.values.shape[0] < 2 or m.num_tasks < 2:
        raise ValueError("forgetting needs at least two training stages")
    last = m.final_row
    drops = [np.nanmax(m.values[:, i]) - last[i] for i in range(m.num_tasks - 1)]
    return float(np.mean(drops))


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return NA
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def _parse(s: str) -> float:
    return np.nan if s == NA else float(s)


def export(m: AccuracyMatrix, path) -> None:
    header = ["stage"] + [f"task{i}" for i in range(m.num_tasks)]
    rows = [header]
    for t, row in enumerate(m.values):
        rows.append([str(t)] + [_fmt(v) for v in row])
    rows.append(["test_size"] + [str(int(s)) for s in m.test_sizes])
    _write_rows(path, rows)


def read_matrix(path) -> AccuracyMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or rows[-1][0] != "test_size":
        raise ValueError(f"{path} is not an accuracy matrix CSV")
    values = [[_parse(v) for v in row[1:]] for row in rows[1:-1]]
    sizes = [int(v) for v in rows[-1][1:]]
    return AccuracyMatrix(np.array(values), np.array(sizes))


@dataclass
class RunResult:
    variant: str
    seed: int
    matrix: AccuracyMatrix
    ablation: str = "base"
    alpha: float | None = None


SUMMARY_BASE = ["ablation", "variant", "seed", "alpha", "faa", "faa_unweighted", "forgetting"]


def summary_table(runs: list[RunResult]) -> list[list[str]]:
    """Header plus one row per run, stably sorted by (ablation, variant, seed)."""
    num_tasks = max((r.matrix.num_tasks for r in runs), default=0)
    header = SUMMARY_BASE + [f"final_acc_task{i}" for i in range(num_tasks)]
    ordered = sorted(runs, key=lambda r: (r.ablation, r.variant, r.seed))
    rows = [header]
    for r in ordered:
        m = r.matrix
        forget = forgetting(m) if m.values.shape[0] >= 2 else None
        accs = [_fmt(a) for a in m.final_row] + [NA] * (num_tasks - m.num_tasks)
        rows.append([r.ablation, r.variant, str(r.seed), _fmt(r.alpha), _fmt(faa(m)),
                     _fmt(faa_unweighted(m)), _fmt(forget)] + accs)
    return rows


def _write_rows(path, rows) -> None:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(rows)
    Path(path).write_text(buf.getvalue(), newline="")


def write_summary(runs: list[RunResult], path) -> None:
    _write_rows(path, summary_table(runs))


def read_summary(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
