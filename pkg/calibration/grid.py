"""Sweep lr, epochs, replay capacity and shift over the shipped configs.

Usage: python3 calibration/grid.py calibration/grid.jsonl
Appends one JSON line per setting with (FAA, newest-task accuracy) per seed
for every ablation cell. The homogeneous grid does not depend on shift, so it
is only run once per (lr, epochs, capacity).
"""
import itertools
import json
import sys
from pathlib import Path

from gradguide import config
from gradguide.experiment import ablation_cells, run_cells
from gradguide.metrics import faa

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def evaluate(name, overrides):
    cfg = config.load(CONFIGS / f"{name}.cfg", overrides)
    cells = {}
    for r in run_cells(cfg, ablation_cells(cfg)):
        cells.setdefault(f"{r.ablation}:{r.variant}", []).append(
            (faa(r.matrix), float(r.matrix.final_row[-1])))
    return cells


def main(path):
    with open(path, "a") as out:
        for lr, ep, cap, shift in itertools.product(
                (0.02, 0.05, 0.2), (2, 5), (5, 10, 20), (2.0, 4.0, 8.0)):
            ov = {"train.lr": str(lr), "train.epochs_per_task": str(ep),
                  "train.replay_capacity": str(cap)}
            h = evaluate("homogeneous", ov) if shift == 2.0 else None
            s = evaluate("shifted", {**ov, "sequence.shift_magnitude": str(shift)})
            out.write(json.dumps({"lr": lr, "ep": ep, "cap": cap, "shift": shift,
                                  "h": h, "s": s}) + "\n")
            out.flush()


if __name__ == "__main__":
    main(sys.argv[1])
