"""``gradguide`` command line: ``run``, ``ablate`` and ``plot``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .experiment import ablation_cells, run_cells, run_cells_for
from .metrics import NA, _fmt, _write_rows, write_summary

log = logging.getLogger("gradguide")

OUTPUT_ROOT_ENV = "GRADGUIDE_OUTPUT_ROOT"


class UsageError(Exception):
    pass


def _split_overrides(extra: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or "." not in tok:
            raise UsageError(f"unrecognised argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise UsageError(f"override {tok} needs a value")
        overrides[key] = value
    return overrides


def _resolve(args, extra) -> tuple[cfgmod.ExperimentConfig, Path]:
    overrides = _split_overrides(extra)
    if args.seeds is not None:
        overrides["experiment.seeds"] = args.seeds
    cfg = cfgmod.load(args.config, overrides)
    if args.out is not None:
        out = Path(args.out)
    elif cfg.output_dir:
        out = Path(cfg.output_dir)
    else:
        out = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs")) / Path(args.config).stem
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(cfgmod.dumps(cfg))
    return cfg, out


def cmd_run(args, extra) -> int:
    cfg, out = _resolve(args, extra)
    results = run_cells(cfg, run_cells_for(cfg), out, jobs=args.jobs)
    write_summary(results, out / "summary.csv")
    log.info("wrote %d run(s) to %s", len(results), out)
    return 0


def cmd_ablate(args, extra) -> int:
    cfg, out = _resolve(args, extra)
    results = run_cells(cfg, ablation_cells(cfg), out, jobs=args.jobs)
    write_summary(results, out / "ablation_summary.csv")
    log.info("wrote %d ablation run(s) to %s", len(results), out)
    return 0


def _band(values: list[float]) -> list[str]:
    v = np.asarray(values, dtype=float)
    return [str(len(v)), _fmt(v.mean()), _fmt(v.min()), _fmt(v.max())]


def plot_data(rows: list[dict[str, str]]) -> dict[str, list[list[str]]]:
    """Aggregate summary rows into per-figure tables (mean and min-max band)."""
    faa = defaultdict(list)
    per_task = defaultdict(list)
    by_alpha = defaultdict(list)
    new_task = defaultdict(list)
    task_cols = sorted((k for k in rows[0] if k.startswith("final_acc_task")),
                       key=lambda k: int(k[len("final_acc_task"):]))
    for r in rows:
        key = (r["ablation"], r["variant"])
        faa[key].append(float(r["faa"]))
        finals = [(int(c[len("final_acc_task"):]), r[c]) for c in task_cols if r[c] != NA]
        for t, v in finals:
            per_task[key + (t,)].append(float(v))
        if r["ablation"].startswith("alpha_"):
            a = float(r["alpha"])
            by_alpha[a].append(float(r["faa"]))
            new_task[a].append(float(finals[-1][1]))

    figs = {
        "faa_by_variant.csv": [["ablation", "variant", "n", "faa_mean", "faa_min", "faa_max"]]
        + [[a, v] + _band(x) for (a, v), x in sorted(faa.items())],
        "final_acc_by_task.csv": [["ablation", "variant", "task", "n", "acc_mean", "acc_min", "acc_max"]]
        + [[a, v, str(t)] + _band(x) for (a, v, t), x in sorted(per_task.items())],
    }
    if by_alpha:
        figs["faa_vs_alpha.csv"] = [["alpha", "n", "faa_mean", "faa_min", "faa_max",
                                     "new_task_acc_mean"]] + [
            [_fmt(a)] + _band(x) + [_fmt(np.mean(new_task[a]))] for a, x in sorted(by_alpha.items())
        ]
    return figs


def _render_svg(figs: dict[str, list[list[str]]], out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "gradguide"
    import matplotlib.pyplot as plt

    rows = figs["faa_by_variant.csv"][1:]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    labels = [f"{a}\n{v}" for a, v, *_ in rows]
    mean = np.array([float(r[3]) for r in rows])
    lo = np.array([float(r[4]) for r in rows])
    hi = np.array([float(r[5]) for r in rows])
    ax.bar(range(len(rows)), mean, yerr=[mean - lo, hi - mean], capsize=3)
    ax.set_xticks(range(len(rows)), labels, fontsize=6)
    ax.set_ylabel("FAA")
    fig.tight_layout()
    fig.savefig(out / "faa_by_variant.svg", metadata={"Date": None})
    plt.close(fig)

    if "faa_vs_alpha.csv" in figs:
        rows = figs["faa_vs_alpha.csv"][1:]
        a = [float(r[0]) for r in rows]
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.plot(a, [float(r[2]) for r in rows], marker="o")
        ax.fill_between(a, [float(r[3]) for r in rows], [float(r[4]) for r in rows], alpha=0.3)
        ax.set_xlabel("alpha")
        ax.set_ylabel("FAA")
        fig.tight_layout()
        fig.savefig(out / "faa_vs_alpha.svg", metadata={"Date": None})
        plt.close(fig)


def cmd_plot(args, extra) -> int:
    if extra:
        raise UsageError(f"unrecognised arguments: {' '.join(extra)}")
    path = Path(args.summary_csv)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    required = {"ablation", "variant", "seed", "alpha", "faa"}
    if not rows:
        print(f"error: {path} has no data rows", file=sys.stderr)
        return 2
    if not required <= set(rows[0]):
        print(f"error: {path} lacks columns {sorted(required - set(rows[0]))}", file=sys.stderr)
        return 2
    try:
        figs = plot_data(rows)
    except (ValueError, TypeError, IndexError) as exc:
        print(f"error: malformed summary CSV {path}: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else path.parent / "plots"
    out.mkdir(parents=True, exist_ok=True)
    for name, table in figs.items():
        _write_rows(out / name, table)
    if args.svg:
        _render_svg(figs, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gradguide", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("run", cmd_run, "train the configured variant for every seed"),
        ("ablate", cmd_ablate, "run the variant grid, toggle ablations and alpha sweep"),
    ):
        sp = sub.add_parser(name, help=help_,
                            epilog="extra --section.key=value flags override config entries")
        sp.add_argument("--config", required=True, help="path to a .cfg experiment file")
        sp.add_argument("--seeds", help="comma-separated seeds, e.g. 1,2,3")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("plot", help="turn a summary CSV into per-figure data files")
    sp.add_argument("summary_csv")
    sp.add_argument("--out", help="directory for plot data (default: <csv dir>/plots)")
    sp.add_argument("--svg", action="store_true", help="also render SVG figures")
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, extra)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except cfgmod.ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 1
        log.exception("run failed: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
