import shutil
from pathlib import Path

import pytest

from gradguide import config as cfgmod
from gradguide.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

TINY = """
[sequence]
regime = homogeneous
num_tasks = 2
samples_per_task = 120
test_per_task = 40
input_dim = 6
classes_per_task = 2

[model]
hidden_dims = 8
adapter_rank = 0

[train]
variant = full
lr = 0.05
batch_size = 16
epochs_per_task = 1
replay_capacity = 5

[guidance]
alpha = 0.2

[experiment]
seeds = 0,1

[ablate]
alphas = 0.1,0.5
"""


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY)
    return p


def test_shipped_configs_load():
    h = cfgmod.load(CONFIGS / "homogeneous.cfg")
    s = cfgmod.load(CONFIGS / "shifted.cfg")
    assert h.train.guidance.alpha == 0.2 and h.sequence.regime == "homogeneous"
    assert s.sequence.regime == "shifted" and dict(s.train.per_task_alpha)[3] == 0.05


def test_dumps_round_trips(tiny, tmp_path):
    cfg = cfgmod.load(tiny, {"per_task_alpha.1": "0.3"})
    again = tmp_path / "again.cfg"
    again.write_text(cfgmod.dumps(cfg))
    assert cfgmod.load(again) == cfg


def test_missing_required_field_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text(TINY.replace("lr = 0.05\n", ""))
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "train.lr" in capsys.readouterr().err


@pytest.mark.parametrize("override, field", [
    ("--train.variant=bogus", "train"),
    ("--guidance.alpha=2", "guidance.alpha"),
    ("--per_task_alpha.0=0.1", "per_task_alpha.0"),
    ("--experiment.seeds=1,1", "experiment.seeds"),
    ("--nosuch.key=1", "nosuch.key"),
])
def test_invalid_values_exit_2(tiny, tmp_path, capsys, override, field):
    assert main(["run", "--config", str(tiny), "--out", str(tmp_path / "o"), override]) == 2
    assert field in capsys.readouterr().err


def test_override_tags_summary(tiny, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(tiny), "--out", str(out), "--seeds", "3",
                 "--train.variant=sequential"]) == 0
    rows = (out / "summary.csv").read_text().splitlines()
    assert len(rows) == 2 and rows[1].startswith("base,sequential,3,")
    assert (out / "base/sequential/seed3/matrix.csv").exists()
    assert "variant = sequential" in (out / "config.cfg").read_text()


def test_space_separated_override(tiny, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(tiny), "--out", str(out), "--train.variant", "replay_only"]) == 0
    assert "replay_only" in (out / "summary.csv").read_text()


def test_output_root_env(tiny, tmp_path, monkeypatch):
    monkeypatch.setenv("GRADGUIDE_OUTPUT_ROOT", str(tmp_path / "root"))
    assert main(["run", "--config", str(tiny), "--seeds", "0"]) == 0
    assert (tmp_path / "root/tiny/summary.csv").exists()


def test_runs_are_byte_identical(tiny, tmp_path):
    for d in ("a", "b"):
        assert main(["run", "--config", str(tiny), "--out", str(tmp_path / d)]) == 0
    for rel in ("base/full/seed0/matrix.csv", "base/full/seed1/steps.csv", "summary.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_ablate_grid_and_plot(tiny, tmp_path):
    out = tmp_path / "abl"
    assert main(["ablate", "--config", str(tiny), "--out", str(out)]) == 0
    rows = (out / "ablation_summary.csv").read_text().splitlines()[1:]
    tags = [r.split(",")[0] for r in rows]
    assert tags.count("base") == 5 * 2
    assert tags.count("no_scaling") == 2 and tags.count("no_gate") == 2
    assert tags.count("alpha_0.1") == 2 and tags.count("alpha_0.5") == 2
    assert len(rows) == 10 + 2 + 2 + 4

    plots = tmp_path / "plots"
    assert main(["plot", str(out / "ablation_summary.csv"), "--out", str(plots)]) == 0
    first = {p.name: p.read_bytes() for p in plots.iterdir()}
    assert {"faa_by_variant.csv", "final_acc_by_task.csv", "faa_vs_alpha.csv"} <= set(first)
    assert main(["plot", str(out / "ablation_summary.csv"), "--out", str(plots)]) == 0
    assert {p.name: p.read_bytes() for p in plots.iterdir()} == first

    by_variant = (plots / "faa_by_variant.csv").read_text().splitlines()
    assert by_variant[0] == "ablation,variant,n,faa_mean,faa_min,faa_max"
    full = next(r for r in by_variant if r.startswith("base,full,"))
    n, mean, lo, hi = full.split(",")[2:]
    assert n == "2" and float(lo) <= float(mean) <= float(hi)


def test_plot_svg_is_idempotent(tiny, tmp_path):
    out = tmp_path / "abl"
    assert main(["ablate", "--config", str(tiny), "--out", str(out),
                 "--ablate.alphas=0.2"]) == 0
    plots = tmp_path / "plots"
    assert main(["plot", str(out / "ablation_summary.csv"), "--out", str(plots), "--svg"]) == 0
    svg = (plots / "faa_by_variant.svg").read_bytes()
    assert main(["plot", str(out / "ablation_summary.csv"), "--out", str(plots), "--svg"]) == 0
    assert (plots / "faa_by_variant.svg").read_bytes() == svg


def test_plot_rejects_empty_and_malformed(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("ablation,variant,seed,alpha,faa\r\n")
    assert main(["plot", str(empty)]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("foo,bar\r\n1,2\r\n")
    assert main(["plot", str(bad)]) == 2
    junk = tmp_path / "junk.csv"
    junk.write_text("ablation,variant,seed,alpha,faa\r\nbase,full,0,NA,notanumber\r\n")
    assert main(["plot", str(junk)]) == 2
    assert main(["plot", str(tmp_path / "missing.csv")]) == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_runtime_failure_exits_1(tiny, tmp_path):
    assert main(["run", "--config", str(tiny), "--out", str(tmp_path / "o"),
                 "--train.lr=1e300"]) == 1
