"""Experiment configuration files (INI-style ``.cfg``) and dotted overrides.

A config has the sections ``sequence``, ``model``, ``train``, ``guidance``,
``per_task_alpha`` (``task_id = alpha``), ``experiment`` and ``ablate``.
Overrides use dotted keys, e.g. ``train.variant=sequential``.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from pathlib import Path

from .guidance import GuidanceConfig
from .model import ModelConfig
from .tasks import SequenceSpec
from .trainer import TrainConfig

REQUIRED = (
    ("sequence", "regime"),
    ("sequence", "num_tasks"),
    ("train", "variant"),
    ("train", "lr"),
    ("train", "batch_size"),
    ("train", "epochs_per_task"),
    ("guidance", "alpha"),
    ("experiment", "seeds"),
)

_SECTIONS = ("sequence", "model", "train", "guidance", "per_task_alpha", "experiment", "ablate")

DEFAULT_ALPHAS = (0.1, 0.2, 0.3, 0.4, 0.5)


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending dotted key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class ExperimentConfig:
    sequence: SequenceSpec
    model: ModelConfig
    train: TrainConfig
    seeds: tuple[int, ...]
    output_dir: str | None = None
    ablate_alphas: tuple[float, ...] = DEFAULT_ALPHAS
    per_task_alpha: dict[int, float] = field(default_factory=dict)

    def for_seed(self, seed: int) -> tuple[SequenceSpec, ModelConfig, TrainConfig]:
        return (
            dataclasses.replace(self.sequence, seed=seed),
            dataclasses.replace(self.model, seed=seed),
            dataclasses.replace(self.train, seed=seed),
        )


def _parse_list(text: str, cast) -> tuple:
    return tuple(cast(x.strip()) for x in text.split(",") if x.strip())


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_parser(path, overrides: dict[str, str] | None = None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"cannot parse {path}: {exc}") from exc
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if not name:
            raise ConfigError(key, "override keys must look like section.key")
        if section not in _SECTIONS:
            raise ConfigError(key, f"unknown section {section!r}")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value)
    return cp


def _get(cp, section, key, cast, default=dataclasses.MISSING):
    dotted = f"{section}.{key}"
    if not cp.has_option(section, key):
        if default is dataclasses.MISSING:
            raise ConfigError(dotted, "required field is missing")
        return default
    raw = cp.get(section, key)
    try:
        return cast(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(dotted, f"invalid value {raw!r} ({exc})") from exc


def from_parser(cp: configparser.ConfigParser) -> ExperimentConfig:
    for section, key in REQUIRED:
        if not cp.has_option(section, key):
            raise ConfigError(f"{section}.{key}", "required field is missing")
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(section, "unknown section")

    sd = SequenceSpec()
    try:
        seq = SequenceSpec(
            regime=_get(cp, "sequence", "regime", str.strip),
            num_tasks=_get(cp, "sequence", "num_tasks", int),
            samples_per_task=_get(cp, "sequence", "samples_per_task", int, sd.samples_per_task),
            test_per_task=_get(cp, "sequence", "test_per_task", int, sd.test_per_task),
            input_dim=_get(cp, "sequence", "input_dim", int, sd.input_dim),
            classes_per_task=_get(cp, "sequence", "classes_per_task", int, sd.classes_per_task),
            shift_magnitude=_get(cp, "sequence", "shift_magnitude", float, sd.shift_magnitude),
            cluster_std=_get(cp, "sequence", "cluster_std", float, sd.cluster_std),
            separation=_get(cp, "sequence", "separation", float, sd.separation),
            class_budget=_get(cp, "sequence", "class_budget", int, sd.class_budget),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("sequence", str(exc)) from exc

    md = ModelConfig()
    try:
        model = ModelConfig(
            input_dim=seq.input_dim,
            hidden_dims=_get(cp, "model", "hidden_dims", lambda s: _parse_list(s, int), md.hidden_dims),
            num_classes=_get(cp, "model", "num_classes", int, seq.num_classes),
            adapter_rank=_get(cp, "model", "adapter_rank", int, md.adapter_rank),
            init_std=_get(cp, "model", "init_std", float, md.init_std),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from exc
    if model.num_classes < seq.num_classes:
        raise ConfigError("model.num_classes",
                          f"{model.num_classes} < {seq.num_classes} classes in the sequence")

    try:
        guidance = GuidanceConfig(
            alpha=_get(cp, "guidance", "alpha", float),
            scaling_enabled=_get(cp, "guidance", "scaling_enabled", _parse_bool, True),
            gate_enabled=_get(cp, "guidance", "gate_enabled", _parse_bool, True),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("guidance.alpha", str(exc)) from exc

    per_task = {}
    if cp.has_section("per_task_alpha"):
        for key, raw in cp.items("per_task_alpha"):
            try:
                tid, a = int(key), float(raw)
            except ValueError as exc:
                raise ConfigError(f"per_task_alpha.{key}", f"invalid entry ({exc})") from exc
            if not 1 <= tid < seq.num_tasks:
                raise ConfigError(f"per_task_alpha.{key}",
                                  f"task id must be in [1, {seq.num_tasks - 1}]; task 0 takes no alpha")
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"per_task_alpha.{key}", f"alpha {a} outside [0, 1]")
            per_task[tid] = a

    td = TrainConfig()
    try:
        train = TrainConfig(
            variant=_get(cp, "train", "variant", str.strip),
            lr=_get(cp, "train", "lr", float),
            batch_size=_get(cp, "train", "batch_size", int),
            epochs_per_task=_get(cp, "train", "epochs_per_task", int),
            guidance=guidance,
            replay_capacity=_get(cp, "train", "replay_capacity", int, td.replay_capacity),
            per_task_alpha=tuple(sorted(per_task.items())),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("train", str(exc)) from exc

    seeds = _get(cp, "experiment", "seeds", lambda s: _parse_list(s, int))
    if not seeds:
        raise ConfigError("experiment.seeds", "at least one seed is required")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("experiment.seeds", "seeds must be distinct")
    if any(s < 0 for s in seeds):
        raise ConfigError("experiment.seeds", "seeds must be nonnegative")
    output_dir = _get(cp, "experiment", "output_dir", str.strip, None)
    alphas = _get(cp, "ablate", "alphas", lambda s: _parse_list(s, float), DEFAULT_ALPHAS)
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise ConfigError("ablate.alphas", "every alpha must lie in [0, 1]")
    return ExperimentConfig(seq, model, train, tuple(seeds), output_dir, tuple(alphas), per_task)


def load(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    return from_parser(read_parser(path, overrides))


def dumps(cfg: ExperimentConfig) -> str:
    """Render a fully-resolved config; reading it back reproduces ``cfg``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    s, m, t, g = cfg.sequence, cfg.model, cfg.train, cfg.train.guidance
    cp["sequence"] = {k: str(v) for k, v in dataclasses.asdict(s).items() if k != "seed"}
    cp["model"] = {
        "hidden_dims": ",".join(str(h) for h in m.hidden_dims),
        "num_classes": str(m.num_classes),
        "adapter_rank": str(m.adapter_rank),
        "init_std": repr(m.init_std),
    }
    cp["train"] = {
        "variant": t.variant, "lr": repr(t.lr), "batch_size": str(t.batch_size),
        "epochs_per_task": str(t.epochs_per_task), "replay_capacity": str(t.replay_capacity),
    }
    cp["guidance"] = {"alpha": repr(g.alpha), "scaling_enabled": str(g.scaling_enabled).lower(),
                      "gate_enabled": str(g.gate_enabled).lower()}
    cp["per_task_alpha"] = {str(k): repr(v) for k, v in t.per_task_alpha}
    exp = {"seeds": ",".join(str(x) for x in cfg.seeds)}
    if cfg.output_dir is not None:
        exp["output_dir"] = cfg.output_dir
    cp["experiment"] = exp
    cp["ablate"] = {"alphas": ",".join(repr(a) for a in cfg.ablate_alphas)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
