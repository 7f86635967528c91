import numpy as np
import pytest

from gradguide.model import Batch, ModelConfig, init
from gradguide.numerics import Rng


@pytest.fixture
def rng():
    return Rng(1234)


def random_batch(seed, n=8, input_dim=5, num_classes=4, task_id=0):
    g = np.random.default_rng(seed)
    return Batch(g.normal(size=(n, input_dim)), g.integers(0, num_classes, size=n), task_id)


def perturbed_params(cfg: ModelConfig, seed: int, scale: float = 0.5):
    """Initialised params with every entry (including zero-init B and biases) randomised."""
    params = init(cfg)
    g = np.random.default_rng(seed)
    return params.replace({k: v + scale * g.normal(size=v.shape) for k, v in params.items()})


_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""
    def _report(name: str, ok: bool, detail: str = "") -> bool:
        _CRITERIA.append((name, bool(ok), detail))
        return bool(ok)
    return _report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
