import functools
import os
from pathlib import Path

import numpy as np
import pytest

from softremish.activations import MISH, RELU, SOFTPLUS, SOFTREMISH, TANH, ActivationKind

DATA = Path(__file__).parent / "data"

# every activation the gradient checks must cover
GRAD_KINDS = [RELU, TANH, SOFTPLUS, MISH, ActivationKind("softremish", 1.0), SOFTREMISH]
GRAD_IDS = [k.label for k in GRAD_KINDS]


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture(scope="session")
def mnist_dir():
    from softremish.mnist import mnist_available

    d = os.environ.get("MNIST_DIR")
    if not mnist_available(d):
        pytest.skip("real MNIST files not found (set MNIST_DIR to a directory with the IDX files)")
    return Path(d)


# --------------------------------------------------------------------------
# one PASS/FAIL line per acceptance criterion in the terminal summary

_criteria = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].split("[")[0]
    entry = _criteria.setdefault(name, {"outcome": "passed", "duration": 0.0, "reason": ""})
    entry["duration"] += report.duration
    if report.skipped and entry["outcome"] != "failed":
        entry["outcome"] = "skipped"
        if isinstance(report.longrepr, tuple):
            entry["reason"] = report.longrepr[2]
    elif report.failed:
        entry["outcome"] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    labels = {"passed": "PASS", "failed": "FAIL", "skipped": "NOT RUN"}
    for name in sorted(_criteria, key=lambda n: int(n.split("_")[2]) if n.split("_")[2].isdigit() else 99):
        e = _criteria[name]
        line = f"{labels[e['outcome']]:<8} {name}  ({e['duration']:.1f}s)"
        if e["reason"]:
            line += f"  -- {e['reason']}"
        terminalreporter.write_line(line)


# --------------------------------------------------------------------------
# shared synthetic training runs (several test modules inspect the same runs)

SYNTH_SEED, SYNTH_N, SYNTH_EPOCHS = 42, 2000, 3


@functools.lru_cache(maxsize=None)
def synthetic_run(kind):
    from softremish.mnist import synthetic_split
    from softremish.trainer import TrainConfig, train

    train_ds, val_ds = synthetic_split(SYNTH_SEED, SYNTH_N)
    cfg = TrainConfig(activation=kind, epochs=SYNTH_EPOCHS, synthetic=SYNTH_N, data_seed=SYNTH_SEED)
    return train(cfg, train_ds, val_ds)
