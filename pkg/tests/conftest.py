import os
from pathlib import Path

import numpy as np
import pytest

from inarcusum.model import InarModel, InnovationSpec

DATA_DIRS = [Path(os.environ["INARCUSUM_DATA_DIR"])] if os.environ.get("INARCUSUM_DATA_DIR") else []
DATA_DIRS.append(Path(__file__).parent / "data")


def find_dataset(name):
    for directory in DATA_DIRS:
        path = directory / f"{name}.csv"
        if path.exists():
            return path
    return None


def dataset_or_skip(name, label=None):
    path = find_dataset(name)
    if path is None:
        reason = (
            f"dataset {name}.csv not found in {[str(d) for d in DATA_DIRS]}; "
            "run scripts/fetch_datasets.py or set INARCUSUM_DATA_DIR"
        )
        if label is not None:
            skip_criterion(label, reason)
        pytest.skip(reason)
    return path


@pytest.fixture
def inar1():
    return InarModel((0.3,), InnovationSpec.poisson(1.0))


@pytest.fixture
def inar2():
    return InarModel((0.4, 0.25), InnovationSpec.negative_binomial(1.5, 3.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail=""):
    """Log one acceptance line; the lines are replayed in the terminal summary."""
    status = "PASS" if ok else "FAIL"
    line = f"{status} {label}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def skip_criterion(label, reason):
    ACCEPTANCE_LINES.append(f"SKIP {label}: {reason}")
    pytest.skip(reason)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
