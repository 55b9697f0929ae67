import json
import time
from pathlib import Path

import numpy as np
import pytest

from sauna.grid import BinaryMask

FIXTURES = Path(__file__).parent / "fixtures"

GOLDEN_ROW = [0, 0, 1, 1, 1, 0, 0]


@pytest.fixture
def row_mask():
    return BinaryMask(np.array([GOLDEN_ROW]))


@pytest.fixture(scope="session")
def timed_experiment():
    from sauna.trainer import run_experiment

    t0 = time.perf_counter()
    result = run_experiment(seed=7, n_train=20, n_test=10, epochs=200)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def experiment(timed_experiment):
    return timed_experiment[0]


@pytest.fixture(scope="session")
def frozen_experiment():
    return json.loads((FIXTURES / "experiment_seed7.json").read_text())


def write_pgm(path, arr):
    arr = np.asarray(arr, dtype=np.uint8)
    h, w = arr.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + arr.tobytes())


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
