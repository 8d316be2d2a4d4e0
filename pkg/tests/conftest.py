import time

import numpy as np
import pytest

from floss import new_binary_map, new_saliency_map

# pass/fail lines of the acceptance module, printed at the end of the session
ACCEPTANCE_LINES = []


@pytest.fixture
def fixture4():
    """The 4-pixel hand-worked example."""
    pred = new_saliency_map(4, 1, [0.9, 0.2, 0.6, 0.1])
    gt = new_binary_map(4, 1, [1, 0, 1, 0])
    return pred, gt


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def benchmark():
    """Shipped benchmark runs (three losses plus the beta2 grid), trained once per session.

    The wall-clock time of the whole batch is stored under ``"seconds"``.
    """
    from floss.experiments import SHIPPED, beta2_configs, benchmark_split, run_benchmark

    start = time.perf_counter()
    split_sets = benchmark_split()
    configs = {k: SHIPPED[k] for k in ("floss", "logfloss", "ce")}
    configs.update(beta2_configs())
    runs = run_benchmark(configs, split_sets)
    runs["seconds"] = time.perf_counter() - start
    return runs
