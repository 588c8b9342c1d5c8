import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion id -> (passed, detail); filled by the acceptance module
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


def gen(seed):
    return np.random.Generator(np.random.PCG64(seed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE_RESULTS):
        ok, name, detail = ACCEPTANCE_RESULTS[cid]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {cid:2d}. {name}: {detail}")
