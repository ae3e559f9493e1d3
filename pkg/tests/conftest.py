import json
from pathlib import Path

import numpy as np
import pytest

from phasetopo.dynamics import PhysicalModelSpec, build_model
from phasetopo.graphs import bidirected

ORACLES = Path(__file__).with_name("oracles") / "frozen.json"

_ACCEPTANCE: dict[int, str] = {}


def record_acceptance(criterion: int, passed: bool | None, detail: str) -> str:
    status = {True: "PASS", False: "FAIL", None: "INFO"}[passed]
    line = f"criterion {criterion:>2}: {status}  {detail}"
    _ACCEPTANCE[criterion] = line
    print(line)
    return line


@pytest.fixture(scope="session")
def frozen():
    return json.loads(ORACLES.read_text())


@pytest.fixture
def path_model():
    """Bidirected five-node consensus path with unit couplings and a small leak."""
    b = bidirected(5, [(k, k + 1, 1.0) for k in range(4)])
    return build_model(PhysicalModelSpec("consensus", b, ground=0.2), 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
