import sys
from pathlib import Path

import pytest

from mivarnet import load_net

DATA = Path(__file__).parent / "data"
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def triangle():
    net, _ = load_net(DATA / "triangle.xml")
    return net


@pytest.fixture
def worked():
    """Three-rule net laid out like the step-by-step matrix example."""
    net, _ = load_net(DATA / "worked_example.xml")
    return net


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
