import sys
from pathlib import Path

import pytest

from csched.catalog import mri_instance, mri_nodes, mri_workflows

DATA = Path(__file__).parent / "data"


@pytest.fixture
def nodes():
    return mri_nodes()


@pytest.fixture
def w1():
    return mri_workflows()[0]


@pytest.fixture
def w2():
    return mri_workflows()[1]


@pytest.fixture
def inst():
    return mri_instance()


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
