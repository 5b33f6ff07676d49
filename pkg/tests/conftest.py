from pathlib import Path

import pytest

from lazy_pta.lang import parse_program

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
GOLDEN = HERE / "golden"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load(name: str):
    return parse_program((FIXTURES / name).read_text())


@pytest.fixture
def fig1():
    return load("fig1.pt")


@pytest.fixture
def fig2():
    return load("fig2.pt")


@pytest.fixture
def fig5():
    return load("fig5.pt")


@pytest.fixture
def fig8():
    return load("fig8.pt")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
