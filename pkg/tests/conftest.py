from pathlib import Path

import pytest

from qmclab.sequences import DIRECTION_NUMBERS_ENV, default_direction_numbers


@pytest.fixture(scope="session")
def records():
    return default_direction_numbers()


@pytest.fixture
def corrupted_fixture(tmp_path, monkeypatch):
    """Direction-number file whose dimension 2 breaks the (0,2)-sequence property."""
    from importlib.resources import files

    text = files("qmclab.data").joinpath("new-joe-kuo-6.50").read_text()
    lines = text.splitlines()
    assert lines[1].split() == ["2", "1", "0", "1"]
    lines[1] = "2 2 1 1 1"
    path = Path(tmp_path) / "corrupt.txt"
    path.write_text("\n".join(lines) + "\n")
    monkeypatch.setenv(DIRECTION_NUMBERS_ENV, str(path))
    return path


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
