import json
import os

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))
_ACCEPTANCE = []


@pytest.fixture(scope="session")
def frozen():
    with open(os.path.join(HERE, "oracles", "frozen.json")) as fh:
        return json.load(fh)


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
