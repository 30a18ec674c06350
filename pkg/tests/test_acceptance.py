"""Acceptance suite: one test per criterion, each prints a single pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
a summary block is also printed at the end of the session.
"""

import pytest

from curvedecay import acceptance

_LINES: dict[int, str] = {}


@pytest.fixture(scope="module", autouse=True)
def _summary():
    yield
    print("\n" + "\n".join(_LINES[k] for k in sorted(_LINES)))


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    res = acceptance.CRITERIA[number]()
    _LINES[number] = res.line()
    with capsys.disabled():
        print("\n" + res.line())
        for d in res.details:
            print("    " + d)
    assert res.passed, "\n".join(res.details)
