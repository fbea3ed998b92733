"""The ten acceptance criteria, one test each, each printing its verdict."""

import pytest

from wsa.acceptance import CHECKS, run_check


@pytest.mark.parametrize("number", [n for n, _, _ in CHECKS], ids=[f"criterion_{n}" for n, _, _ in CHECKS])
def test_criterion(number, capsys):
    res = run_check(number)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
