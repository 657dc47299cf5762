"""Acceptance criteria at their stated tolerances; one PASS/FAIL line each (run with ``-s``)."""

import pytest

from wgqed.acceptance import CRITERIA


@pytest.mark.parametrize("criterion", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(criterion):
    res = criterion()
    print(res.line())
    assert res.passed, res.line()
