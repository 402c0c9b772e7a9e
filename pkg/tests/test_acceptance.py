"""Acceptance criteria, one test and one printed pass/fail line each."""
import time

import pytest

from conftest import ACCEPTANCE_LINES
from quadsmc import verify

CRITERIA = [name for name, _ in verify.criterion.items]


@pytest.mark.parametrize("name", CRITERIA, ids=[n.split(":")[0].replace(" ", "_") for n in CRITERIA])
def test_criterion(run_check, name):
    t0 = time.perf_counter()
    passed, measured, limit = run_check(name)
    line = verify.format_check(verify.Check(name, bool(passed), measured, limit, time.perf_counter() - t0))
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, f"{measured} (limit {limit})"
