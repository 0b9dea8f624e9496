import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from wnnimpute.data import MISSING, CategoricalMatrix  # noqa: E402


def random_matrix(rng, n, p, kmax=4, miss=0.2, ks=None, min_obs=2):
    """Random CategoricalMatrix with every column keeping ``min_obs`` distinct
    observed values, so association measures are well defined."""
    if ks is None:
        ks = rng.integers(2, kmax + 1, size=p)
    ks = np.asarray(ks)
    while True:
        codes = np.column_stack([rng.integers(1, k + 1, size=n) for k in ks]).astype(np.int32)
        hide = rng.random((n, p)) < miss
        codes[hide] = MISSING
        ok = all(len(set(codes[codes[:, s] != MISSING, s].tolist())) >= min_obs for s in range(p))
        if ok:
            return CategoricalMatrix.from_codes(codes, ks.tolist())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ----------------------------------------------------- acceptance reporting

ACCEPTANCE_RESULTS = []


@pytest.fixture
def report_criterion():
    """Record one acceptance verdict; printed in the terminal summary."""
    def _record(number, passed, detail):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        line = f"criterion {number}: {status} | {detail}"
        ACCEPTANCE_RESULTS.append((number, line))
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_RESULTS, key=lambda x: x[0]):
        terminalreporter.write_line(line)
