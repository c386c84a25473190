import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def direct_dft(x):
    """O(N^2) reference DFT of each row with the 1/N factor."""
    x = np.asarray(x)
    N = x.shape[-1]
    n = np.arange(N)
    E = np.exp(-2j * np.pi * np.outer(n, n) / N)
    return x @ E.T / N


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, list] = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    entry = ACCEPTANCE.setdefault(criterion, [True, []])
    entry[0] = entry[0] and passed
    entry[1].append(detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, details = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'} | " + "; ".join(details))
