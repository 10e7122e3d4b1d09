import numpy as np
import pytest

from onlinemetric import rng as rngmod

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict = {}


def record(num: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[num] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return rngmod.spawn(1234, rngmod.TESTS)


def random_points(seed: int, n: int, d: int = 2) -> np.ndarray:
    return rngmod.spawn(seed, rngmod.TESTS, n, d).random((n, d))
