from pathlib import Path

import hypothesis
import numpy as np
import pytest

from agnostic.data import Dataset, load_csv

hypothesis.settings.register_profile("default", deadline=None, max_examples=50)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
WINE = ROOT / "data" / "winequality-red.csv"


@pytest.fixture(scope="session")
def wine():
    return load_csv(WINE, "Quality")


def make_data(x, y):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return Dataset(x, y, [f"x{j}" for j in range(x.shape[1])])


# criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for label in sorted(ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
            ok, detail = ACCEPTANCE[label]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
