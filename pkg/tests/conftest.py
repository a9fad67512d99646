import json
from pathlib import Path

import numpy as np
import pytest

from dualrefine.field_core import DisparityField, Grid2D, UncertaintyField

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def load_fixture(name):
    """(inputs, expected, tolerance) for a golden fixture ``module.case``."""
    entry = json.loads((FIXTURES / "manifest.json").read_text())[name]
    inputs = json.loads((FIXTURES / entry["inputs"]).read_text())
    expected = json.loads((FIXTURES / entry["expected"]).read_text())
    return inputs, expected, entry["tolerance"]


def disp(values, valid=None):
    return DisparityField.from_array(np.asarray(values, dtype=np.float64), valid)


def unc(values):
    return UncertaintyField.from_array(np.asarray(values, dtype=np.float64))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one "PASS/FAIL criterion N: ..." line per acceptance criterion, repeated
# in the terminal summary so it survives output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
