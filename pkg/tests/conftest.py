import re

import numpy as np
import pytest

from twoscale_sl.fields import FocusingConfig
from twoscale_sl.geometry import PhaseGrid, TauGrid


@pytest.fixture
def small_grid():
    return PhaseGrid(3.0, 3.0, 16, 16)


@pytest.fixture
def tau16():
    return TauGrid(16)


@pytest.fixture
def resonant_linear():
    # omega1 = 2, H1 = cos^2, no self-field: averaged fields are (-u/4, q/4)
    return FocusingConfig(1e-2, 2.0, True, "cos2", self_field=False)


@pytest.fixture
def stationary_linear():
    return FocusingConfig(1e-2, 4.0 * np.sqrt(2.0), False, "cos", self_field=False)


def gauss2(r, v, s=0.5):
    return np.exp(-(r * r + v * v) / (2.0 * s * s))


def pytest_configure(config):
    config._acceptance_lines = {}


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(key, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}"
        print(line)
        request.config._acceptance_lines[key] = line
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
            terminalreporter.write_line(lines[key])
