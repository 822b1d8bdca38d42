import math

import numpy as np
import pytest

from visangle import support


@pytest.fixture(scope="session")
def unit_disc():
    return support.disc(1.0)


@pytest.fixture(scope="session")
def ellipse_like():
    """Centrally symmetric, not of constant width."""
    return support.FourierSupport.from_harmonics(1.0, {2: (0.1, 0.0)})


@pytest.fixture(scope="session")
def triangle_like():
    """Smooth constant-width body."""
    return support.FourierSupport.from_harmonics(1.0, {3: (0.05, 0.0)})


@pytest.fixture(scope="session")
def quarter():
    body, _ = support.quarter_symmetric()
    return body


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_body(rng, K=6, a0=1.0, budget=0.7):
    """Random convex body: sum (k^2-1)|c_k| < a0 guarantees p + p'' > 0."""
    harm = {}
    left = budget * a0
    for k in range(1, K + 1):
        amp = rng.uniform(0, left / max(k * k - 1, 1) / 2) if k > 1 else rng.uniform(0, 0.3 * a0)
        if k > 1:
            left -= amp * (k * k - 1)
        ang = rng.uniform(0, 2 * math.pi)
        harm[k] = (amp * math.cos(ang), amp * math.sin(ang))
    return support.FourierSupport.from_harmonics(a0, harm)


# acceptance criteria append (label, passed, detail) here; printed after the run
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda r: int(r[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
