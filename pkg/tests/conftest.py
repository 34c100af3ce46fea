import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 4)


def well_conditioned(d, rng, floor=1e-3):
    """Random full-rank state with all eigenvalues at least ``floor``."""
    from netdisc.qobj import random_state

    rho = random_state(d, seed=rng)
    return (1 - d * floor) * rho + floor * np.eye(d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: dict = {}


def record(key, passed: bool, detail: str = ""):
    ACCEPTANCE[key] = f"criterion {key}: {'PASS' if passed else 'FAIL'}" + (f"  {detail}" if detail else "")
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int("".join(c for c in k if c.isdigit()) or 0), k)):
        terminalreporter.write_line(ACCEPTANCE[key])
