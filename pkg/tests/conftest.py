import os

import numpy as np
import pytest


def pytest_report_header(config):
    from moransweep._compat import NUMBA_DISABLED

    mode = "pure-python fallback" if NUMBA_DISABLED else "numba"
    return f"moransweep kernels: {mode}"


@pytest.fixture
def rng_seed():
    return 20260810


def acceptance_scale() -> str:
    """'desk' runs the stated grids; 'ci' shrinks the big ones."""
    return os.environ.get("MORANSWEEP_ACCEPT_SCALE", "desk").strip().lower()


@pytest.fixture
def random_state_factory():
    """Random admissible population compositions for property tests."""

    def make(two_n: int, n: int, seed: int):
        rng = np.random.default_rng(seed)
        states = []
        for _ in range(n):
            cuts = np.sort(rng.integers(0, two_n + 1, size=3))
            counts = np.diff(np.concatenate(([0], cuts, [two_n])))
            states.append(tuple(int(c) for c in counts))
        return states

    return make
