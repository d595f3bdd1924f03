import time

import numpy as np
import pytest

from latwave.model import ModelParams

STANDARD = dict(mu=0.5, beta=3.0, gamma=0.5, d=1.0)
SEED = 20261019

# acceptance results collected by test_acceptance.py, printed at the end of the run
ACCEPTANCE: dict = {}


def random_param_sets(n=5, seed=SEED):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        mu, gamma = rng.uniform(0.1, 1.0, 2)
        beta = (mu + gamma) * rng.uniform(1.2, 4.0)
        d = rng.uniform(0.2, 3.0)
        out.append(ModelParams(mu, beta, gamma, d))
    return out


@pytest.fixture(scope="session")
def std_params():
    return ModelParams(**STANDARD)


@pytest.fixture(scope="session")
def std_wave(std_params):
    """The standard solve at c = 3.5, l = 40, m = 20, tol = 1e-6, with its wall time."""
    from latwave.profile_solver import solve_wave

    t0 = time.perf_counter()
    wp = solve_wave(std_params, 3.5, l=40, m=20, tol=1e-6)
    return wp, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        rec = ACCEPTANCE[key]
        status = "PASS" if rec["passed"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {key}: {status}  [{rec['seconds']:.2f}s]  {rec['detail']}")
