import os

import numpy as np
import pytest

from pirbreak.pir import desk_params, gen_queries, gen_secret

LONG_RUN = os.environ.get("PIRBREAK_LONG") == "1"

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_instance(n, seed, i0=None, params=None):
    """Seeded desk-scale instance: (params, secret, i0, queries, witness)."""
    params = params or desk_params(n)
    rng = np.random.default_rng(seed)
    secret = gen_secret(params, rng)
    if i0 is None:
        i0 = int(rng.integers(1, params.n + 1))
    queries, witness = gen_queries(params, secret, i0, rng)
    return params, secret, i0, queries, witness


@pytest.fixture
def instance():
    return make_instance
