import numpy as np
import pytest

from qccopt import oracle


def distinct_generators(n, m, rng):
    """*m* random generators with distinct flip masks."""
    out, seen = [], set()
    while len(out) < m:
        w = oracle.random_generator(n, rng)
        if w.x_mask not in seen:
            seen.add(w.x_mask)
            out.append(w)
    return out


def random_instance(seed, n=6, n_terms=25, m=8, real=True):
    rng = np.random.default_rng(seed)
    h = oracle.random_hamiltonian(n, n_terms, rng, real=real)
    return h, distinct_generators(n, m, rng), rng


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
