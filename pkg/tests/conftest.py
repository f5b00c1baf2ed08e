import numpy as np
import pytest

from markov_abstraction import Factorization, gen_stochastic_matrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_factorization(n, k, rng):
    return Factorization(
        gen_stochastic_matrix(n, k, rng),
        gen_stochastic_matrix(k, k, rng),
        gen_stochastic_matrix(k, n, rng),
    )


_ACCEPTANCE = pytest.StashKey()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Append (criterion, passed, detail); lines are echoed in the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(_ACCEPTANCE, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(log, key=lambda e: e[0]):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
