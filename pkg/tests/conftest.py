import numpy as np
import pytest

from econpotential import CES, CobbDouglas, Economy, LinearAggregate, SeparableIsoelastic


def cobb_douglas_economy(endowments=((1.5, 1.5), (1.5, 1.5))):
    return Economy([CobbDouglas([2, 1]), CobbDouglas([1, 2])], endowments)


def linear_economy():
    return Economy([LinearAggregate([2, 1]), LinearAggregate([1, 2])], [[0.5, 0.5], [0.5, 0.5]])


def multiplicity_economy():
    return Economy(
        [SeparableIsoelastic([1, 1], [2 / 3, -2]), SeparableIsoelastic([1, 1], [-2, 2 / 3])],
        [[11 / 6, 1 / 6], [1 / 6, 11 / 6]],
    )


def random_ces_economy(rng, n=None, k=None, homogeneous=False):
    n = n or int(rng.integers(2, 5))
    k = k or int(rng.integers(2, 6))
    rho = float(rng.choice([-1, 1]) * rng.uniform(0.1, 0.9))
    utils = []
    for _ in range(n):
        if homogeneous:
            utils.append(CES(rho, np.ones(k)))
        else:
            utils.append(CES(float(rng.uniform(-2, 0.9) or 0.5), rng.uniform(0.5, 2, k)))
    return Economy(utils, rng.uniform(0.2, 3, (n, k)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture
def cd2():
    return cobb_douglas_economy()


@pytest.fixture
def linear2():
    return linear_economy()


@pytest.fixture
def multi4():
    return multiplicity_economy()


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
