import functools

import numpy as np
import pytest

from votetrade import SolverOptions, make_builtin, solve_equilibrium

SKEWED_WEIGHTS = (0.1, 0.4, 0.3, 0.2)

BUILTINS = {
    "uniform": ("uniform", {}),
    "skewed_quadrants": ("quadrant_constant", {"weights": list(SKEWED_WEIGHTS)}),
    "power4": ("product_power", {"alpha": 4}),
    "tent": ("product_tent", {}),
    "vee": ("product_vee", {}),
}


@functools.lru_cache(maxsize=None)
def builtin(name):
    family, params = BUILTINS[name]
    return make_builtin(family, **params)


@functools.lru_cache(maxsize=None)
def equilibrium(name, mode="myopic", n=11):
    return solve_equilibrium(builtin(name), SolverOptions(n=n), mode)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
