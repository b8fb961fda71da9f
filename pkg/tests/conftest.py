import numpy as np
import pytest

from ftflow.experiments import ExperimentConfig, build_setup

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def lasso_setup():
    return build_setup(ExperimentConfig("fused_lasso", seed=0, n=40))


@pytest.fixture(scope="session")
def qp_setup():
    return build_setup(ExperimentConfig("qp", seed=0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line[1])
