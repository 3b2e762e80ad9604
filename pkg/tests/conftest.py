import warnings

import pytest

from latticelight.core import LatticeSpec
from latticelight.matrix_elements import LatticeModel


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale runs that take many minutes")


@pytest.fixture(scope="session")
def fermi_model():
    return LatticeModel(LatticeSpec((30, 30, 1), (8.0, 8.0, 15.0)))


@pytest.fixture(scope="session")
def sf_model():
    return LatticeModel(LatticeSpec((30, 30, 1), (3.0, 3.0, 20.0)))


@pytest.fixture(scope="session")
def mott_model():
    return LatticeModel(LatticeSpec((30, 30, 1), (15.0, 15.0, 15.0)))


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
