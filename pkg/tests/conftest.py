import os

import pytest

from app_config import root_dir
from budget.budget import table_ii_budget
from optics.params import table_i_enmo, table_i_oms

# The directory that contains reference inputs for all tests
test_data_directory = os.path.join(root_dir, "tests/data")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical checks over many seeded fits")


@pytest.fixture
def enmo():
    """Fitted ENMO at the middle detuning, delta_a = -2 pi 710 kHz"""
    return table_i_enmo()


@pytest.fixture
def oms():
    return table_i_oms()


@pytest.fixture
def budget():
    return table_ii_budget()


@pytest.fixture
def data_dir():
    return test_data_directory
