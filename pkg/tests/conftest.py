import pytest

from failsafe_nr.config_setup import Approach
from failsafe_nr.core.nr_distribution import NrDistribution


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 10^6-draw Monte Carlo checks and the desk-scale convergence study")


@pytest.fixture
def k4_csv(tmp_path):
    path = tmp_path / "studies.csv"
    path.write_text("z\n1.5\n2.0\n1.0\n2.5\n", encoding="utf-8")
    return path


@pytest.fixture
def folded15():
    return NrDistribution.create(15, 0.05, Approach.FOLDED)


@pytest.fixture
def truncated15():
    return NrDistribution.create(15, 0.05, Approach.TRUNCATED)
