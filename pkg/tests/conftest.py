import pytest

from followahead.geometry import Pose2D, WorldState
from followahead.grid import OccupancyGrid
from followahead.qnet import load_default_params


@pytest.fixture(scope="session")
def trained_params():
    return load_default_params()


@pytest.fixture
def open_grid():
    # 20 m x 20 m centred on the origin
    return OccupancyGrid.empty(200, 200, 0.1, (-10.0, -10.0))


def state(robot, human):
    return WorldState(Pose2D(*robot), Pose2D(*human))


# acceptance criteria report one line each; printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
