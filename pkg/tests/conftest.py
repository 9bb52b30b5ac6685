import numpy as np
import pytest

from mcflab.flow import FlowControls, circle, ellipse, run_to_extinction
from mcflab.rescale import build_graph_trajectory


@pytest.fixture(scope="session")
def ellipse_flow():
    # logged at ds = 0.025 so that the ds = 0.05 run is every other snapshot
    return run_to_extinction(ellipse(), FlowControls(ds=0.025))


@pytest.fixture(scope="session")
def ellipse_graphs_fine(ellipse_flow):
    return build_graph_trajectory(ellipse_flow).window(-np.inf, 12.0)


@pytest.fixture(scope="session")
def ellipse_graphs(ellipse_graphs_fine):
    return ellipse_graphs_fine.every(2)


@pytest.fixture(scope="session")
def circle_flow():
    return run_to_extinction(circle(), FlowControls())


@pytest.fixture(scope="session")
def circle_graphs(circle_flow):
    return build_graph_trajectory(circle_flow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
