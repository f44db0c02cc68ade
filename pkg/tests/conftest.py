import numpy as np
import pytest

import bivirus as bv


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Run every kernel once so JIT compilation stays out of timed tests."""
    k2 = bv.complete_graph(2)
    bv.pf_eigen(k2.adjacency)
    sys = bv.BiVirusSystem(
        graph_a=k2, graph_b=k2,
        infection1=bv.LogInfection(k2, 1.0),
        recovery1=bv.PolyRecovery(2, 2.0),
        infection2=bv.LinearInfection(k2, 1.0),
        recovery2=bv.LinearRecovery(2, 1.0))
    s0 = bv.StateD(np.array([0.2, 0.1]), np.array([0.1, 0.2]))
    bv.integrate(sys, s0, t_max=0.5, conv_tol=0.0)
    bv.bivirus_jacobian(sys, s0)


@pytest.fixture(scope="session")
def c6():
    return bv.cycle_graph(6)


@pytest.fixture(scope="session")
def wheel6():
    return bv.wheel_graph(6)


@pytest.fixture(scope="session")
def star_plus_path6():
    """Star on {0,1,2,3} with a path 3-4-5 hung off one leaf."""
    return bv.Graph.from_edges([(0, 1), (0, 2), (0, 3), (3, 4), (4, 5)], n=6)


def random_connected_graph(n, rng, p=0.3):
    """G(n, p) conditioned on connectivity (retry until connected)."""
    for _ in range(200):
        adj = (rng.random((n, n)) < p).astype(float)
        adj = np.triu(adj, 1)
        adj = adj + adj.T
        try:
            return bv.Graph(adj)
        except bv.GraphFormatError:
            continue
    raise AssertionError("could not draw a connected graph")
