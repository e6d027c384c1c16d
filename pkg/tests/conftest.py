import numpy as np
import pytest
from hypothesis import settings

from signedlfm.graph import make_split, parse_edge_list

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


# Worked 4x5 example matrix used throughout the ranking tests:
#
#        t1  t2  t3  t4  t5
#  u1  [  -   0   -   0   0 ]   two visible spam actions
#  u2  [  0   +   0   0   + ]   two visible normal actions
#  u3  [  ?   0   ?   ?   0 ]   all interactions hidden
#  u4  [  -   ?   0   -   0 ]   two visible spam actions, one hidden
#
# Visible spam per column: t1=2, t3=1, t4=1.
FIGURE_EDGES = "\n".join(
    [
        "u1\tt1\tspam",
        "u1\tt3\tspam",
        "u2\tt2\tnormal",
        "u2\tt5\tnormal",
        "u3\tt1\tunknown",
        "u3\tt3\tunknown",
        "u3\tt4\tunknown",
        "u4\tt1\tspam",
        "u4\tt2\tunknown",
        "u4\tt4\tspam",
    ]
)


@pytest.fixture(scope="session")
def figure_network():
    return parse_edge_list(FIGURE_EDGES.splitlines())


@pytest.fixture(scope="session")
def figure_split(figure_network):
    # every labeled edge visible; the four "unknown" edges stay held out
    return make_split(figure_network, 1.0, balance=False, seed=0)


@pytest.fixture
def uid(figure_network):
    return lambda name: figure_network.user_names.index(name)


@pytest.fixture
def tid(figure_network):
    return lambda name: figure_network.target_names.index(name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
