import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

from acpnet.network import Network
from acpnet.params import Params
from acpnet.topology import Topology, two_node


def line(n: int, km: float = 10.0) -> Topology:
    names = [f"p{i}" for i in range(n)]
    return Topology(f"line{n}", names, [(a, b, km) for a, b in zip(names, names[1:])])


@pytest.fixture
def make_net():
    def build(strategy="acp", purification=False, topology=None, seed=0, selection_policy="freshest", **params):
        return Network(topology or two_node(), Params(**params), strategy, purification,
                       selection_policy, seed=seed)
    return build


def pytest_terminal_summary(terminalreporter):
    import helpers

    if helpers.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(helpers.REPORT, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
