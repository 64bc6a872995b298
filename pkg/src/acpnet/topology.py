"""Network graphs: explicit node/link lists and the built-in experiment topologies."""
from __future__ import annotations

from dataclasses import dataclass

import networkx as nx


@dataclass
class Topology:
    name: str
    nodes: list[str]
    links: list[tuple[str, str, float]]  # (u, v, km)

    def __post_init__(self):
        known = set(self.nodes)
        if len(known) != len(self.nodes):
            raise ValueError("duplicate node names")
        for u, v, km in self.links:
            if u not in known or v not in known:
                raise ValueError(f"link {u}-{v} references an unknown node")
            if km <= 0:
                raise ValueError(f"link {u}-{v} needs a positive length")

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_weighted_edges_from(self.links, weight="km")
        return g


def two_node(km: float = 10.0) -> Topology:
    return Topology("two_node", ["0", "1"], [("0", "1", km)])


def bottleneck20(km: float = 10.0, access: int = 3) -> Topology:
    """Two 10-node clusters whose gateways L0 and R0 share the only inter-cluster link.

    Each gateway serves ``access`` access nodes (L1.. / R1..). The remaining
    cluster nodes hang off the access nodes round-robin, so an access node on
    one side reaches an access node on the other through exactly the two
    gateways. Keeping the gateway fan-out below the ACP memory budget leaves
    room for the bottleneck link in the gateways' ACP memories.
    """
    if not 1 <= access <= 9:
        raise ValueError("access must be between 1 and 9")
    nodes, links = [], []
    for side in "LR":
        names = [f"{side}{i}" for i in range(10)]
        nodes += names
        gw, acc, rest = names[0], names[1:1 + access], names[1 + access:]
        links += [(gw, a, km) for a in acc]
        links += [(acc[i % access], n, km) for i, n in enumerate(rest)]
    links.append(("L0", "R0", km))
    return Topology("bottleneck20", nodes, links)


def as_graph(seed: int = 7, n: int = 50, m: int = 2, km: float = 10.0) -> Topology:
    """Deterministic AS-like stand-in: a preferential-attachment graph."""
    g = nx.barabasi_albert_graph(n, m, seed=seed)
    width = len(str(n - 1))
    name = {i: f"n{i:0{width}d}" for i in g.nodes}
    links = sorted((min(name[a], name[b]), max(name[a], name[b]), km) for a, b in g.edges)
    return Topology("as_graph", sorted(name.values()), links)


BUILTIN = {"two_node": two_node, "bottleneck20": bottleneck20, "as_graph": as_graph}
