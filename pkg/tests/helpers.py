"""Builders shared by the unit tests."""
from acpnet import bds
from acpnet.resource import create_rules_acp


def seed_acp_ep(net, u, v, fidelity=0.95, ttl_s=1.0):
    """Bind a fresh ACP slot on (u, v) and drop a generated EP into it, as the FSMs would."""
    mu = next(m for m in net.nodes[u].acp_memories if m.free)
    mv = next(m for m in net.nodes[v].acp_memories if m.free)
    net.acp[u].acquire()
    net.acp[v].acquire()
    slot = create_rules_acp(net, u, mu, v, mv, round(ttl_s * 1e12))
    net.nodes[u].rules.remove(slot.rule)  # no generation; the EP is supplied directly
    ep = net.registry.create(mu, mv, bds.initial_link_state(fidelity), "acp")
    slot.on_generated(ep)
    return slot, ep


def reserved_pair(net, u, v):
    mu = next(m for m in net.nodes[u].reserved_memories if m.free)
    mv = next(m for m in net.nodes[v].reserved_memories if m.free)
    return mu, mv


# one line per acceptance criterion, echoed in the terminal summary
REPORT: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT.append(line)
    print(line)
