"""Rules, reservations, memory (re)allocation, pumping policy and static routing."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from .hardware import ACP, RESERVED, QuantumMemory

if TYPE_CHECKING:
    from .network import Network
    from .protocols import EPRecord, GenerationProtocol

GENERATION_PRIORITY = 10
SWAP_PRIORITY = 5  # lower value fires first


class RoutingError(ValueError):
    """Destination unreachable from source."""


def static_route(adjacency: dict[str, dict[str, float]], src: str, dst: str) -> list[str]:
    """Shortest path by total length; ties go to the lexicographically smallest node sequence."""
    if src == dst:
        return [src]
    best: dict[str, tuple[float, tuple[str, ...]]] = {src: (0.0, (src,))}
    heap = [(0.0, (src,))]
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if best.get(node) != (dist, path):
            continue
        if node == dst:
            return list(path)
        for nxt, w in adjacency[node].items():
            if nxt in path:
                continue
            cand = (dist + w, path + (nxt,))
            if nxt not in best or cand < best[nxt]:
                best[nxt] = cand
                heapq.heappush(heap, cand)
    raise RoutingError(f"no route from {src!r} to {dst!r}")


class ForwardingTable:
    """Pre-computed next hops; routes never change during a run."""

    def __init__(self, adjacency: dict[str, dict[str, float]]):
        self.adjacency = adjacency
        self._paths: dict[tuple[str, str], tuple[str, ...]] = {}

    def route(self, src: str, dst: str) -> list[str]:
        key = (src, dst)
        if key not in self._paths:
            self._paths[key] = tuple(static_route(self.adjacency, src, dst))
        return list(self._paths[key])

    def next_hop(self, node: str, dst: str) -> str:
        return self.route(node, dst)[1]

    def length_m(self, path: list[str]) -> float:
        return sum(self.adjacency[a][b] for a, b in zip(path, path[1:])) * 1000


_rule_ids = itertools.count()


@dataclass(eq=False)
class Rule:
    priority: int
    condition: Callable[[], bool]
    action: Callable[[], None]
    expiry: int | None = None
    name: str = ""
    uid: int = field(default_factory=lambda: next(_rule_ids))
    fired: int = 0

    def expired(self, now: int) -> bool:
        return self.expiry is not None and now >= self.expiry


class RuleManager:
    def __init__(self, node: str):
        self.node = node
        self.rules: list[Rule] = []

    def install(self, rule: Rule) -> None:
        self.rules.append(rule)

    def remove(self, rule: Rule) -> None:
        if rule in self.rules:
            self.rules.remove(rule)

    def evaluate(self, now: int) -> list[Rule]:
        """Fire satisfied, unexpired rules in ascending priority; expired ones are dropped."""
        self.rules = [r for r in self.rules if not r.expired(now)]
        fired = []
        for rule in sorted(self.rules, key=lambda r: (r.priority, r.uid)):
            if rule not in self.rules:
                continue
            if rule.condition():
                rule.action()
                rule.fired += 1
                fired.append(rule)
        return fired


@dataclass(eq=False)
class Reservation:
    request: object
    path: list[str]
    grants: dict[str, int]
    start: int
    end: int
    memories: dict[tuple[str, str], QuantumMemory] = field(default_factory=dict)

    def overlaps(self, start: int, end: int) -> bool:
        return self.start < end and start < self.end


def memory_demand(path: list[str]) -> dict[str, int]:
    return {n: (1 if i in (0, len(path) - 1) else 2) for i, n in enumerate(path)}


def admit(reservations: dict[str, list[Reservation]], capacity: int, path: list[str],
          start: int, end: int) -> bool:
    """Admission: every path node can grant its reserved memories over the window."""
    for node, need in memory_demand(path).items():
        used = sum(r.grants[node] for r in reservations.get(node, ()) if r.overlaps(start, end))
        if used + need > capacity:
            return False
    return True


@dataclass(eq=False)
class RequestRules:
    generation: list[Rule] = field(default_factory=list)
    swapping: list[Rule] = field(default_factory=list)
    protocols: list["GenerationProtocol"] = field(default_factory=list)

    def arm(self) -> None:
        for r in self.generation:
            r.armed = True


def create_rules(net: "Network", request, reservation: Reservation) -> RequestRules:
    """Generation rules per hop, swapping rules per intermediate node; all expire at request end."""
    path = reservation.path
    mems = reservation.memories
    out = RequestRules()
    for i, (u, v) in enumerate(zip(path, path[1:])):
        mem_u, mem_v = mems[(u, "right")], mems[(v, "left")]
        rule = Rule(GENERATION_PRIORITY, lambda: False, lambda: None, reservation.end, f"gen {u}-{v}")
        rule.armed = True

        def cond(rule=rule, mu=mem_u, mv=mem_v):
            return (rule.armed and mu.ep is None and mv.ep is None
                    and mu.holder is reservation and mv.holder is reservation)

        def act(rule=rule, mu=mem_u, mv=mem_v, u=u, v=v):
            rule.armed = False
            proto = net.start_request_generation(request, u, v, mu, mv)
            out.protocols.append(proto)

        rule.condition, rule.action = cond, act
        primary = max(u, v)
        net.nodes[primary].rules.install(rule)
        out.generation.append(rule)
    for m in path[1:-1]:
        left, right = mems[(m, "left")], mems[(m, "right")]

        def cond(left=left, right=right, m=m):
            a, b = left.ep, right.ep
            return (a is not None and b is not None and a is not b and a.known[m] and b.known[m]
                    and not a.locked and not b.locked)

        def act(left=left, right=right, m=m):
            net.swap_at(request, m, left.ep, right.ep)

        rule = Rule(SWAP_PRIORITY, cond, act, reservation.end, f"swap {m}")
        net.nodes[m].rules.install(rule)
        out.swapping.append(rule)
    return out


@dataclass(eq=False)
class AcpSlot:
    """A pair of ACP memories bound by a generation rule with a time-to-live."""

    net: "Network"
    initiator: str
    mem_a: QuantumMemory
    mem_x: QuantumMemory
    expiry: int
    rule: Rule | None = None
    protocol: "GenerationProtocol | None" = None
    ep: "EPRecord | None" = None
    released: bool = False
    expired: bool = False
    _expiry_event: object = None

    @property
    def idle(self) -> bool:
        return not self.released and not self.expired and self.protocol is None and self.ep is None

    def start_generation(self) -> None:
        self.protocol = self.net.start_acp_generation(self)

    def on_generated(self, ep: "EPRecord") -> None:
        self.protocol = None
        self.ep = ep
        ep.slot = self
        for m in (self.mem_a, self.mem_x):
            m.holder = self
        self.net.registry.add_to_pool(ep)
        self.net.on_new_acp_ep(ep)

    def on_expiry(self) -> None:
        self._expiry_event = None
        self.expired = True
        if self.ep is not None:
            if self.ep.locked:
                return  # settled when the lock is released
            self.net.registry.destroy(self.ep, "expiry")
        else:
            self.release()

    def release(self) -> None:
        """Free both memories and decrement the ACP counter on both nodes."""
        if self.released:
            return
        self.released = True
        if self._expiry_event is not None:
            self._expiry_event.cancel()
            self._expiry_event = None
        if self.protocol is not None:
            self.protocol.abort()
            self.protocol = None
        if self.ep is not None and self.ep.slot is self:
            self.ep.slot = None
        self.ep = None
        for m in (self.mem_a, self.mem_x):
            if m.holder is self or m.holder is None:
                m.holder = None
        if self.rule is not None:
            self.net.nodes[self.initiator].rules.remove(self.rule)
        self.net.acp_release(self.mem_a.owner)
        self.net.acp_release(self.mem_x.owner)


def create_rules_acp(net: "Network", u: str, memory_u: QuantumMemory, v: str,
                     memory_v: QuantumMemory, ttl: int) -> AcpSlot:
    """Install one generation rule for an ACP memory pair; it expires ``ttl`` from now."""
    if memory_u.slot_class != ACP or memory_v.slot_class != ACP:
        raise ValueError("ACP rules only bind ACP-class memories")
    now = net.now()
    slot = AcpSlot(net, u, memory_u, memory_v, now + ttl)
    memory_u.holder = slot
    memory_v.holder = slot
    slot.rule = Rule(GENERATION_PRIORITY, lambda: slot.idle, slot.start_generation, slot.expiry,
                     f"acp {u}-{v}")
    slot._expiry_event = net.timeline.call_at(slot.expiry, u, slot.on_expiry, payload="acp_expiry")
    net.nodes[u].rules.install(slot.rule)
    return slot


def pump_on_new_link_ep(net: "Network", new_ep: "EPRecord") -> "EPRecord | None":
    """As-soon-as-possible pumping: the new EP is kept, the oldest free one is measured."""
    older = [ep for ep in net.registry.available(*new_ep.nodes) if ep is not new_ep]
    if not older or new_ep.locked:
        return None
    meas = min(older, key=lambda ep: (ep.created_at, ep.id))
    from .protocols import run_purification

    run_purification(net, new_ep, meas)
    return meas


def reallocate_memory(net: "Network", ep: "EPRecord", targets: dict[str, QuantumMemory]) -> bool:
    """Move both halves of ``ep`` into reserved memories; frees the vacated ACP slot.

    Returns False (leaving ``ep`` untouched) when a target memory already holds a state.
    """
    if any(t.ep is not None or t.slot_class != RESERVED for t in targets.values()):
        return False
    net.registry.touch(ep)
    now = net.now()
    slot = ep.slot
    net.registry.remove_from_pool(ep)
    for node, target in targets.items():
        old = ep.mems[node]
        old.ep = None
        target.ep = ep
        target.last_touch = now
        ep.mems[node] = target
    ep.locked = False
    ep.slot = None
    if slot is not None:
        slot.ep = None
        slot.release()
    net.stats["reallocations"] += 1
    return True
