"""Wires nodes, links, protocols, ACP controllers and request serving onto one timeline."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from .acp import AcpController
from .hardware import (ACP, RESERVED, ClassicalParams, MidpointBSM, QuantumLink, QuantumMemory,
                       classical_latency_ps, link_key)
from .kernel import Timeline
from .params import Params
from .protocols import EPRegistry, GenerationProtocol, run_swapping
from .resource import (ForwardingTable, Reservation, admit, create_rules, create_rules_acp,
                       memory_demand, pump_on_new_link_ep)
from .topology import Topology

log = logging.getLogger(__name__)

STRATEGIES = ("odo", "ucp", "acp")


@dataclass(eq=False)
class Node:
    name: str
    memories: list[QuantumMemory]
    rules: object = None

    @property
    def acp_memories(self) -> list[QuantumMemory]:
        return [m for m in self.memories if m.slot_class == ACP]

    @property
    def reserved_memories(self) -> list[QuantumMemory]:
        return [m for m in self.memories if m.slot_class == RESERVED]


@dataclass(eq=False)
class ServedRequest:
    request: object
    path: list[str]
    served_at: int | None = None
    fidelity: float | None = None
    rejected: bool = False
    done: bool = False
    rules: object = None
    reservation: Reservation | None = None
    attempts: int = 0
    discards: int = 0
    events: list = field(default_factory=list)


class Network:
    def __init__(self, topology: Topology, params: Params | None = None, strategy: str = "odo",
                 purification: bool = False, selection_policy: str = "freshest", seed: int = 0,
                 trace: bool = False):
        from .resource import RuleManager

        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        if strategy == "odo" and purification:
            raise ValueError("the on-demand-only strategy has no purification")
        self.params = params or Params()
        self.strategy = strategy
        self.purification = purification
        self.selection_policy = selection_policy
        self.topology = topology
        self.timeline = Timeline(seed=seed, trace=trace)
        p = self.params
        self.classical = ClassicalParams(p.light_speed, p.forward_delay_us * 1e-6, p.end_process_delay_us * 1e-6)
        self.links: dict[tuple[str, str], QuantumLink] = {}
        self.adjacency: dict[str, dict[str, float]] = {n: {} for n in topology.nodes}
        for u, v, km in topology.links:
            link = QuantumLink(u, v, km, p.attenuation_db_per_km,
                               MidpointBSM(p.detector_efficiency, p.bsm_success_rate))
            self.links[link.key] = link
            self.adjacency[u][v] = km
            self.adjacency[v][u] = km
        self.routing = ForwardingTable(self.adjacency)
        self.nodes: dict[str, Node] = {}
        for name in topology.nodes:
            mems = [QuantumMemory(f"{name}.{i}", name, i, ACP if i < p.max_memory_acp else RESERVED,
                                  p.memory_efficiency, p.coherence_time_s, p.emission_period_us * 1e-6)
                    for i in range(p.memories_per_node)]
            self.nodes[name] = Node(name, mems, RuleManager(name))
        self.registry = EPRegistry(self)
        self.stats: Counter = Counter()
        self.violations: list[str] = []
        self.reservations: dict[str, list[Reservation]] = {n: [] for n in topology.nodes}
        self._latency: dict[tuple[str, str], int] = {}
        self.acp: dict[str, AcpController] = {}
        if strategy in ("ucp", "acp"):
            for name in topology.nodes:
                self.acp[name] = AcpController(self, name, adaptive=(strategy == "acp"))
        self.served: list[ServedRequest] = []
        self.on_request_done = None

    # plumbing
    def now(self) -> int:
        return self.timeline.now()

    def rng(self, node: str, purpose: str):
        return self.timeline.rng.get(node, purpose)

    def neighbors(self, node: str) -> list[str]:
        return sorted(self.adjacency[node])

    def link(self, u: str, v: str) -> QuantumLink:
        return self.links[link_key(u, v)]

    def latency_ps(self, src: str, dst: str) -> int:
        key = (src, dst)
        lat = self._latency.get(key)
        if lat is None:
            path = self.routing.route(src, dst)
            lat = classical_latency_ps(self.routing.length_m(path), max(len(path) - 2, 0), self.classical)
            self._latency[key] = lat
        return lat

    def send(self, src: str, dst: str, handler, *args, kind: str = "message"):
        self.stats[f"msg:{kind}"] += 1
        return self.timeline.call_after(self.latency_ps(src, dst), dst, handler, *args, payload=kind)

    def evaluate_rules(self, node: str) -> None:
        self.nodes[node].rules.evaluate(self.now())

    def unlock(self, ep) -> None:
        ep.locked = False
        if ep.slot is not None and ep.slot.expired:
            self.registry.destroy(ep, "expiry")

    # invariant instrumentation
    def check_counter(self, node: str) -> None:
        st = self.acp[node].state
        occupied = sum(1 for m in self.nodes[node].acp_memories if not m.free)
        if not 0 <= st.counter <= st.max_memory_acp:
            self.violations.append(f"counter {node}={st.counter} at {self.now()}")
        if occupied > st.max_memory_acp:
            self.violations.append(f"acp memories {node}={occupied} at {self.now()}")
        if len(st.pending) > st.counter:
            self.violations.append(f"pending {node} exceeds counter at {self.now()}")

    def check_table(self, node: str) -> None:
        table = self.acp[node].state.table
        if abs(table.total() - 1) > 1e-12 or min(p for _, p in table.items()) < 0:
            self.violations.append(f"table {node} not normalized at {self.now()}")

    def audit_counters(self) -> None:
        for name, ctl in self.acp.items():
            occupied = sum(1 for m in self.nodes[name].acp_memories if not m.free)
            if occupied != ctl.state.counter:
                self.violations.append(f"counter {name}={ctl.state.counter} but {occupied} memories busy")

    # continuous generation
    def start_acp(self) -> None:
        for name in sorted(self.acp):
            self.acp[name].start()

    def acp_release(self, node: str) -> None:
        self.acp[node].release()

    def pair_acp_memories(self, a: str, mem_a: QuantumMemory, x: str, mem_x: QuantumMemory) -> None:
        holder = mem_x.holder
        if isinstance(holder, tuple) and len(holder) == 3:
            holder[2].cancel()
        ttl = round(self.params.acp_ttl_s * 1e12)
        create_rules_acp(self, a, mem_a, x, mem_x, ttl)
        self.evaluate_rules(a)

    def start_acp_generation(self, slot) -> GenerationProtocol:
        link = self.link(slot.mem_a.owner, slot.mem_x.owner)
        mem_u = slot.mem_a if slot.mem_a.owner == link.u else slot.mem_x
        mem_v = slot.mem_x if mem_u is slot.mem_a else slot.mem_a
        proto = GenerationProtocol(self, link, mem_u, mem_v, "acp", slot.on_generated)
        proto.start()
        self.stats["acp_generations"] += 1
        return proto

    def on_new_acp_ep(self, ep) -> None:
        self.stats["acp_eps"] += 1
        if self.purification:
            pump_on_new_link_ep(self, ep)

    # request serving
    def submit(self, request) -> ServedRequest:
        path = self.routing.route(request.initiator, request.responder)
        rec = ServedRequest(request, path)
        self.served.append(rec)
        capacity = self.params.reserved_memories
        if not admit(self.reservations, capacity, path, request.start, request.end):
            rec.rejected = True
            rec.done = True
            self._finished(rec)
            return rec
        res = Reservation(request, path, memory_demand(path), request.start, request.end)
        for node in path:
            self.reservations[node].append(res)
        rec.reservation = res
        self.timeline.call_at(request.start, request.initiator, self._request_start, rec, payload="request_start")
        self.timeline.call_at(request.end, request.initiator, self._request_end, rec, payload="request_end")
        return rec

    def _request_start(self, rec: ServedRequest) -> None:
        res = rec.reservation
        path = res.path
        for i, node in enumerate(path):
            sides = (["left"] if i > 0 else []) + (["right"] if i < len(path) - 1 else [])
            free = [m for m in self.nodes[node].reserved_memories if m.free]
            if len(free) < len(sides):
                self.violations.append(f"reserved memories exhausted at {node}")
                rec.rejected = True
                self._cleanup(rec)
                self._finished(rec)
                return
            for side, mem in zip(sides, free):
                mem.holder = res
                res.memories[(node, side)] = mem
        rec.rules = create_rules(self, rec, res)
        for node in path:
            self.evaluate_rules(node)

    def start_request_generation(self, rec: ServedRequest, u: str, v: str, mem_u, mem_v) -> GenerationProtocol:
        link = self.link(u, v)
        if link.u != u:
            mem_u, mem_v = mem_v, mem_u
        policy = None if self.strategy == "odo" else self.selection_policy
        proto = GenerationProtocol(self, link, mem_u, mem_v, "on_demand",
                                   lambda ep: self._link_ready(rec, ep), reuse_policy=policy)
        proto.start()
        return proto

    def _link_ready(self, rec: ServedRequest, ep) -> None:
        if rec.done:
            return
        for node in ep.mems:
            self.evaluate_rules(node)
        if ep.alive:
            self._check_delivery(rec, ep)

    def swap_at(self, rec: ServedRequest, node: str, left, right) -> None:
        run_swapping(self, node, left, right, lambda ep, end: self._swap_result(rec, ep, end))

    def _swap_result(self, rec: ServedRequest, ep, end: str) -> None:
        if rec.done or not ep.alive:
            return
        ep.known[end] = True
        self.evaluate_rules(end)
        if ep.alive:
            self._check_delivery(rec, ep)

    def _check_delivery(self, rec: ServedRequest, ep) -> None:
        req = rec.request
        if set(ep.mems) != {req.initiator, req.responder} or not ep.known_at_both():
            return
        self.registry.touch(ep)
        fidelity = ep.state.fidelity
        if fidelity < req.fidelity_threshold:
            rec.discards += 1
            self.registry.destroy(ep, "discard")
            rec.rules.arm()
            for node in rec.path:
                self.evaluate_rules(node)
            return
        rec.served_at = self.now()
        rec.fidelity = fidelity
        self.registry.destroy(ep, "delivery")
        self._cleanup(rec)
        self._finished(rec)
        if self.strategy == "acp":
            path = rec.path
            self.acp[req.initiator].update(path)
            self.acp[req.responder].update(path)
            for node in path[1:-1]:
                self.send(req.initiator, node, self.acp[node].update, path, kind="path_notify")

    def _request_end(self, rec: ServedRequest) -> None:
        if rec.done:
            return
        self._cleanup(rec)
        self._finished(rec)

    def _cleanup(self, rec: ServedRequest) -> None:
        rec.done = True
        res = rec.reservation
        if rec.rules is not None:
            for rule in rec.rules.generation + rec.rules.swapping:
                for node in rec.path:
                    self.nodes[node].rules.remove(rule)
            for proto in rec.rules.protocols:
                rec.attempts += proto.attempts
                proto.abort()
        if res is not None:
            for mem in res.memories.values():
                if mem.ep is not None and mem.ep.alive:
                    self.registry.destroy(mem.ep, "expiry")
                if mem.holder is res:
                    mem.holder = None
            for node in res.path:
                if res in self.reservations[node]:
                    self.reservations[node].remove(res)

    def _finished(self, rec: ServedRequest) -> None:
        if self.on_request_done is not None:
            self.on_request_done(rec)

    def run_until(self, t_end: int):
        return self.timeline.run_until(t_end)
