"""Entanglement generation, swapping and purification protocol instances."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

from . import bds
from .hardware import QuantumLink, QuantumMemory, attempt_cycle_ps, attempt_success_prob, touch_memory

if TYPE_CHECKING:
    from .network import Network
    from .resource import AcpSlot

FRESHEST = "freshest"
RANDOM = "random"

CONSUMPTION_REASONS = ("delivery", "swap", "purify", "expiry", "discard", "end_of_run")


@dataclass(eq=False)
class EPRecord:
    id: int
    mems: dict[str, QuantumMemory]
    state: bds.BellDiagonalState
    created_at: int
    origin: str
    known: dict[str, bool]
    locked: bool = False
    alive: bool = True
    consumed_by: str | None = None
    slot: "AcpSlot | None" = None

    @property
    def nodes(self) -> tuple[str, str]:
        return tuple(sorted(self.mems))

    def other(self, node: str) -> str:
        a, b = self.mems
        return b if node == a else a

    def known_at_both(self) -> bool:
        return all(self.known.values())

    def __repr__(self) -> str:
        return f"<EP{self.id} {'-'.join(self.nodes)} F={self.state.fidelity:.4f} {self.origin}>"


class EPRegistry:
    """Creates and destroys EP records and audits that each is consumed exactly once."""

    def __init__(self, net: "Network"):
        self.net = net
        self._ids = itertools.count()
        self.live: dict[int, EPRecord] = {}
        self.consumed: dict[str, int] = {r: 0 for r in CONSUMPTION_REASONS}
        self.created = 0
        self.double_consumption = 0
        self.stale_reads = 0
        self.acp_pool: dict[tuple[str, str], list[EPRecord]] = {}

    def create(self, mem_u: QuantumMemory, mem_v: QuantumMemory, state: bds.BellDiagonalState,
               origin: str, started_at: int | None = None, known: bool = True) -> EPRecord:
        now = self.net.now()
        if mem_u.ep is not None or mem_v.ep is not None:
            raise RuntimeError("memory already holds an EP half")
        ep = EPRecord(next(self._ids), {mem_u.owner: mem_u, mem_v.owner: mem_v}, state, now, origin,
                      {mem_u.owner: known, mem_v.owner: known})
        for m in (mem_u, mem_v):
            m.ep = ep
            m.last_touch = now if started_at is None else started_at
        self.live[ep.id] = ep
        self.created += 1
        return ep

    def touch(self, ep: EPRecord) -> None:
        now = self.net.now()
        for m in ep.mems.values():
            touch_memory(m, now, self.net.params.pauli)

    def destroy(self, ep: EPRecord, reason: str) -> None:
        if not ep.alive:
            self.double_consumption += 1
            raise RuntimeError(f"{ep} consumed twice ({ep.consumed_by}, {reason})")
        now = self.net.now()
        if reason in ("delivery", "swap", "purify"):
            if any(m.last_touch != now for m in ep.mems.values()):
                self.stale_reads += 1
        ep.alive = False
        ep.consumed_by = reason
        self.consumed[reason] += 1
        del self.live[ep.id]
        for m in ep.mems.values():
            if m.ep is ep:
                m.ep = None
        self.remove_from_pool(ep)
        if ep.slot is not None:
            slot, ep.slot = ep.slot, None
            slot.release()

    # pool of ACP-origin link EPs still housed in ACP memories
    def add_to_pool(self, ep: EPRecord) -> None:
        self.acp_pool.setdefault(ep.nodes, []).append(ep)

    def remove_from_pool(self, ep: EPRecord) -> None:
        pool = self.acp_pool.get(ep.nodes)
        if pool and ep in pool:
            pool.remove(ep)

    def available(self, u: str, v: str) -> list[EPRecord]:
        key = (u, v) if u < v else (v, u)
        return [ep for ep in self.acp_pool.get(key, ()) if ep.alive and not ep.locked]

    def audit(self) -> dict:
        consumed = sum(self.consumed.values())
        return {
            "created": self.created,
            "consumed": dict(self.consumed),
            "live": len(self.live),
            "balanced": self.created == consumed + len(self.live),
            "double_consumption": self.double_consumption,
            "stale_reads": self.stale_reads,
        }


def check_pregenerated(registry: EPRegistry, u: str, v: str, policy: str, rng) -> EPRecord | None:
    """Pick a pre-generated ACP EP on link (u, v), or None if there is none free."""
    pool = registry.available(u, v)
    if not pool:
        return None
    if policy == FRESHEST:
        return max(pool, key=lambda ep: (ep.created_at, ep.id))
    if policy == RANDOM:
        pool = sorted(pool, key=lambda ep: ep.id)
        return pool[int(rng.integers(len(pool)))]
    raise ValueError(f"unknown selection policy {policy!r}")


@dataclass(eq=False)
class GenerationProtocol:
    """Heralded generation on one link, driven by the link's primary node.

    Every attempt starts with an eg_request / eg_response round trip. When
    ``reuse_policy`` is set the primary first looks for a pre-generated ACP
    EP; if one is found it is moved into this protocol's memories at the end
    of the round trip and no photon is emitted.
    """

    net: "Network"
    link: QuantumLink
    mem_u: QuantumMemory
    mem_v: QuantumMemory
    origin: str
    on_done: Callable[[EPRecord], None]
    reuse_policy: str | None = None
    attempts: int = 0
    fallbacks: int = 0
    reused: EPRecord | None = None
    running: bool = False
    _event: object = field(default=None, repr=False)
    _candidate: EPRecord | None = field(default=None, repr=False)

    def __post_init__(self):
        params = self.net.params
        self.p = attempt_success_prob(self.link, params.memory_efficiency)
        self.rtt, self.cycle = attempt_cycle_ps(self.link, self.net.classical, params.emission_period_us * 1e-6)
        self.primary = self.link.primary
        self.rng = self.net.rng(self.primary, f"gen:{self.link.other(self.primary)}")

    def start(self) -> None:
        self.running = True
        self._prev_holders = [(m, m.holder) for m in (self.mem_u, self.mem_v)]
        for m in (self.mem_u, self.mem_v):
            m.holder = self
        self._next_cycle()

    def _schedule(self, delay: int, handler, kind: str) -> None:
        self._event = self.net.timeline.call_after(delay, self.primary, handler, payload=kind)

    def _next_cycle(self) -> None:
        if self.reuse_policy is not None:
            ep = check_pregenerated(self.net.registry, self.link.u, self.link.v, self.reuse_policy,
                                    self.net.rng(self.primary, "select"))
            if ep is not None:
                ep.locked = True
                self._candidate = ep
                self._schedule(self.rtt, self._reuse_arrived, "eg_response")
                return
            self.attempts += 1
            self._schedule(self.cycle, self._herald, "herald")
            return
        # nothing to consult between attempts: jump straight to the successful one
        k = int(self.rng.geometric(self.p)) if self.p > 0 else None
        if k is None:
            return
        self.attempts += k
        self._schedule(k * self.cycle, self._success, "herald")

    def _herald(self) -> None:
        if self.rng.random() < self.p:
            self._success()
        else:
            self._next_cycle()

    def _success(self) -> None:
        params = self.net.params
        now = self.net.now()
        emitted = now - self.cycle + self.rtt
        state = bds.initial_link_state(params.initial_fidelity, params.pauli)
        ep = self.net.registry.create(self.mem_u, self.mem_v, state, self.origin, started_at=emitted)
        self._finish(ep)

    def _reuse_arrived(self) -> None:
        ep, self._candidate = self._candidate, None
        from .resource import reallocate_memory

        if not ep.alive or not reallocate_memory(self.net, ep, {self.mem_u.owner: self.mem_u,
                                                                 self.mem_v.owner: self.mem_v}):
            if ep.alive:
                self.net.unlock(ep)
            self.fallbacks += 1
            self.attempts += 1
            self._schedule(self.cycle - self.rtt, self._herald, "herald")
            return
        self.reused = ep
        self._finish(ep)

    def _finish(self, ep: EPRecord) -> None:
        self.running = False
        self._event = None
        self._restore_holders()
        self.on_done(ep)

    def _restore_holders(self) -> None:
        for m, prev in self._prev_holders:
            if m.holder is self:
                m.holder = prev

    def abort(self) -> None:
        if not self.running:
            return
        self.running = False
        if self._event is not None:
            self._event.cancel()
            self._event = None
        if self._candidate is not None:
            ep, self._candidate = self._candidate, None
            if ep.alive:
                self.net.unlock(ep)
        self._restore_holders()


def run_swapping(net: "Network", node: str, left: EPRecord, right: EPRecord,
                 on_result: Callable[[EPRecord, str], None]) -> EPRecord | None:
    """Swap EP(a, node) and EP(node, b) into EP(a, b); notify a and b by swap_result."""
    registry = net.registry
    registry.touch(left)
    registry.touch(right)
    a, b = left.other(node), right.other(node)
    mem_a, mem_b = left.mems[a], right.mems[b]
    state = bds.swap(left.state, right.state, net.params.noise)
    success = True
    if net.params.swap_success_rate < 1:
        success = net.rng(node, "swap").random() < net.params.swap_success_rate
    registry.destroy(left, "swap")
    registry.destroy(right, "swap")
    if not success:
        return None
    ep = registry.create(mem_a, mem_b, state, "on_demand", known=False)
    ep.created_at = net.now()
    for end in (a, b):
        net.send(node, end, on_result, ep, end, kind="swap_result")
    return ep


def run_purification(net: "Network", kept: EPRecord, meas: EPRecord,
                     on_done: Callable[[EPRecord, bool], None] | None = None) -> None:
    """Pump ``meas`` into ``kept``; the outcome is known after one classical round trip."""
    if set(kept.mems) != set(meas.mems):
        raise ValueError("purification needs two EPs on the same node pair")
    u, v = kept.nodes
    primary = max(u, v)
    kept.locked = meas.locked = True
    net.stats["purifications"] += 1
    rtt = 2 * net.latency_ps(primary, kept.other(primary))

    def complete():
        if not (kept.alive and meas.alive):
            for ep in (kept, meas):
                if ep.alive:
                    net.unlock(ep)
            return
        net.registry.touch(kept)
        net.registry.touch(meas)
        # BBPSSW twirls both inputs into Werner form first; without it phase
        # errors pile up on the kept pair under repeated pumping
        outcome = bds.purify(bds.twirl(kept.state), bds.twirl(meas.state), net.params.noise,
                             net.rng(primary, "purify"))
        meas.locked = False
        net.registry.destroy(meas, "purify")
        if outcome.success:
            kept.state = outcome.out
            net.stats["purify_success"] += 1
            net.unlock(kept)
        else:
            kept.locked = False
            net.registry.destroy(kept, "purify")
        if on_done is not None:
            on_done(kept, outcome.success)

    net.timeline.call_after(rtt, primary, complete, payload="purify_coord")
