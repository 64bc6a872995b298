"""Adaptive continuous generation: per-node FSMs, probability tables, roulette selection."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Hashable, Iterable

import numpy as np

if TYPE_CHECKING:
    from .network import Network

PHANTOM = None  # the "None" neighbour: selecting it means do nothing this round


class ProbabilityTable:
    """Neighbour -> selection probability, with the phantom entry kept last."""

    def __init__(self, probs: dict[Hashable, float]):
        if PHANTOM not in probs:
            raise ValueError("probability table needs a phantom (None) entry")
        keys = sorted(k for k in probs if k is not PHANTOM) + [PHANTOM]
        self._p = {k: float(probs[k]) for k in keys}
        self._check()

    @classmethod
    def uniform(cls, neighbors: Iterable[str]) -> "ProbabilityTable":
        keys = list(neighbors) + [PHANTOM]
        return cls({k: 1 / len(keys) for k in keys})

    def _check(self) -> None:
        vals = np.array(list(self._p.values()))
        if np.any(vals < 0) or abs(vals.sum() - 1) > 1e-12:
            raise ValueError(f"probability table is not normalized: {self._p}")

    def __getitem__(self, key) -> float:
        return self._p[key]

    def __iter__(self):
        return iter(self._p)

    def __len__(self) -> int:
        return len(self._p)

    def items(self):
        return self._p.items()

    def as_dict(self) -> dict:
        return dict(self._p)

    def total(self) -> float:
        return sum(self._p.values())

    def __repr__(self) -> str:
        return "ProbabilityTable(" + ", ".join(f"{k}: {v:.4f}" for k, v in self._p.items()) + ")"


def select_neighbor(table: ProbabilityTable, u: float):
    """Roulette wheel: return the entry whose cumulative interval contains ``u`` in [0, 1)."""
    acc = 0.0
    last = None
    for key, p in table.items():
        acc += p
        last = key
        if u < acc:
            return key
    return last


def update_table(table: ProbabilityTable, node: str, path: list[str], delta: float) -> ProbabilityTable:
    """Reward every neighbour adjacent to ``node`` along ``path``, then renormalize."""
    rewarded = set()
    for a, b in zip(path, path[1:]):
        if a == node:
            rewarded.add(b)
        elif b == node:
            rewarded.add(a)
    probs = table.as_dict()
    for x in probs:
        if x is not PHANTOM and x in rewarded:
            probs[x] += delta
    total = sum(probs.values())
    return ProbabilityTable({k: v / total for k, v in probs.items()})


@dataclass
class AcpNodeState:
    table: ProbabilityTable
    max_memory_acp: int = 5
    sleep_base: float = 0.01
    delta: float = 0.05
    counter: int = 0
    pending: dict[int, tuple[str, object, object]] = field(default_factory=dict)


_query_ids = itertools.count()


class AcpController:
    """The sender FSM (sleep / wait for reply) and receiver FSM (wait for query) of one node."""

    def __init__(self, net: "Network", node: str, adaptive: bool = True):
        self.net = net
        self.node = node
        self.adaptive = adaptive
        p = net.params
        self.state = AcpNodeState(
            ProbabilityTable.uniform(net.neighbors(node)),
            max_memory_acp=p.max_memory_acp,
            sleep_base=p.sleep_base_ms * 1e-3,
            delta=p.delta,
        )
        self.rng = net.rng(node, "acp")
        self.queries_sent = 0
        self.none_selected = 0
        self.table_updates = 0

    # sender side
    def start(self) -> None:
        self._sleep()

    def _sleep(self) -> None:
        tau = self.rng.uniform(0.5, 1.5) * self.state.sleep_base
        self.net.timeline.call_after(round(tau * 1e12), self.node, self.tick, payload="acp_tick")

    def free_memory(self):
        for m in self.net.nodes[self.node].acp_memories:
            if m.free:
                return m
        return None

    def tick(self) -> None:
        st = self.state
        mem = self.free_memory() if st.counter < st.max_memory_acp else None
        if mem is not None:
            neighbor = select_neighbor(st.table, self.rng.random())
            if neighbor is PHANTOM:
                self.none_selected += 1
            else:
                self.acquire()
                mem.holder = ("pending", self.node)
                qid = next(_query_ids)
                timeout = self.net.timeline.call_after(
                    round(self.net.params.acp_ttl_s * 1e12), self.node, self._pending_expired, qid,
                    payload="acp_pending_expiry")
                st.pending[qid] = (neighbor, mem, timeout)
                self.queries_sent += 1
                self.net.send(self.node, neighbor, self.net.acp[neighbor].handle_query,
                              self.node, qid, kind="query")
        self._sleep()

    def acquire(self) -> None:
        self.state.counter += 1
        self.net.check_counter(self.node)

    def release(self) -> None:
        self.state.counter -= 1
        self.net.check_counter(self.node)

    def _pending_expired(self, qid: int) -> None:
        entry = self.state.pending.pop(qid, None)
        if entry is None:
            return
        _, mem, _ = entry
        mem.holder = None
        self.release()

    def handle_reply(self, qid: int, yes: bool, peer_mem) -> None:
        entry = self.state.pending.pop(qid, None)
        if entry is None:
            self.net.stats["stale_replies"] += 1
            return
        neighbor, mem, timeout = entry
        timeout.cancel()
        if yes:
            self.net.pair_acp_memories(self.node, mem, neighbor, peer_mem)
        else:
            mem.holder = None
            self.release()

    # receiver side
    def handle_query(self, sender: str, qid: int) -> None:
        st = self.state
        mem = self.free_memory() if st.counter < st.max_memory_acp else None
        if mem is None:
            self.net.send(self.node, sender, self.net.acp[sender].handle_reply, qid, False, None,
                          kind="reply_no")
            return
        self.acquire()
        mem.holder = ("pending", self.node)
        # released by this fallback if the sender never binds the pair
        fallback = self.net.timeline.call_after(
            round(self.net.params.acp_ttl_s * 1e12), self.node, self._peer_unbound, mem,
            payload="acp_peer_expiry")
        mem.holder = ("pending", self.node, fallback)
        self.net.send(self.node, sender, self.net.acp[sender].handle_reply, qid, True, mem,
                      kind="reply_yes")

    def _peer_unbound(self, mem) -> None:
        if isinstance(mem.holder, tuple) and mem.holder[0] == "pending":
            mem.holder = None
            self.release()

    # adaptive control
    def update(self, path: list[str]) -> None:
        if not self.adaptive:
            return
        self.state.table = update_table(self.state.table, self.node, path, self.state.delta)
        self.table_updates += 1
        self.net.check_table(self.node)
