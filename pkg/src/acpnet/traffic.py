"""Traffic matrices and the fixed-rate request generator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import PS_PER_MS, PS_PER_S


@dataclass(frozen=True)
class Request:
    id: int
    initiator: str
    responder: str
    arrival: int
    start: int
    end: int
    num_eps: int = 1
    fidelity_threshold: float = 0.5

    def __post_init__(self):
        if not self.arrival < self.start < self.end:
            raise ValueError("request times must satisfy arrival < start < end")
        if self.num_eps < 1:
            raise ValueError("a request asks for at least one EP")


class TrafficMatrix:
    """Probability of each (initiator, responder) pair; entries sum to one, zero diagonal."""

    def __init__(self, nodes: list[str], matrix):
        m = np.asarray(matrix, dtype=float)
        n = len(nodes)
        if m.shape != (n, n):
            raise ValueError(f"traffic matrix must be {n}x{n}")
        if np.any(m < 0) or abs(m.sum() - 1) > 1e-9:
            raise ValueError("traffic matrix entries must be >= 0 and sum to 1")
        if np.any(np.diag(m) != 0):
            raise ValueError("traffic matrix diagonal must be zero")
        self.nodes = list(nodes)
        self.matrix = m
        self._flat = np.cumsum(m.reshape(-1))

    @classmethod
    def from_pairs(cls, nodes: list[str], pairs) -> "TrafficMatrix":
        idx = {n: i for i, n in enumerate(nodes)}
        m = np.zeros((len(nodes), len(nodes)))
        for pair in pairs:
            a, b = pair[0], pair[1]
            w = float(pair[2]) if len(pair) > 2 else 1.0
            if a not in idx or b not in idx:
                raise ValueError(f"traffic pair {a}->{b} uses an unknown node")
            m[idx[a], idx[b]] += w
        if m.sum() <= 0:
            raise ValueError("traffic pairs carry no weight")
        return cls(nodes, m / m.sum())

    @classmethod
    def uniform(cls, nodes: list[str]) -> "TrafficMatrix":
        return cls.from_pairs(nodes, [(a, b) for a in nodes for b in nodes if a != b])

    def pairs(self) -> list[tuple[str, str, float]]:
        n = len(self.nodes)
        return [(self.nodes[i], self.nodes[j], self.matrix[i, j])
                for i in range(n) for j in range(n) if self.matrix[i, j] > 0]

    def sample_pair(self, rng: np.random.Generator) -> tuple[str, str]:
        k = int(np.searchsorted(self._flat, rng.random() * self._flat[-1], side="right"))
        k = min(k, self._flat.size - 1)
        n = len(self.nodes)
        return self.nodes[k // n], self.nodes[k % n]


def sample_request(tm: TrafficMatrix, rng: np.random.Generator, index: int, *,
                   arrival_rate_hz: float = 10.0, start_offset_ms: float = 10.0,
                   window_ms: float = 95.0, num_eps: int = 1,
                   fidelity_threshold: float = 0.5) -> Request:
    initiator, responder = tm.sample_pair(rng)
    arrival = round(index * PS_PER_S / arrival_rate_hz)
    start = arrival + round(start_offset_ms * PS_PER_MS)
    end = start + round(window_ms * PS_PER_MS)
    return Request(index, initiator, responder, arrival, start, end, num_eps, fidelity_threshold)


def bottleneck_pairs(initiators: list[str], responders: list[str]) -> list[tuple[str, str]]:
    return [(a, b) for a in initiators for b in responders]


def four_hop_pairs(routing, nodes: list[str], hops: int = 4) -> list[tuple[str, str]]:
    """All ordered pairs whose static route has exactly ``hops`` links."""
    out = []
    for a in nodes:
        for b in nodes:
            if a != b and len(routing.route(a, b)) == hops + 1:
                out.append((a, b))
    return out


def sample_pairs(pairs: list[tuple[str, str]], count: int, seed: int) -> list[tuple[str, str]]:
    """A seeded subset of ``count`` pairs, returned in their original order."""
    if count >= len(pairs):
        return list(pairs)
    rng = np.random.default_rng(seed)
    keep = sorted(rng.choice(len(pairs), size=count, replace=False))
    return [pairs[i] for i in keep]
