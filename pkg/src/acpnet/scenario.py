"""Scenario description and the experiment runner."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .kernel import PS_PER_S
from .metrics import MetricsRecord, Window, record_metrics, windows
from .network import Network
from .params import Params
from .topology import Topology
from .traffic import TrafficMatrix, sample_request

log = logging.getLogger(__name__)


@dataclass
class TrafficPhase:
    matrix: TrafficMatrix
    active_from_s: float = 0.0


@dataclass
class Scenario:
    topology: Topology
    traffic: list[TrafficPhase]
    strategy: str = "odo"
    purification: bool = False
    selection_policy: str = "freshest"
    duration_s: float = 100.0
    arrival_rate_hz: float = 10.0
    seed: int = 0
    params: Params = field(default_factory=Params)
    summary_window_s: float = 5.0
    trace: bool = False

    def __post_init__(self):
        if self.strategy == "odo" and self.purification:
            raise ValueError("purification cannot be enabled for the on-demand-only strategy")
        if self.selection_policy not in ("freshest", "random"):
            raise ValueError(f"unknown selection policy {self.selection_policy!r}")
        if not self.traffic:
            raise ValueError("scenario needs at least one traffic phase")
        self.traffic = sorted(self.traffic, key=lambda t: t.active_from_s)

    @property
    def label(self) -> str:
        if self.strategy == "odo":
            return "odo"
        if self.purification:
            return self.strategy
        return f"{self.strategy}-{self.selection_policy}"

    def phase_at(self, t_s: float) -> TrafficMatrix:
        current = self.traffic[0].matrix
        for phase in self.traffic:
            if phase.active_from_s <= t_s:
                current = phase.matrix
        return current


@dataclass
class RunResult:
    scenario: Scenario
    records: list[MetricsRecord]
    windows: list[Window]
    network: Network
    wall_s: float

    @property
    def served(self) -> list[MetricsRecord]:
        return [r for r in self.records if r.served]


def run_scenario(sc: Scenario) -> RunResult:
    t0 = time.perf_counter()
    net = Network(sc.topology, sc.params, sc.strategy, sc.purification, sc.selection_policy,
                  seed=sc.seed, trace=sc.trace)
    records: list[MetricsRecord] = []

    def done(rec):
        req = rec.request
        records.append(record_metrics(req, rec.served_at, rec.fidelity, len(rec.path) - 1, sc.label))

    net.on_request_done = done
    rng = net.rng("traffic", "requests")
    p = sc.params
    n_requests = int(round(sc.duration_s * sc.arrival_rate_hz))

    def arrive(index: int):
        t_s = net.now() / PS_PER_S
        req = sample_request(sc.phase_at(t_s), rng, index, arrival_rate_hz=sc.arrival_rate_hz,
                             start_offset_ms=p.start_offset_ms, window_ms=p.window_ms,
                             num_eps=p.num_eps, fidelity_threshold=p.fidelity_threshold)
        net.submit(req)
        if index + 1 < n_requests:
            net.timeline.call_at(round((index + 1) * PS_PER_S / sc.arrival_rate_hz), "traffic",
                                 arrive, index + 1, payload="request_arrival")

    net.start_acp()
    if n_requests:
        net.timeline.call_at(0, "traffic", arrive, 0, payload="request_arrival")
    horizon = round(sc.duration_s * PS_PER_S)
    last_end = horizon
    if n_requests:
        last_arrival = round((n_requests - 1) * PS_PER_S / sc.arrival_rate_hz)
        last_end = last_arrival + round((p.start_offset_ms + p.window_ms) * 1e9)
    net.run_until(max(horizon, last_end))
    net.audit_counters()
    records.sort(key=lambda r: r.request_id)
    wins = windows(records, sc.summary_window_s, sc.duration_s)
    wall = time.perf_counter() - t0
    log.info("%s: %d requests, %d events, %.1f s wall", sc.label, len(records),
             net.timeline.dispatched, wall)
    return RunResult(sc, records, wins, net, wall)
