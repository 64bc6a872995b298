"""Seeded discrete-event kernel with integer-picosecond time."""
from __future__ import annotations

import hashlib
import heapq
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

PS_PER_S = 10**12
PS_PER_MS = 10**9
PS_PER_US = 10**6


def seconds_to_ps(t: float) -> int:
    return int(round(t * PS_PER_S))


def ps_to_seconds(t: int) -> float:
    return t / PS_PER_S


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current time."""


@dataclass(eq=False)
class Event:
    fire_time: int
    seq: int
    target: str
    payload: Any
    handler: Callable[..., None] | None = None
    args: tuple = ()
    cancelled: bool = False

    def cancel(self) -> None:
        self.cancelled = True


@dataclass
class RunStats:
    dispatched: int
    now: int


class RngStreams:
    """Independent generators keyed by (node, purpose), split from one master seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[tuple[str, str], np.random.Generator] = {}

    def get(self, node: str, purpose: str) -> np.random.Generator:
        key = (str(node), purpose)
        rng = self._streams.get(key)
        if rng is None:
            ss = np.random.SeedSequence(
                self.seed,
                spawn_key=(zlib.crc32(key[0].encode()), zlib.crc32(purpose.encode())),
            )
            rng = np.random.default_rng(ss)
            self._streams[key] = rng
        return rng


@dataclass
class Timeline:
    """Event queue ordered by (fire_time, seq); FIFO among equal times."""

    seed: int = 0
    trace: bool = False
    _queue: list = field(default_factory=list, repr=False)
    _seq: int = 0
    _now: int = 0
    dispatched: int = 0

    def __post_init__(self) -> None:
        self.rng = RngStreams(self.seed)
        self._digest = hashlib.sha256()
        self.trace_log: list[tuple[int, int, str, str]] = []

    def now(self) -> int:
        return self._now

    def schedule(self, event: Event) -> Event:
        if event.fire_time < self._now:
            raise SchedulingError(
                f"event for {event.target!r} at {event.fire_time} ps is before now={self._now} ps"
            )
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (event.fire_time, event.seq, event))
        return event

    def call_at(self, time: int, target: str, handler: Callable[..., None], *args,
                payload: Any = None) -> Event:
        return self.schedule(Event(int(time), 0, target, payload, handler, args))

    def call_after(self, delay: int, target: str, handler: Callable[..., None], *args,
                   payload: Any = None) -> Event:
        return self.call_at(self._now + int(delay), target, handler, *args, payload=payload)

    def run_until(self, t_end: int) -> RunStats:
        count = 0
        queue = self._queue
        while queue and queue[0][0] <= t_end:
            fire_time, seq, event = heapq.heappop(queue)
            if event.cancelled:
                continue
            self._now = fire_time
            count += 1
            if self.trace:
                kind = event.payload if isinstance(event.payload, str) else type(event.payload).__name__
                self.trace_log.append((fire_time, seq, event.target, kind))
                self._digest.update(f"{fire_time}|{seq}|{event.target}|{kind};".encode())
            if event.handler is not None:
                event.handler(*event.args)
        self._now = max(self._now, int(t_end))
        self.dispatched += count
        return RunStats(count, self._now)

    def pending(self) -> int:
        return sum(1 for _, _, e in self._queue if not e.cancelled)

    def trace_digest(self) -> str:
        return self._digest.hexdigest()
