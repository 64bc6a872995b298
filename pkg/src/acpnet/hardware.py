"""Physical layer: memories, fiber links with a midpoint BSM, classical latency."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TYPE_CHECKING

from . import bds
from .kernel import PS_PER_S, PS_PER_US

if TYPE_CHECKING:
    from .protocols import EPRecord

ACP = "acp"
RESERVED = "reserved"


def transmittance(length_km: float, attenuation_db_per_km: float) -> float:
    if length_km < 0:
        raise ValueError("fiber length must be non-negative")
    return 10 ** (-attenuation_db_per_km * length_km / 10)


@dataclass(frozen=True)
class MidpointBSM:
    detector_efficiency: float = 0.95
    bsm_success: float = 0.5


@dataclass
class QuantumLink:
    u: str
    v: str
    length_km: float
    attenuation_db_per_km: float = 0.2
    bsm: MidpointBSM = field(default_factory=MidpointBSM)

    def __post_init__(self):
        if self.length_km <= 0:
            raise ValueError(f"link {self.u}-{self.v} must have positive length")
        if self.u == self.v:
            raise ValueError("self loops are not links")

    @property
    def key(self) -> tuple[str, str]:
        return link_key(self.u, self.v)

    @property
    def primary(self) -> str:
        return max(self.u, self.v)

    def other(self, node: str) -> str:
        return self.v if node == self.u else self.u


def link_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u < v else (v, u)


def attempt_success_prob(link: QuantumLink, mem_eff: float) -> float:
    """Both photons must be emitted, survive half the fiber and be detected."""
    arm = mem_eff * transmittance(link.length_km / 2, link.attenuation_db_per_km) * link.bsm.detector_efficiency
    return link.bsm.bsm_success * arm * arm


@dataclass(frozen=True)
class ClassicalParams:
    light_speed: float = 2e8
    forward_delay_s: float = 20e-6
    end_process_delay_s: float = 100e-6

    def __post_init__(self):
        if min(self.light_speed, self.forward_delay_s, self.end_process_delay_s) <= 0:
            raise ValueError("classical parameters must be positive")


def classical_latency_ps(path_length_m: float, hops: int, params: ClassicalParams) -> int:
    """Latency in integer picoseconds: d/c + hops * forward + end processing.

    Evaluated with rationals so decimal inputs (e.g. 20e-6 s) round once at the end.
    """
    if path_length_m < 0 or hops < 0:
        raise ValueError("path length and hop count must be non-negative")
    t = (Fraction(str(path_length_m)) / Fraction(str(params.light_speed))
         + hops * Fraction(str(params.forward_delay_s))
         + Fraction(str(params.end_process_delay_s)))
    return round(t * PS_PER_S)


def classical_latency(path_length_m: float, hops: int, params: ClassicalParams) -> float:
    return classical_latency_ps(path_length_m, hops, params) / PS_PER_S


def attempt_cycle_ps(link: QuantumLink, params: ClassicalParams, emission_period_s: float) -> tuple[int, int]:
    """(negotiation round trip, full attempt cycle) for one heralded attempt.

    An attempt is negotiated over the direct classical channel, then photons
    fly to the midpoint and the herald comes back over half the link.
    """
    rtt = 2 * classical_latency_ps(link.length_km * 1000, 0, params)
    half_m = link.length_km * 500
    flight = round(Fraction(str(half_m)) / Fraction(str(params.light_speed)) * PS_PER_S)
    herald = classical_latency_ps(half_m, 0, params)
    cycle = max(round(emission_period_s * PS_PER_S), rtt + flight + herald)
    return rtt, cycle


@dataclass(eq=False)
class QuantumMemory:
    id: str
    owner: str
    index: int
    slot_class: str
    efficiency: float = 0.6
    coherence_time: float = 2.0
    emission_period: float = 50e-6
    ep: "EPRecord | None" = None
    holder: object | None = None  # protocol/slot/reservation currently owning the memory
    last_touch: int = 0

    @property
    def free(self) -> bool:
        return self.holder is None and self.ep is None

    def __repr__(self) -> str:
        return f"<mem {self.id} {self.slot_class}>"


def touch_memory(mem: QuantumMemory, now_ps: int, dist: bds.PauliErrorDistribution = bds.UNIFORM_PAULI) -> None:
    """Bring the stored half up to ``now_ps`` by decohering its qubit."""
    ep = mem.ep
    if ep is None:
        return
    dt = now_ps - mem.last_touch
    if dt < 0:
        raise ValueError("memory touched in the past")
    if dt:
        ep.state = bds.decohere(ep.state, dt / PS_PER_S, mem.coherence_time, dist)
    mem.last_touch = now_ps


def us(x: float) -> int:
    return round(x * PS_PER_US)
