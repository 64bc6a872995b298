"""Simulation parameters. Defaults reproduce the reference parameter table."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .bds import NoiseParams, PauliErrorDistribution


@dataclass
class Params:
    # classical communication
    end_process_delay_us: float = 100.0
    forward_delay_us: float = 20.0
    light_speed: float = 2e8
    # node hardware
    memories_per_node: int = 10
    max_memory_acp: int = 5
    memory_efficiency: float = 0.6
    coherence_time_s: float = 2.0
    pauli_errors: list[float] = field(default_factory=lambda: [1 / 3, 1 / 3, 1 / 3])
    gate_fidelity: float = 0.99
    measure_fidelity: float = 0.99
    # links
    attenuation_db_per_km: float = 0.2
    link_distance_km: float = 10.0
    detector_efficiency: float = 0.95
    bsm_success_rate: float = 0.5
    initial_fidelity: float = 0.95
    swap_success_rate: float = 1.0
    emission_period_us: float = 50.0
    # adaptive control
    delta: float = 0.05
    acp_ttl_s: float = 1.0
    sleep_base_ms: float = 10.0
    # requests
    start_offset_ms: float = 10.0
    window_ms: float = 95.0
    fidelity_threshold: float = 0.5
    num_eps: int = 1

    @property
    def noise(self) -> NoiseParams:
        return NoiseParams(self.gate_fidelity, self.measure_fidelity, self.coherence_time_s)

    @property
    def pauli(self) -> PauliErrorDistribution:
        return PauliErrorDistribution(*self.pauli_errors)

    @property
    def reserved_memories(self) -> int:
        return self.memories_per_node - self.max_memory_acp

    def to_dict(self) -> dict:
        return asdict(self)
