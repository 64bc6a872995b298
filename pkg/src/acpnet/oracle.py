"""Exact density-matrix reference for the Bell-diagonal calculus.

Only used for validation: every analytic operation in ``bds`` can be replayed
here on explicit 4x4 / 16x16 matrices and compared component-wise.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from . import bds
from .bds import BellDiagonalState, NoiseParams, PauliErrorDistribution

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
BELL = {label: np.kron(PAULI[label], I2) @ PHI_PLUS for label in bds.LABELS}


def density_from_bds(s: BellDiagonalState) -> np.ndarray:
    return sum(w * np.outer(BELL[l], BELL[l].conj()) for l, w in zip(bds.LABELS, s.weights))


def bds_from_density(rho: np.ndarray) -> np.ndarray:
    return np.array([np.real(BELL[l].conj() @ rho @ BELL[l]) for l in bds.LABELS])


def _superop(op_left: np.ndarray, op_right: np.ndarray) -> np.ndarray:
    # row-major vec: vec(A rho B) = (A kron B^T) vec(rho)
    return np.kron(op_left, op_right.T)


def decohere_dm(rho: np.ndarray, dt: float, coherence_time: float,
                dist: PauliErrorDistribution) -> np.ndarray:
    """Integrate the single-qubit Pauli Lindbladian on the second qubit."""
    rates = {"X": dist.p_x, "Y": dist.p_y, "Z": dist.p_z}
    gen = np.zeros((16, 16), dtype=complex)
    for label, rate in rates.items():
        k = np.kron(I2, PAULI[label])
        gen += rate / coherence_time * (_superop(k, k.conj().T) - np.eye(16))
    vec = expm(dt * gen) @ rho.reshape(16)
    return vec.reshape(4, 4)


def depolarize_dm(rho: np.ndarray, keep: float) -> np.ndarray:
    return keep * rho + (1 - keep) * np.eye(4) / 4


def _bsm_project(rho4: np.ndarray, label: str) -> np.ndarray:
    """Project qubits (m1, m2) of a 4-qubit (a, m1, m2, b) state onto a Bell state."""
    t = rho4.reshape([2] * 8)
    v = BELL[label].reshape(2, 2)
    red = np.einsum("xy,axybcijd,ij->abcd", v.conj(), t, v)
    return red.reshape(4, 4)


@lru_cache(maxsize=None)
def _swap_corrections() -> dict[str, str]:
    """For each BSM outcome, the Pauli on the far qubit that restores Phi+ for perfect inputs."""
    perfect = np.outer(BELL["I"], BELL["I"].conj())
    rho4 = np.kron(perfect, perfect)
    out = {}
    for k in bds.LABELS:
        red = _bsm_project(rho4, k)
        red /= np.trace(red)
        best = max(
            bds.LABELS,
            key=lambda c: np.real(
                BELL["I"].conj() @ np.kron(I2, PAULI[c]) @ red @ np.kron(I2, PAULI[c]).conj().T @ BELL["I"]
            ),
        )
        out[k] = best
    return out


def swap_dm(rho_a: np.ndarray, rho_b: np.ndarray, noise: NoiseParams) -> np.ndarray:
    rho4 = np.kron(rho_a, rho_b)
    total = np.zeros((4, 4), dtype=complex)
    for k, corr in _swap_corrections().items():
        c = np.kron(I2, PAULI[corr])
        total += c @ _bsm_project(rho4, k) @ c.conj().T
    return depolarize_dm(total, noise.swap_weight)


@lru_cache(maxsize=None)
def _twirl_group() -> tuple[np.ndarray, ...]:
    """The 12 single-qubit unitaries generated by the Paulis and the X->Y->Z cycle."""
    cycle = (I2 - 1j * (PAULI["X"] + PAULI["Y"] + PAULI["Z"])) / 2
    rots = [I2, cycle, cycle @ cycle]
    return tuple(PAULI[p] @ r for p in bds.LABELS for r in rots)


def twirl_dm(rho: np.ndarray) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    group = _twirl_group()
    for u in group:
        uu = np.kron(u, u.conj())
        out += uu @ rho @ uu.conj().T
    return out / len(group)


def _cnot(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    u = np.zeros((dim, dim))
    for i in range(dim):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        j = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        u[j, i] = 1
    return u


def purify_dm(rho_kept: np.ndarray, rho_meas: np.ndarray,
              noise: NoiseParams) -> tuple[float, np.ndarray]:
    """Bilateral CNOT + Z-basis coincidence test; qubit order (A1, B1, A2, B2)."""
    rho = np.kron(depolarize_dm(rho_kept, noise.gate_fidelity),
                  depolarize_dm(rho_meas, noise.gate_fidelity))
    u = _cnot(4, 1, 3) @ _cnot(4, 0, 2)
    rho = u @ rho @ u.T
    t = rho.reshape([2] * 8)
    e = 1 - noise.measure_fidelity
    out = np.zeros((4, 4), dtype=complex)
    for a in (0, 1):
        for b in (0, 1):
            accept = (1 - e) ** 2 + e**2 if a == b else 2 * e * (1 - e)
            out += accept * t[:, :, a, b, :, :, a, b].reshape(4, 4)
    p = float(np.real(np.trace(out)))
    return p, out / p


def oracle_validate(op: str, *args, noise: NoiseParams = bds.IDEAL,
                    dist: PauliErrorDistribution = bds.UNIFORM_PAULI) -> float:
    """Max absolute component deviation between the analytic and matrix routes.

    ``op`` is one of ``decohere`` (args: state, dt, coherence_time), ``twirl`` (args: state),
    ``swap`` (args: a, b) or ``purify`` (args: kept, meas; the success
    probability is compared as an extra component).
    """
    if op == "decohere":
        s, dt, T = args
        ref = bds_from_density(decohere_dm(density_from_bds(s), dt, T, dist))
        return float(np.max(np.abs(ref - bds.decohere(s, dt, T, dist).weights)))
    if op == "twirl":
        (s,) = args
        ref = bds_from_density(twirl_dm(density_from_bds(s)))
        return float(np.max(np.abs(ref - bds.twirl(s).weights)))
    if op == "swap":
        a, b = args
        ref = bds_from_density(swap_dm(density_from_bds(a), density_from_bds(b), noise))
        return float(np.max(np.abs(ref - bds.swap(a, b, noise).weights)))
    if op == "purify":
        kept, meas = args
        p_ref, rho = purify_dm(density_from_bds(kept), density_from_bds(meas), noise)
        p, out = bds.purify_analytic(kept, meas, noise)
        dev = np.abs(bds_from_density(rho) - out.weights)
        return float(max(np.max(dev), abs(p_ref - p)))
    raise ValueError(f"unknown op {op!r}")
