"""Bell-diagonal-state calculus.

Weights are ordered (I, X, Y, Z). Label P denotes the Bell state (P x I)|Phi+>,
so I=Phi+, X=Psi+, Y=Psi-, Z=Phi-. With the bit encoding I=(0,0), X=(1,0),
Z=(0,1), Y=(1,1), composing two Pauli labels is a bitwise XOR.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LABELS = ("I", "X", "Y", "Z")
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_FROM_BITS = {v: k for k, v in _BITS.items()}

# XOR[i][j] is the index of label_i (+) label_j
XOR = np.array(
    [
        [LABELS.index(_FROM_BITS[(a[0] ^ b[0], a[1] ^ b[1])]) for b in (_BITS[l] for l in LABELS)]
        for a in (_BITS[l] for l in LABELS)
    ],
    dtype=int,
)
# +1 if the two Paulis commute, -1 otherwise
COMMUTE = np.array(
    [[1 if (a[0] * b[1] + a[1] * b[0]) % 2 == 0 else -1 for b in (_BITS[l] for l in LABELS)]
     for a in (_BITS[l] for l in LABELS)],
    dtype=float,
)

MIXED = np.full(4, 0.25)


@dataclass(frozen=True)
class PauliErrorDistribution:
    p_x: float = 1 / 3
    p_y: float = 1 / 3
    p_z: float = 1 / 3

    def __post_init__(self):
        probs = (self.p_x, self.p_y, self.p_z)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"Pauli error probabilities must be >= 0 and sum to 1, got {probs}")

    def as_array(self) -> np.ndarray:
        """Weights indexed like a BDS vector, with zero on the identity."""
        return np.array([0.0, self.p_x, self.p_y, self.p_z])


UNIFORM_PAULI = PauliErrorDistribution()


@dataclass(frozen=True)
class NoiseParams:
    gate_fidelity: float = 0.99
    measure_fidelity: float = 0.99
    coherence_time: float = 2.0

    def __post_init__(self):
        for name in ("gate_fidelity", "measure_fidelity"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if self.coherence_time <= 0:
            raise ValueError("coherence_time must be positive")

    @property
    def swap_weight(self) -> float:
        return self.gate_fidelity * self.measure_fidelity**2


IDEAL = NoiseParams(1.0, 1.0, 1.0)


class BellDiagonalState:
    """Two-qubit state diagonal in the Bell basis. ``fidelity`` is the Phi+ weight."""

    __slots__ = ("weights",)

    def __init__(self, weights):
        w = np.array(weights, dtype=float)
        if w.shape != (4,):
            raise ValueError("a Bell-diagonal state needs exactly 4 weights")
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"invalid Bell-diagonal weights {w}")
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        w.flags.writeable = False
        self.weights = w

    @property
    def fidelity(self) -> float:
        return float(self.weights[0])

    def __getitem__(self, label: str) -> float:
        return float(self.weights[LABELS.index(label)])

    def __repr__(self) -> str:
        return "BellDiagonalState(" + ", ".join(f"{x:.6g}" for x in self.weights) + ")"

    def __eq__(self, other) -> bool:
        return isinstance(other, BellDiagonalState) and np.array_equal(self.weights, other.weights)

    def allclose(self, other, atol: float = 1e-12) -> bool:
        o = other.weights if isinstance(other, BellDiagonalState) else np.asarray(other)
        return bool(np.allclose(self.weights, o, atol=atol, rtol=0))

    @classmethod
    def werner(cls, fidelity: float) -> "BellDiagonalState":
        r = (1 - fidelity) / 3
        return cls([fidelity, r, r, r])


def xor_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """c_k = sum over i (+) j = k of a_i * b_j."""
    out = np.zeros(4)
    for i in range(4):
        out[XOR[i]] += a[i] * b
    return out


def initial_link_state(f0: float, dist: PauliErrorDistribution = UNIFORM_PAULI) -> BellDiagonalState:
    if not 0.25 <= f0 <= 1:
        raise ValueError(f"initial fidelity must be in [0.25, 1], got {f0}")
    return BellDiagonalState([f0, (1 - f0) * dist.p_x, (1 - f0) * dist.p_y, (1 - f0) * dist.p_z])


def pauli_channel_weights(dt: float, coherence_time: float,
                          dist: PauliErrorDistribution = UNIFORM_PAULI) -> np.ndarray:
    """Weights of the Markovian single-qubit Pauli channel after ``dt`` seconds.

    Pauli P occurs at rate p_P / coherence_time. In the commutation (Walsh)
    basis the channel is diagonal, so the eigenvalue for Pauli Q decays as
    exp(-2 t / T * sum of p_P over the P anticommuting with Q).
    """
    p = dist.as_array()
    anti = (1 - COMMUTE) / 2
    eig = np.exp(-2.0 * dt / coherence_time * (anti @ p))
    return COMMUTE @ eig / 4


def decohere(s: BellDiagonalState, dt: float, coherence_time: float,
             dist: PauliErrorDistribution = UNIFORM_PAULI) -> BellDiagonalState:
    """Apply memory decoherence on one qubit of the pair for ``dt`` seconds."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0:
        return s
    w = pauli_channel_weights(dt, coherence_time, dist)
    return BellDiagonalState(xor_convolve(w, s.weights))


def twirl(s: BellDiagonalState) -> BellDiagonalState:
    """Bilateral random rotation into Werner form; fidelity is unchanged."""
    return BellDiagonalState.werner(s.fidelity)


def depolarize(weights: np.ndarray, keep: float) -> np.ndarray:
    return keep * weights + (1 - keep) * MIXED


def swap(a: BellDiagonalState, b: BellDiagonalState, noise: NoiseParams = IDEAL) -> BellDiagonalState:
    """Entanglement swapping of (x, m) and (m, y) into (x, y)."""
    c = xor_convolve(a.weights, b.weights)
    return BellDiagonalState(depolarize(c, noise.swap_weight))


def purify_analytic(kept: BellDiagonalState, meas: BellDiagonalState,
                    noise: NoiseParams = IDEAL) -> tuple[float, BellDiagonalState]:
    """Success probability and post-selected kept state of bilateral-CNOT purification.

    Both inputs are depolarized with weight ``gate_fidelity`` first. Each
    party's measured bit flips with probability ``1 - measure_fidelity``, so
    with probability f = 2e(1-e) the coincidence test reads the wrong way.
    """
    k = depolarize(kept.weights, noise.gate_fidelity)
    m = depolarize(meas.weights, noise.gate_fidelity)
    kI, kX, kY, kZ = k
    mI, mX, mY, mZ = m
    # X-parities agree: the test passes when no readout error flips it
    agree = np.array([kI * mI + kZ * mZ, kX * mX + kY * mY, kX * mY + kY * mX, kI * mZ + kZ * mI])
    # X-parities differ: passes only on a net readout flip
    differ = np.array([kI * mX + kZ * mY, kX * mI + kY * mZ, kX * mZ + kY * mI, kI * mY + kZ * mX])
    e = 1 - noise.measure_fidelity
    f = 2 * e * (1 - e)
    out = (1 - f) * agree + f * differ
    p = float(out.sum())
    return p, BellDiagonalState(out / p)


@dataclass
class PurifyOutcome:
    success: bool
    p_succ: float
    out: BellDiagonalState | None


def purify(kept: BellDiagonalState, meas: BellDiagonalState, noise: NoiseParams,
           rng: np.random.Generator) -> PurifyOutcome:
    p, out = purify_analytic(kept, meas, noise)
    if rng.random() < p:
        return PurifyOutcome(True, p, out)
    return PurifyOutcome(False, p, None)
