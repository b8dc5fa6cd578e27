"""Closed-form maps on Bell-diagonal states.

A Bell-diagonal state (BDS) is stored as its weights on
``(Phi+, Phi-, Psi+, Psi-)``. The maps here are what the network simulator
uses between events; :mod:`dqsense.densmat` holds circuit-level oracles for
each of them.

Memory decoherence is modeled as an independent continuous-time Pauli
channel per qubit with rates ``gamma_j = 3 w_j / (4 tau)``. With the default
uniform pattern this is depolarizing with total error probability
``3/4 (1 - exp(-t/tau))``. This stands in for the idling model of the
original simulation study, which is not reproduced in closed form there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .errors import ValidationError

Lambdas = tuple[float, float, float, float]

# Single-qubit Pauli action on the Bell-basis weights (as index permutations).
_PERM_X = (2, 3, 0, 1)
_PERM_Y = (3, 2, 1, 0)
_PERM_Z = (1, 0, 3, 2)

DENOMINATOR_FLOOR = 1e-300


def _check_simplex(values: Sequence[float], name: str, tol: float = 1e-12) -> None:
    if any(v < -tol for v in values):
        raise ValidationError(f"{name} has negative entries: {tuple(values)}")
    if abs(sum(values) - 1) > tol:
        raise ValidationError(f"{name} sums to {sum(values)!r}, not 1")


@dataclass(frozen=True)
class BellDiagonalState:
    lambdas: Lambdas
    last_update_time: float = 0.0

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        if len(lam) != 4:
            raise ValidationError("a Bell-diagonal state has four weights")
        _check_simplex(lam, "Bell-diagonal weights")
        object.__setattr__(self, "lambdas", lam)

    @classmethod
    def werner(cls, fidelity: float, time: float = 0.0):
        e = (1 - fidelity) / 3
        return cls((fidelity, e, e, e), time)

    @classmethod
    def from_pattern(cls, fidelity: float, pattern: Sequence[float], time: float = 0.0):
        """Fidelity on Phi+, the remainder split over (Phi-, Psi+, Psi-) by ``pattern``."""
        _check_simplex(pattern, "raw Bell error pattern")
        r = 1 - fidelity
        return cls((fidelity, r * pattern[0], r * pattern[1], r * pattern[2]), time)

    @property
    def fidelity(self) -> float:
        return self.lambdas[0]

    @property
    def entangled(self) -> bool:
        return self.lambdas[0] > 0.5


@dataclass(frozen=True)
class MemoryErrorModel:
    """Idling noise of one quantum memory: coherence time and Pauli error pattern (w_x, w_y, w_z)."""

    coherence_time: float
    pattern: tuple[float, float, float] = field(default=(1 / 3, 1 / 3, 1 / 3))

    def __post_init__(self):
        if not self.coherence_time > 0:
            raise ValidationError("coherence_time must be positive")
        pattern = tuple(float(w) for w in self.pattern)
        if len(pattern) != 3:
            raise ValidationError("memory error pattern has three weights")
        _check_simplex(pattern, "memory error pattern")
        object.__setattr__(self, "pattern", pattern)
        object.__setattr__(self, "_uniform", all(abs(w - 1 / 3) < 1e-12 for w in pattern))

    def pauli_probabilities(self, dt: float) -> tuple[float, float, float, float]:
        """``(p_I, p_X, p_Y, p_Z)`` accumulated over an idle time ``dt``."""
        if dt < 0:
            raise ValidationError(f"idle time must be nonnegative, got {dt}")
        if dt == 0 or math.isinf(self.coherence_time):
            return (1.0, 0.0, 0.0, 0.0)
        wx, wy, wz = self.pattern
        rate = 1.5 * dt / self.coherence_time  # 2 * 3/(4 tau) * dt
        lx = math.exp(-rate * (wy + wz))
        ly = math.exp(-rate * (wx + wz))
        lz = math.exp(-rate * (wx + wy))
        return (
            (1 + lx + ly + lz) / 4,
            (1 + lx - ly - lz) / 4,
            (1 - lx + ly - lz) / 4,
            (1 - lx - ly + lz) / 4,
        )

    @property
    def is_depolarizing(self) -> bool:
        return self._uniform

    def error_probability(self, dt: float) -> float:
        return 1 - self.pauli_probabilities(dt)[0]


@dataclass(frozen=True)
class OperationErrorModel:
    """Two-qubit gate fidelity ``p`` and single-qubit measurement fidelity ``eta`` of a node."""

    gate_fidelity: float = 1.0
    measurement_fidelity: float = 1.0

    def __post_init__(self):
        for name in ("gate_fidelity", "measurement_fidelity"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")


def apply_pauli_channel(lam: Sequence[float], probs: Sequence[float]) -> Lambdas:
    p_i, p_x, p_y, p_z = probs
    return tuple(
        p_i * lam[j] + p_x * lam[_PERM_X[j]] + p_y * lam[_PERM_Y[j]] + p_z * lam[_PERM_Z[j]]
        for j in range(4)
    )


def decohere_lambdas(
    lam: Sequence[float],
    dt_a: float,
    dt_b: float,
    mem_a: MemoryErrorModel,
    mem_b: MemoryErrorModel,
) -> Lambdas:
    out = apply_pauli_channel(lam, mem_a.pauli_probabilities(dt_a))
    return apply_pauli_channel(out, mem_b.pauli_probabilities(dt_b))


def decohere(
    bds: BellDiagonalState,
    dt_a: float,
    dt_b: float,
    mem_a: MemoryErrorModel,
    mem_b: MemoryErrorModel,
) -> BellDiagonalState:
    """Idle each half of the pair for its own duration."""
    if dt_a < 0 or dt_b < 0:
        raise ValidationError("idle times must be nonnegative")
    lam = decohere_lambdas(bds.lambdas, dt_a, dt_b, mem_a, mem_b)
    return replace(bds, lambdas=lam, last_update_time=bds.last_update_time + max(dt_a, dt_b))


def swap_lambdas(
    l: Sequence[float], r: Sequence[float], p: float, eta1: float, eta2: float
) -> Lambdas:
    c_i = l[0] * r[0] + l[1] * r[1] + l[2] * r[2] + l[3] * r[3]
    c_x = l[0] * r[1] + l[1] * r[0] + l[2] * r[3] + l[3] * r[2]
    c_y = l[0] * r[3] + l[3] * r[0] + l[1] * r[2] + l[2] * r[1]
    c_z = l[0] * r[2] + l[2] * r[0] + l[1] * r[3] + l[3] * r[1]
    a, b = eta1, eta2
    na, nb = 1 - a, 1 - b
    noise = (1 - p) / 4
    return (
        p * (a * b * c_i + na * b * c_x + a * nb * c_z + na * nb * c_y) + noise,
        p * (na * b * c_i + a * b * c_x + na * nb * c_z + a * nb * c_y) + noise,
        p * (a * nb * c_i + na * nb * c_x + a * b * c_z + na * b * c_y) + noise,
        p * (na * nb * c_i + a * nb * c_x + na * b * c_z + a * b * c_y) + noise,
    )


def swap(
    left: BellDiagonalState,
    right: BellDiagonalState,
    gate: OperationErrorModel,
    meas1_fid: float | None = None,
    meas2_fid: float | None = None,
) -> BellDiagonalState:
    """Noisy Bell-state measurement at the middle node, Pauli frame already corrected.

    Measurement fidelities default to the middle node's ``measurement_fidelity``.
    """
    eta1 = gate.measurement_fidelity if meas1_fid is None else meas1_fid
    eta2 = gate.measurement_fidelity if meas2_fid is None else meas2_fid
    lam = swap_lambdas(left.lambdas, right.lambdas, gate.gate_fidelity, eta1, eta2)
    return BellDiagonalState(lam, max(left.last_update_time, right.last_update_time))


def purify_lambdas(
    k: Sequence[float],
    m: Sequence[float],
    p_a: float,
    p_b: float,
    eta_a: float,
    eta_b: float,
) -> tuple[Lambdas, float]:
    """Normalized kept-pair weights and success probability."""
    pp = p_a * p_b
    same = eta_a * eta_b + (1 - eta_a) * (1 - eta_b)
    diff = 1 - same
    noise = (1 - pp) / 8
    raw = (
        pp * (same * (k[0] * m[0] + k[1] * m[1]) + diff * (k[0] * m[2] + k[1] * m[3])) + noise,
        pp * (same * (k[0] * m[1] + k[1] * m[0]) + diff * (k[0] * m[3] + k[1] * m[2])) + noise,
        pp * (same * (k[2] * m[2] + k[3] * m[3]) + diff * (k[2] * m[0] + k[3] * m[1])) + noise,
        pp * (same * (k[2] * m[3] + k[3] * m[2]) + diff * (k[2] * m[1] + k[3] * m[0])) + noise,
    )
    p_s = sum(raw)
    norm = max(p_s, DENOMINATOR_FLOOR)
    return tuple(v / norm for v in raw), p_s


def purify(
    kept: BellDiagonalState,
    measured: BellDiagonalState,
    gates: tuple[float, float],
    meas: tuple[float, float],
) -> tuple[BellDiagonalState, float, float]:
    """Bilocal-CNOT recurrence purification of ``kept`` using ``measured``.

    Returns ``(output state given success, success probability, output fidelity)``.
    """
    lam, p_s = purify_lambdas(kept.lambdas, measured.lambdas, gates[0], gates[1], meas[0], meas[1])
    if p_s <= 0:
        raise ValidationError("purification of these pairs never succeeds")
    out = BellDiagonalState(lam, max(kept.last_update_time, measured.last_update_time))
    return out, p_s, lam[0]


def dejmps_rotate_lambdas(lam: Sequence[float]) -> Lambdas:
    """Weights after the local rotation Rx(pi/2) x Rx(-pi/2): exchanges Phi- and Psi-."""
    return (lam[0], lam[3], lam[2], lam[1])


def dejmps_purify(
    kept: BellDiagonalState,
    measured: BellDiagonalState,
    gates: tuple[float, float],
    meas: tuple[float, float],
) -> tuple[BellDiagonalState, float, float]:
    """:func:`purify` preceded by the DEJMPS basis rotation on both input pairs.

    Without the rotation the phase-flip component is never detected, so
    repeated rounds drift towards an equal Phi+/Phi- mixture.
    """
    k = replace(kept, lambdas=dejmps_rotate_lambdas(kept.lambdas))
    m = replace(measured, lambdas=dejmps_rotate_lambdas(measured.lambdas))
    return purify(k, m, gates, meas)


def compose_pauli(q: Sequence[float], r: Sequence[float]) -> tuple[float, float, float, float]:
    """Probabilities of the product of two independent Pauli errors (phases dropped)."""
    qi, qx, qy, qz = q
    ri, rx, ry, rz = r
    return (
        qi * ri + qx * rx + qy * ry + qz * rz,
        qi * rx + qx * ri + qy * rz + qz * ry,
        qi * ry + qy * ri + qx * rz + qz * rx,
        qi * rz + qz * ri + qx * ry + qy * rx,
    )


def decohere_pair_lambdas(lam: Sequence[float], dt: float, mem: MemoryErrorModel) -> Lambdas:
    """Both qubits idle for ``dt`` in identical memories.

    Any single-qubit Pauli acts on a Bell state like the same Pauli on the
    partner qubit, so the two channels fold into one.
    """
    if dt == 0 or math.isinf(mem.coherence_time):
        return tuple(lam)
    if mem.is_depolarizing:
        # both Bloch factors exp(-dt/tau): the pair channel is depolarizing too
        keep = math.exp(-2 * dt / mem.coherence_time)
        mix = (1 - keep) / 4
        return (keep * lam[0] + mix, keep * lam[1] + mix, keep * lam[2] + mix, keep * lam[3] + mix)
    q = mem.pauli_probabilities(dt)
    return apply_pauli_channel(lam, compose_pauli(q, q))
