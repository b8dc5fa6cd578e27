"""Closed-form metrology of GHZ-diagonal probes for average-phase estimation.

Every function here is pure. The probe is an ``m = n*d`` qubit GHZ-diagonal
state, the parameters are phases ``x_i`` accumulated through the collective
spin ``H_i = 1/2 sum_k Z_(i,k)`` of node ``i``, and the target is
``theta_1 = v1 . x`` with ``v1 = (1, ..., 1)/sqrt(d)``.

GHZ basis indexing: index ``2b + s`` labels ``(|b> + (-1)^s |2^m - 1 - b>)/sqrt(2)``
for ``b < 2^(m-1)``. Partner indices differ in the lowest bit only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .errors import NoAdvantageError, ValidationError

EIGENVALUE_CUTOFF = 1e-12

#: Returned by :func:`azimuthal_variance` where error propagation diverges.
DIVERGENT = math.inf


def partner(index: int) -> int:
    """GHZ basis index with the same bitstring pair and opposite phase."""
    return index ^ 1


@dataclass(frozen=True)
class GhzDiagonalState:
    """Eigenvalue distribution of an ``num_qubits``-qubit GHZ-diagonal state."""

    num_qubits: int
    eigenvalues: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValidationError(f"num_qubits must be positive, got {self.num_qubits}")
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.shape != (2**self.num_qubits,):
            raise ValidationError(
                f"expected {2**self.num_qubits} eigenvalues, got shape {lam.shape}"
            )
        if np.any(lam < 0):
            raise ValidationError("eigenvalues must be nonnegative")
        if abs(lam.sum() - 1.0) > 1e-12:
            raise ValidationError(f"eigenvalues sum to {lam.sum()!r}, not 1")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @classmethod
    def from_mapping(cls, num_qubits: int, eigenvalues: Mapping[int, float]):
        lam = np.zeros(2**num_qubits)
        for index, value in eigenvalues.items():
            if not 0 <= index < 2**num_qubits:
                raise ValidationError(f"GHZ basis index {index} out of range")
            lam[index] = value
        return cls(num_qubits, lam)

    @classmethod
    def pure(cls, num_qubits: int):
        return cls.from_mapping(num_qubits, {0: 1.0})

    @classmethod
    def maximally_mixed(cls, num_qubits: int):
        return cls(num_qubits, np.full(2**num_qubits, 2.0**-num_qubits))

    @classmethod
    def depolarized(cls, fidelity: float, num_qubits: int):
        """GHZ state mixed with white noise, parameterized by its GHZ fidelity."""
        lam = np.full(2**num_qubits, (1 - fidelity) / (2**num_qubits - 1))
        lam[0] = fidelity
        return cls(num_qubits, lam)

    @classmethod
    def dephased_rank2(cls, fidelity: float, num_qubits: int):
        return cls.from_mapping(num_qubits, {0: fidelity, 1: 1 - fidelity})

    @property
    def fidelity(self) -> float:
        return float(self.eigenvalues[0])


@dataclass(frozen=True)
class DepolarizedGhzModel:
    """Depolarized ``d``-qubit GHZ probe extended to ``n`` qubits per node.

    ``local_gen_quality`` (k) multiplies the fidelity by ``k**(n-1)``; k = 1
    means noiseless local entanglement generation.
    """

    fidelity: float
    num_nodes: int
    sensors_per_node: int = 1
    local_gen_quality: float = 1.0

    def __post_init__(self):
        if not 0 < self.fidelity <= 1:
            raise ValidationError(f"fidelity must lie in (0, 1], got {self.fidelity}")
        if self.num_nodes < 2:
            raise ValidationError("num_nodes must be at least 2")
        if self.sensors_per_node < 1:
            raise ValidationError("sensors_per_node must be at least 1")
        if not 0 < self.local_gen_quality <= 1:
            raise ValidationError("local_gen_quality must lie in (0, 1]")


@dataclass(frozen=True)
class SensingProblem:
    num_nodes: int
    sensors_per_node: int = 1

    def __post_init__(self):
        if self.num_nodes < 1 or self.sensors_per_node < 1:
            raise ValidationError("num_nodes and sensors_per_node must be positive")

    @property
    def num_qubits(self) -> int:
        return self.num_nodes * self.sensors_per_node

    @property
    def direction(self) -> np.ndarray:
        return np.full(self.num_nodes, 1 / math.sqrt(self.num_nodes))


def c_coefficient(state: GhzDiagonalState) -> float:
    """Probe-quality coefficient C: the Heisenberg factor becomes ``(1 - C) n^2``.

    Sum of ``2 l_a l_b / (l_a + l_b)`` over ordered partner pairs; each unordered
    pair is counted twice.
    """
    lam = np.where(state.eigenvalues < EIGENVALUE_CUTOFF, 0.0, state.eigenvalues)
    even, odd = lam[0::2], lam[1::2]
    total = even + odd
    mask = total > 0
    c = 2.0 * np.sum(2.0 * even[mask] * odd[mask] / total[mask])
    return float(min(max(c, 0.0), 1.0))


def qfi_average(c: float, problem: SensingProblem) -> float:
    """QFI for ``theta_1``: ``d (1 - C) n^2``."""
    if not -1e-12 <= c <= 1 + 1e-12:
        raise ValidationError(f"C must lie in [0, 1], got {c}")
    return problem.num_nodes * (1 - c) * problem.sensors_per_node**2


def qfim_local(c: float, problem: SensingProblem) -> np.ndarray:
    """Full d x d QFIM for the local phases: ``(1 - C) n^2`` times the ones matrix."""
    d = problem.num_nodes
    return (1 - c) * problem.sensors_per_node**2 * np.ones((d, d))


def c_dp(fidelity: float, d: int, n: int = 1, k: float = 1.0) -> float:
    """C of the ``nd``-qubit depolarized GHZ state with fidelity ``k**(n-1) F``."""
    m = n * d
    f = k ** (n - 1) * fidelity
    # numerator and denominator divided by 4^m so large m cannot overflow
    h = 2.0**-m
    num = (1 - f) * (f + h - 2 * h * h)
    den = ((1 - 2 * h) * f + h) * (1 - h)
    return num / den


def eta_depolarized(model: DepolarizedGhzModel) -> float:
    """Relative advantage ``d (1 - C_dp)`` over the optimal local strategy."""
    d = model.num_nodes
    return d * (1 - c_dp(model.fidelity, d, model.sensors_per_node, model.local_gen_quality))


def threshold_dp(d: int, n: int = 1) -> float:
    """Fidelity below which a depolarized ``nd``-qubit GHZ probe gives no advantage."""
    if d < 2 or n < 1:
        raise ValidationError("threshold_dp needs d >= 2 and n >= 1")
    h = 2.0 ** -(n * d)
    a = 1 - 2 * h
    return h + (1 - h) * (a + math.sqrt(a * a + 8 * h * d)) / (2 * d)


def threshold_rank2(d: int) -> float:
    """Advantage threshold of the rank-2 dephased GHZ state."""
    if d < 2:
        raise ValidationError("threshold_rank2 needs d >= 2")
    return (1 + math.sqrt(d)) / (2 * math.sqrt(d))


def threshold_azimuthal(d: int, n: int = 1) -> float:
    """Advantage threshold when read out with the optimized azimuthal measurement."""
    if d < 2 or n < 1:
        raise ValidationError("threshold_azimuthal needs d >= 2 and n >= 1")
    h = 2.0 ** -(n * d)
    return (1 + (math.sqrt(d) - 1) * h) / math.sqrt(d)


def qfi_lower_bound(fidelity: float, d: int) -> float:
    """Smallest QFI of any d-qubit GHZ-diagonal state with the given fidelity."""
    if not 0 < fidelity <= 1:
        raise ValidationError(f"fidelity must lie in (0, 1], got {fidelity}")
    return d * (2 * fidelity - 1) ** 2


class NMaxEstimate(NamedTuple):
    n_max: float
    sensitivity_f: float
    sensitivity_k: float

    @property
    def ratio(self) -> float:
        return self.sensitivity_k / self.sensitivity_f


def n_max_estimate(d: int, fidelity: float, k: float) -> NMaxEstimate:
    """Approximate largest sensors-per-node count that keeps an advantage."""
    if d * fidelity <= 1:
        raise NoAdvantageError(f"d*F = {d * fidelity} <= 1: no advantage at any n")
    if not 0 < k < 1:
        raise ValidationError("k must lie in (0, 1)")
    ln_k = math.log(k)
    ln_df = math.log(d * fidelity)
    return NMaxEstimate(-ln_df / ln_k, -1 / (fidelity * ln_k), ln_df / (k * ln_k**2))


def n_max_exact(d: int, fidelity: float, k: float, n_limit: int = 10_000) -> int:
    """Largest integer n with ``eta_depolarized >= 1``; 0 if there is none up to n_limit."""
    best = 0
    for n in range(1, n_limit + 1):
        if d * (1 - c_dp(fidelity, d, n, k)) >= 1:
            best = n
        elif best:
            # eta is unimodal in n, so the first drop after an advantage is final
            break
    return best


def c_local(d: int, n: int, k: float) -> float:
    """C of each node's n-qubit local GHZ probe with fidelity ``k**((n-1)/d)``."""
    kt = k ** (1 / d)
    kn = k ** (n / d)
    h = 2.0**-n
    num = (1 - k ** ((n - 1) / d)) * ((h - 2 * h * h) * kt + kn)
    den = (1 - h) * (h * kt + (1 - 2 * h) * kn)
    return num / den


def eta_local_imperfect(d: int, n: int, k: float) -> float:
    if d < 2 or n < 1 or not 0 < k <= 1:
        raise ValidationError("eta_local_imperfect needs d >= 2, n >= 1, k in (0, 1]")
    return 1 - c_local(d, n, k)


def global_local_ratio(model: DepolarizedGhzModel) -> float:
    """Advantage of the global probe over equally imperfect local probes."""
    local = eta_local_imperfect(model.num_nodes, model.sensors_per_node, model.local_gen_quality)
    return eta_depolarized(model) / local


def azimuthal_contrast(fidelity: float, m: int) -> float:
    """Visibility of ``<M(alpha)>`` for an m-qubit depolarized GHZ state."""
    h = 2.0**-m
    return fidelity - (1 - fidelity) * h / (1 - h)


def variance_from_contrast(contrast: float, d: int, n: int, alpha: float, theta1: float) -> float:
    """Per-shot error-propagation variance of ``theta_1`` for readout ``M(alpha)``."""
    phase = n * math.sqrt(d) * (theta1 + math.sqrt(d) * alpha)
    s2 = math.sin(phase) ** 2
    if s2 == 0.0 or contrast == 0.0:
        return DIVERGENT
    a2 = contrast * contrast
    return (1 - a2 * math.cos(phase) ** 2) / (d * n * n * a2 * s2)


def azimuthal_variance(fidelity: float, d: int, n: int, alpha: float, theta1: float) -> float:
    """Variance of estimating theta_1 from the product observable ``O(alpha)^(x nd)``.

    Returns :data:`DIVERGENT` when the slope of ``<M>`` vanishes, which is
    the case for ``alpha = theta1 = 0`` and any noisy probe.
    """
    if not 0 < fidelity <= 1:
        raise ValidationError(f"fidelity must lie in (0, 1], got {fidelity}")
    return variance_from_contrast(azimuthal_contrast(fidelity, n * d), d, n, alpha, theta1)


class AzimuthalOptimum(NamedTuple):
    alpha_opt: float
    min_variance: Callable[[float], float]
    f_threshold: float


def optimal_azimuthal(n: int, d: int) -> AzimuthalOptimum:
    """Optimal azimuthal angle (l = 0 representative) at ``theta_1 = 0``.

    ``min_variance(F)`` gives ``1 / (d A^2 n^2)`` for a depolarized probe.
    """
    if n < 1 or d < 2:
        raise ValidationError("optimal_azimuthal needs n >= 1 and d >= 2")
    m = n * d

    def min_variance(fidelity: float) -> float:
        return 1.0 / (d * azimuthal_contrast(fidelity, m) ** 2 * n * n)

    return AzimuthalOptimum(math.pi / (2 * m), min_variance, threshold_azimuthal(d, n))


def bell_pair_threshold(d: int, measurement: str = "optimal") -> float:
    """Per-Bell-pair fidelity needed when d-1 pairs are fused into a GHZ probe."""
    if d < 2:
        raise ValidationError("bell_pair_threshold needs d >= 2")
    if measurement == "optimal":
        f = threshold_dp(d)
    elif measurement == "azimuthal":
        f = threshold_azimuthal(d)
    else:
        raise ValidationError(f"unknown measurement {measurement!r}")
    return f ** (1 / (d - 1))


def collective_spin_diagonals(problem: SensingProblem) -> np.ndarray:
    """Diagonal of each ``H_i`` in the computational basis, shape (d, 2^m).

    Qubits are grouped by node: node i owns qubits ``i*n .. i*n + n - 1``;
    qubit 0 is the most significant bit.
    """
    d, n = problem.num_nodes, problem.sensors_per_node
    m = d * n
    idx = np.arange(2**m)
    bits = (idx[None, :] >> (m - 1 - np.arange(m))[:, None]) & 1
    z = 1 - 2 * bits
    return 0.5 * z.reshape(d, n, -1).sum(axis=1)


def qfim_numeric(rho: np.ndarray, problem: SensingProblem) -> np.ndarray:
    """QFIM of ``U(x) rho U(x)^dagger`` from the spectral decomposition of ``rho``.

    ``F_ij = 2 sum_ab (l_a - l_b)^2 / (l_a + l_b) Re(<a|H_i|b><b|H_j|a>)``,
    with eigenvalues below :data:`EIGENVALUE_CUTOFF` set to zero.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = 2**problem.num_qubits
    if rho.shape != (dim, dim):
        raise ValidationError(f"rho has shape {rho.shape}, expected {(dim, dim)}")
    if not np.allclose(rho, rho.conj().T, atol=1e-9):
        raise ValidationError("rho is not Hermitian")
    lam, vecs = np.linalg.eigh(rho)
    if lam.min() < -1e-9:
        raise ValidationError(f"rho has negative eigenvalue {lam.min():.3g}")
    lam = np.where(lam < EIGENVALUE_CUTOFF, 0.0, lam)
    diag_h = collective_spin_diagonals(problem)
    # generators in the eigenbasis: g[i, a, b] = <a|H_i|b>
    g = np.einsum("ka,ik,kb->iab", vecs.conj(), diag_h, vecs)
    total = lam[:, None] + lam[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(total > 0, 2 * (lam[:, None] - lam[None, :]) ** 2 / total, 0.0)
    f = np.einsum("ab,iab,jba->ij", weight, g, g).real
    return (f + f.T) / 2


def orthonormal_extension(d: int) -> np.ndarray:
    """Orthonormal d x d matrix whose first row is ``(1, ..., 1)/sqrt(d)``.

    Gram-Schmidt over ``v1, e_1, e_2, ...``, skipping dependent candidates.
    """
    if d < 2:
        raise ValidationError("orthonormal_extension needs d >= 2")
    rows = [np.full(d, 1 / math.sqrt(d))]
    for candidate in np.eye(d):
        w = candidate - sum(np.dot(candidate, r) * r for r in rows)
        norm = np.linalg.norm(w)
        if norm < 1e-10:
            continue
        rows.append(w / norm)
        if len(rows) == d:
            break
    return np.array(rows)
