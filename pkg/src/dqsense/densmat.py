"""Dense density-matrix kernel for at most six qubits.

Matrices are plain complex ``numpy`` arrays of shape ``(2**q, 2**q)``; qubit 0
is the most significant bit. Operations return new arrays.

Error models: a noisy two-qubit gate acts ideally with probability ``p`` and
otherwise replaces the pair by ``I/4`` (keeping the rest of the register); a
noisy measurement reports the correct bit with probability ``eta``. Basis
changes and corrections are single-qubit and treated as perfect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import metrology
from .errors import UnsupportedScaleError, ValidationError

MAX_QUBITS = 6

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


@dataclass(frozen=True)
class NoisySpec:
    """Operation quality at one node: CNOT fidelity ``p`` and measurement fidelity ``eta``."""

    cnot_fidelity: float = 1.0
    measurement_fidelity: float = 1.0

    def __post_init__(self):
        for name in ("cnot_fidelity", "measurement_fidelity"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValidationError(f"{name} must lie in [0, 1], got {v}")


PERFECT = NoisySpec()


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix; used where states cross module boundaries."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", check_density_matrix(self.data))

    @property
    def num_qubits(self) -> int:
        return num_qubits(self.data)


def num_qubits(rho: np.ndarray) -> int:
    dim = rho.shape[0]
    q = dim.bit_length() - 1
    if rho.shape != (dim, dim) or 2**q != dim:
        raise ValidationError(f"not a qubit-register matrix: shape {rho.shape}")
    return q


def check_density_matrix(rho, tol: float = 1e-9) -> np.ndarray:
    """Validate a density matrix; clip eigenvalues in ``[-tol, 0)`` and renormalize.

    Raises :class:`ValidationError` for non-Hermitian input, wrong trace or
    eigenvalues below ``-tol``.
    """
    rho = np.asarray(rho, dtype=complex)
    q = num_qubits(rho)
    if q > MAX_QUBITS:
        raise UnsupportedScaleError(f"{q} qubits exceeds the kernel cap of {MAX_QUBITS}")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise ValidationError(f"trace is {np.trace(rho).real!r}, not 1")
    lam, vecs = np.linalg.eigh(rho)
    if lam.min() < -tol:
        raise ValidationError(f"negative eigenvalue {lam.min():.3g}")
    if lam.min() < 0:
        lam = np.clip(lam, 0, None)
        rho = (vecs * lam) @ vecs.conj().T
        rho /= np.trace(rho).real
    return rho


def _check_qubits(q: int, qubits: Sequence[int]) -> None:
    if len(set(qubits)) != len(qubits) or any(not 0 <= k < q for k in qubits):
        raise ValidationError(f"invalid qubit indices {list(qubits)} for {q} qubits")


def apply_unitary(rho: np.ndarray, u: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """``U rho U^dagger`` with ``U`` acting on ``qubits`` (in the given order)."""
    q = num_qubits(rho)
    qubits = list(qubits)
    _check_qubits(q, qubits)
    k = len(qubits)
    u = np.asarray(u, dtype=complex)
    if u.shape != (2**k, 2**k):
        raise ValidationError(f"operator shape {u.shape} does not match {k} qubits")
    if not np.allclose(u @ u.conj().T, np.eye(2**k), atol=1e-9):
        raise ValidationError("operator is not unitary")
    return _conjugate(rho, u, qubits)


def _conjugate(rho: np.ndarray, op: np.ndarray, qubits: list[int]) -> np.ndarray:
    q = num_qubits(rho)
    k = len(qubits)
    t = rho.reshape([2] * (2 * q))
    opt = op.reshape([2] * (2 * k))
    t = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), qubits))
    t = np.moveaxis(t, list(range(k)), qubits)
    t = np.tensordot(t, opt.conj(), axes=([q + b for b in qubits], list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * q - k, 2 * q)), [q + b for b in qubits])
    return t.reshape(2**q, 2**q)


def partial_trace(rho: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Trace out ``qubits``; remaining qubits keep their relative order."""
    q = num_qubits(rho)
    qubits = sorted(qubits)
    _check_qubits(q, qubits)
    t = rho.reshape([2] * (2 * q))
    for b in reversed(qubits):
        cur = t.ndim // 2
        t = np.trace(t, axis1=b, axis2=b + cur)
    keep = q - len(qubits)
    return t.reshape(2**keep, 2**keep)


def _embed_maximally_mixed(reduced: np.ndarray, qubits: list[int], q: int) -> np.ndarray:
    """Inverse of partial trace for ``I/2^k`` on ``qubits``."""
    k = len(qubits)
    others = [b for b in range(q) if b not in qubits]
    full = np.kron(reduced, np.eye(2**k) / 2**k).reshape([2] * (2 * q))
    order = others + qubits
    # axis j of ``full`` currently holds qubit order[j]
    perm = [order.index(b) for b in range(q)]
    full = np.transpose(full, perm + [q + j for j in perm])
    return full.reshape(2**q, 2**q)


def depolarize(rho: np.ndarray, qubits: Sequence[int], p: float) -> np.ndarray:
    """``p rho + (1 - p) I/2^k (x) tr_qubits(rho)``."""
    if p >= 1:
        return rho
    q = num_qubits(rho)
    qubits = list(qubits)
    mixed = _embed_maximally_mixed(partial_trace(rho, qubits), qubits, q)
    return p * rho + (1 - p) * mixed


def noisy_cnot(rho: np.ndarray, control: int, target: int, p: float) -> np.ndarray:
    ideal = _conjugate(rho, CNOT, [control, target])
    if p >= 1:
        return ideal
    q = num_qubits(rho)
    mixed = _embed_maximally_mixed(partial_trace(rho, [control, target]), [control, target], q)
    return p * ideal + (1 - p) * mixed


def _to_z_basis(rho: np.ndarray, qubit: int, basis: str) -> np.ndarray:
    if basis == "z":
        return rho
    if basis == "x":
        return _conjugate(rho, H, [qubit])
    raise ValidationError(f"unknown measurement basis {basis!r}")


def _slice(rho: np.ndarray, qubit: int, bit: int) -> np.ndarray:
    """``<bit| rho |bit>`` on ``qubit`` (unnormalized, qubit removed)."""
    q = num_qubits(rho)
    t = rho.reshape([2] * (2 * q))
    idx = [slice(None)] * (2 * q)
    idx[qubit] = bit
    idx[q + qubit] = bit
    return t[tuple(idx)].reshape(2 ** (q - 1), 2 ** (q - 1))


def measure_branches(
    rho: np.ndarray, qubit: int, eta: float = 1.0, basis: str = "z", keep: bool = False
) -> list[tuple[int, float, np.ndarray]]:
    """All reported outcomes of a noisy measurement as ``(outcome, prob, unnormalized state)``.

    The returned states carry weight ``prob`` (their trace). With ``keep`` the
    measured qubit stays in the register, collapsed onto the true outcome in
    the measured basis.
    """
    q = num_qubits(rho)
    _check_qubits(q, [qubit])
    r = _to_z_basis(rho, qubit, basis)
    parts = [_slice(r, qubit, b) for b in (0, 1)]
    branches = []
    for outcome in (0, 1):
        right, wrong = parts[outcome], parts[1 - outcome]
        if keep:
            right = _insert_bit(right, qubit, outcome)
            wrong = _insert_bit(wrong, qubit, 1 - outcome)
            if basis == "x":
                right = _conjugate(right, H, [qubit])
                wrong = _conjugate(wrong, H, [qubit])
        state = eta * right + (1 - eta) * wrong
        branches.append((outcome, float(np.trace(state).real), state))
    return branches


def _insert_bit(reduced: np.ndarray, qubit: int, bit: int) -> np.ndarray:
    proj = np.zeros((2, 2), dtype=complex)
    proj[bit, bit] = 1
    q = num_qubits(reduced) + 1
    full = np.kron(reduced, proj).reshape([2] * (2 * q))
    order = [b for b in range(q) if b != qubit] + [qubit]
    perm = [order.index(b) for b in range(q)]
    full = np.transpose(full, perm + [q + j for j in perm])
    return full.reshape(2**q, 2**q)


def noisy_measure(
    rho: np.ndarray,
    qubit: int,
    basis: str = "z",
    eta: float = 1.0,
    rng: np.random.Generator | None = None,
    keep: bool = True,
) -> tuple[int, np.ndarray, float]:
    """Sample one outcome; returns ``(outcome, normalized post-state, probability)``."""
    rng = rng if rng is not None else np.random.default_rng()
    branches = measure_branches(rho, qubit, eta, basis, keep=keep)
    p0 = branches[0][1]
    outcome = 0 if rng.random() < p0 else 1
    _, prob, state = branches[outcome]
    return outcome, state / prob, prob


def expectation(rho: np.ndarray, observable: np.ndarray) -> float:
    return float(np.trace(rho @ observable).real)


def ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def pure(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    vec = vec / np.linalg.norm(vec)
    return np.outer(vec, vec.conj())


def tensor(*rhos: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for r in rhos:
        out = np.kron(out, r)
    return out


def ghz_vector(m: int, index: int = 0) -> np.ndarray:
    """GHZ basis vector ``index = 2b + s`` on ``m`` qubits."""
    b, s = index >> 1, index & 1
    if not 0 <= b < 2 ** (m - 1):
        raise ValidationError(f"GHZ index {index} out of range for {m} qubits")
    v = np.zeros(2**m, dtype=complex)
    v[b] = 1 / math.sqrt(2)
    v[2**m - 1 - b] = (-1) ** s / math.sqrt(2)
    return v


def ghz_density(state: metrology.GhzDiagonalState) -> np.ndarray:
    m = state.num_qubits
    rho = np.zeros((2**m, 2**m), dtype=complex)
    for index, lam in enumerate(state.eigenvalues):
        if lam:
            v = ghz_vector(m, index)
            rho += lam * np.outer(v, v.conj())
    return rho


def ghz_twirl(rho: np.ndarray) -> metrology.GhzDiagonalState:
    """Diagonal of ``rho`` in the GHZ basis."""
    m = num_qubits(rho)
    n = 2**m
    b = np.arange(n // 2)
    bbar = n - 1 - b
    pop = (rho[b, b].real + rho[bbar, bbar].real) / 2
    coh = rho[b, bbar].real
    lam = np.empty(n)
    lam[0::2] = pop + coh
    lam[1::2] = pop - coh
    lam = np.clip(lam, 0, None)
    return metrology.GhzDiagonalState(m, lam / lam.sum())


def fidelity_to_ghz(rho: np.ndarray) -> float:
    n = rho.shape[0]
    return float((rho[0, 0].real + rho[n - 1, n - 1].real) / 2 + rho[0, n - 1].real)


def bell_density(lambdas: Sequence[float]) -> np.ndarray:
    """Two-qubit Bell-diagonal state from weights on (Phi+, Phi-, Psi+, Psi-)."""
    return ghz_density(metrology.GhzDiagonalState(2, np.asarray(lambdas, dtype=float)))


def bell_diagonal(rho: np.ndarray) -> np.ndarray:
    """Weights of a two-qubit state on (Phi+, Phi-, Psi+, Psi-)."""
    if num_qubits(rho) != 2:
        raise ValidationError("bell_diagonal needs a two-qubit state")
    return ghz_twirl(rho).eigenvalues.copy()


def encode_phases(rho: np.ndarray, x: Sequence[float], sensors_per_node: int = 1) -> np.ndarray:
    """Apply ``exp(-i sum_i x_i H_i)`` with node ``i`` owning qubits ``i*n .. i*n+n-1``."""
    x = np.asarray(x, dtype=float)
    q = num_qubits(rho)
    if x.size * sensors_per_node != q:
        raise ValidationError(
            f"layout {x.size} nodes x {sensors_per_node} qubits does not match {q} qubits"
        )
    problem = metrology.SensingProblem(x.size, sensors_per_node)
    phase = x @ metrology.collective_spin_diagonals(problem)
    u = np.exp(-1j * phase)
    return rho * np.outer(u, u.conj())


def azimuthal_observable_expectation(rho: np.ndarray, alpha: float) -> float:
    """``<O(alpha)^(x q)>`` with ``O(alpha) = e^{i alpha}|1><0| + e^{-i alpha}|0><1|``."""
    q = num_qubits(rho)
    idx = np.arange(2**q)
    ones = np.array([bin(i).count("1") for i in idx])
    # <bbar| O^(x q) |b> = exp(i alpha (zeros(b) - ones(b)))
    m_elem = np.exp(1j * alpha * (q - 2 * ones))
    return float(np.sum(m_elem * rho[idx, 2**q - 1 - idx]).real)


def azimuthal_observable(q: int, alpha: float) -> np.ndarray:
    o = np.array([[0, np.exp(-1j * alpha)], [np.exp(1j * alpha), 0]])
    out = np.ones((1, 1), dtype=complex)
    for _ in range(q):
        out = np.kron(out, o)
    return out


def _sum_branches(branches, correct) -> np.ndarray:
    return sum(correct(outcome, state) for outcome, _, state in branches)


def ghz_merge(
    rho: np.ndarray,
    n_first: int,
    noise: NoisySpec = PERFECT,
    branches: str = "average",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Fuse GHZ_N (qubits ``0..N-1``) with GHZ_M (qubits ``N..``) into GHZ_{N+M-1}.

    Noisy CNOT from qubit ``N-1`` onto ``N``, noisy Z measurement of qubit ``N``,
    and on outcome 1 an X flip of ``min(N, M-1)`` qubits (the second block's
    remaining qubits when it is the smaller side, otherwise the first block).
    The measured qubit is removed. ``branches="average"`` returns the
    outcome-averaged channel output; ``"sample"`` draws one outcome.
    """
    q = num_qubits(rho)
    if q > MAX_QUBITS:
        raise UnsupportedScaleError(f"{q} qubits exceeds the kernel cap of {MAX_QUBITS}")
    n, m = n_first, q - n_first
    if n < 1 or m < 1:
        raise ValidationError("both GHZ blocks need at least one qubit")
    rho = noisy_cnot(rho, n - 1, n, noise.cnot_fidelity)
    outcomes = measure_branches(rho, n, noise.measurement_fidelity)
    # indices after removing qubit n
    if m - 1 <= n:
        flips = list(range(n, q - 1))
    else:
        flips = list(range(n))

    def correct(outcome, state):
        if outcome == 0 or not flips:
            return state
        for b in flips:
            state = _conjugate(state, X, [b])
        return state

    return _resolve(outcomes, correct, branches, rng)


def _resolve(outcomes, correct, branches, rng):
    if branches == "average":
        return _sum_branches(outcomes, correct)
    if branches == "sample":
        rng = rng if rng is not None else np.random.default_rng()
        probs = np.array([p for _, p, _ in outcomes])
        pick = rng.choice(len(outcomes), p=probs / probs.sum())
        outcome, prob, state = outcomes[pick]
        return correct(outcome, state) / prob
    raise ValidationError(f"unknown branch mode {branches!r}")


def cnot_teleport(
    rho: np.ndarray,
    control: int,
    bell_local: int,
    bell_remote: int,
    target: int,
    control_noise: NoisySpec = PERFECT,
    target_noise: NoisySpec = PERFECT,
    branches: str = "average",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Teleported CNOT from ``control`` to ``target`` consuming a Bell pair.

    The control node applies CNOT(control -> bell_local) and measures
    ``bell_local`` in Z; the target node applies X on ``bell_remote`` if that
    outcome is 1, then CNOT(bell_remote -> target) and an X-basis measurement
    of ``bell_remote``; outcome 1 triggers Z on ``control``. Both Bell qubits
    are removed from the returned state.
    """
    q = num_qubits(rho)
    if q > MAX_QUBITS:
        raise UnsupportedScaleError(f"{q} qubits exceeds the kernel cap of {MAX_QUBITS}")
    _check_qubits(q, [control, bell_local, bell_remote, target])

    def after_removal(b, removed):
        return b - (1 if b > removed else 0)

    rho = noisy_cnot(rho, control, bell_local, control_noise.cnot_fidelity)
    first = measure_branches(rho, bell_local, control_noise.measurement_fidelity)
    c1, r1, t1 = (after_removal(b, bell_local) for b in (control, bell_remote, target))

    def stage_two(m1, state):
        if m1:
            state = _conjugate(state, X, [r1])
        state = noisy_cnot(state, r1, t1, target_noise.cnot_fidelity)
        second = measure_branches(state, r1, target_noise.measurement_fidelity, basis="x")
        c2 = after_removal(c1, r1)

        def fix(m2, s):
            return _conjugate(s, Z, [c2]) if m2 else s

        return second, fix

    if branches == "average":
        out = 0
        for m1, _, state in first:
            second, fix = stage_two(m1, state)
            out = out + _sum_branches(second, fix)
        return out
    rng = rng if rng is not None else np.random.default_rng()
    m1, p1, state = first[0] if rng.random() < first[0][1] else first[1]
    second, fix = stage_two(m1, state / p1)
    return _resolve(second, fix, "sample", rng)


def swap_oracle(
    left: Sequence[float],
    right: Sequence[float],
    p: float = 1.0,
    eta1: float = 1.0,
    eta2: float = 1.0,
) -> np.ndarray:
    """Brute-force noisy entanglement swap of two Bell-diagonal pairs.

    Register (A, B1, B2, C): noisy CNOT B1 -> B2, H on B1, noisy Z measurements
    of B1 then B2, Pauli correction on C (01: X, 10: Z, 11: Y), averaged over
    all outcomes.
    """
    rho = tensor(bell_density(left), bell_density(right))
    rho = noisy_cnot(rho, 1, 2, p)
    rho = _conjugate(rho, H, [1])
    out = np.zeros((4, 4), dtype=complex)
    corrections = {(0, 0): I2, (0, 1): X, (1, 0): Z, (1, 1): Y}
    for m1, _, s1 in measure_branches(rho, 1, eta1):
        for m2, _, s2 in measure_branches(s1, 1, eta2):
            out += _conjugate(s2, corrections[m1, m2], [1])
    return bell_diagonal(out)


def purify_oracle(
    kept: Sequence[float],
    measured: Sequence[float],
    p_a: float = 1.0,
    p_b: float = 1.0,
    eta_a: float = 1.0,
    eta_b: float = 1.0,
) -> tuple[np.ndarray, float]:
    """Brute-force bilocal-CNOT recurrence purification.

    Register (A1, B1, A2, B2): noisy CNOTs A1 -> A2 and B1 -> B2, noisy Z
    measurements of A2 and B2; success when the reported bits agree.
    Returns the normalized kept-pair weights and the success probability.
    """
    rho = tensor(bell_density(kept), bell_density(measured))
    rho = noisy_cnot(rho, 0, 2, p_a)
    rho = noisy_cnot(rho, 1, 3, p_b)
    success = np.zeros((4, 4), dtype=complex)
    for ma, _, s1 in measure_branches(rho, 2, eta_a):
        for mb, _, s2 in measure_branches(s1, 2, eta_b):
            if ma == mb:
                success += s2
    p_s = float(np.trace(success).real)
    return bell_diagonal(success / p_s), p_s


def pauli_channel_oracle(lambdas: Sequence[float], probs_a, probs_b) -> np.ndarray:
    """Independent single-qubit Pauli channels on both halves of a Bell-diagonal pair.

    ``probs_*`` are ``(p_I, p_X, p_Y, p_Z)``.
    """
    rho = bell_density(lambdas)
    for qubit, probs in ((0, probs_a), (1, probs_b)):
        rho = sum(
            pr * _conjugate(rho, PAULIS[name], [qubit])
            for pr, name in zip(probs, "IXYZ")
        )
    return bell_diagonal(rho)


def resource_estimate(method: str, n: int) -> dict[str, float]:
    """Resources to assemble an N-qubit GHZ state from N-1 Bell pairs."""
    if n < 2:
        raise ValidationError("resource_estimate needs N >= 2")
    if method == "teleportation":
        return {
            "qubits": 3 * n - 2,
            "single_qubit_measurements": 2 * n - 2,
            "two_qubit_gates": 2 * n - 2,
            "avg_single_qubit_gates": n - 1,
        }
    if method == "merging":
        return {
            "qubits": 2 * n - 2,
            "single_qubit_measurements": n - 1,
            "two_qubit_gates": n - 1,
            "avg_single_qubit_gates": (n - 1) / 2,
        }
    raise ValidationError(f"unknown assembly method {method!r}")
