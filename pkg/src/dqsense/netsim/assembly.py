"""Fusing the distributed Bell pairs into a GHZ probe with the density-matrix kernel."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import densmat
from ..bell_algebra import OperationErrorModel
from ..errors import ValidationError

_PLUS = densmat.pure(np.array([1, 1], dtype=complex) / np.sqrt(2))
_ZERO = densmat.pure(np.array([1, 0], dtype=complex))


def _noise(ops: OperationErrorModel) -> densmat.NoisySpec:
    return densmat.NoisySpec(ops.gate_fidelity, ops.measurement_fidelity)


def assemble(
    pairs: Sequence[Sequence[float]],
    method: str = "merging",
    center_ops: OperationErrorModel = OperationErrorModel(),
    end_ops: Sequence[OperationErrorModel] | None = None,
    branches: str = "average",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """GHZ state on the sensor nodes from one Bell-diagonal pair per arm.

    ``pairs[i]`` joins the center (first qubit of the pair) to end node ``i``
    for a 3-node star. With a single pair the 2-node probe is the pair itself
    and no operation is applied. Qubits of the result are ordered
    ``(end0, center, end1)`` for merging and ``(center, end0, end1)`` for
    teleportation; the GHZ figures of merit are symmetric in that order.
    """
    if len(pairs) == 1:
        return densmat.bell_density(pairs[0])
    if len(pairs) != 2:
        raise ValidationError("assembly supports one or two pairs (2 or 3 sensor nodes)")
    end_ops = list(end_ops) if end_ops is not None else [center_ops, center_ops]
    # Bell states are symmetric under exchanging the two qubits, so each pair
    # can be placed in either orientation.
    arm0 = densmat.bell_density(pairs[0])
    arm1 = densmat.bell_density(pairs[1])
    if method == "merging":
        rho = densmat.tensor(arm0, arm1)  # [end0, cA, cB, end1]
        # merging CNOT and measurement act at the center; the correction is a
        # single-qubit flip whose node does not matter for the noise model
        return densmat.ghz_merge(rho, 2, _noise(center_ops), branches, rng)
    if method == "teleportation":
        # [s_c, cA, e0, s0]: teleported CNOT from the center sensor onto end0's sensor
        rho = densmat.tensor(_PLUS, arm0, _ZERO)
        rho = densmat.cnot_teleport(
            rho, 0, 1, 2, 3, _noise(center_ops), _noise(end_ops[0]), branches, rng
        )
        # [s_c, s0, cB, e1, s1]
        rho = densmat.tensor(rho, arm1, _ZERO)
        return densmat.cnot_teleport(
            rho, 0, 2, 3, 4, _noise(center_ops), _noise(end_ops[1]), branches, rng
        )
    raise ValidationError(f"unknown assembly method {method!r}")
