"""Combining estimators of the average phase when distribution sometimes fails.

A *configuration* is the set of sensor nodes left without entanglement in a
sensing round. Isolated nodes estimate their own phase locally and the
remaining nodes share a GHZ probe. Rounds with different configurations give
independent estimators that are merged with inverse-variance weights.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Configuration:
    """Isolated node set plus how many rounds were observed with it.

    A single entangled node is no better than an isolated one, so a set of
    size ``d - 1`` is stored as all nodes isolated.
    """

    isolated_nodes: frozenset[int]
    num_nodes: int
    sample_count: int = 0

    def __init__(self, isolated_nodes: Iterable[int], num_nodes: int, sample_count: int = 0):
        nodes = frozenset(int(i) for i in isolated_nodes)
        if num_nodes < 2:
            raise ValidationError("need at least 2 sensor nodes")
        if any(not 0 <= i < num_nodes for i in nodes):
            raise ValidationError(f"node index out of range for d={num_nodes}: {sorted(nodes)}")
        if sample_count < 0:
            raise ValidationError("sample_count must be nonnegative")
        if len(nodes) == num_nodes - 1:
            nodes = frozenset(range(num_nodes))
        object.__setattr__(self, "isolated_nodes", nodes)
        object.__setattr__(self, "num_nodes", num_nodes)
        object.__setattr__(self, "sample_count", sample_count)

    @property
    def size(self) -> int:
        return len(self.isolated_nodes)

    @property
    def entangled_nodes(self) -> frozenset[int]:
        return frozenset(range(self.num_nodes)) - self.isolated_nodes


@dataclass(frozen=True)
class EstimatorVariance:
    variance: float
    configuration: Configuration | None = None

    def __post_init__(self):
        if not (self.variance > 0 and np.isfinite(self.variance)):
            raise ValidationError(f"estimator variance must be positive and finite, got {self.variance}")


def all_configurations(d: int) -> list[Configuration]:
    """Every distinct configuration for ``d`` nodes (there are ``2**d - d``)."""
    out = []
    seen = set()
    for size in range(d + 1):
        for subset in itertools.combinations(range(d), size):
            c = Configuration(subset, d)
            if c.isolated_nodes not in seen:
                seen.add(c.isolated_nodes)
                out.append(c)
    return out


def hybrid_variance(
    config: Configuration,
    local_vars: Mapping[int, float] | Sequence[float],
    entangled_var: float,
    d: int | None = None,
) -> float:
    """Variance of the estimator of ``theta_1 = sum_i x_i / sqrt(d)`` for one configuration.

    Isolated nodes enter through ``x_i / sqrt(d)`` and the entangled block
    through ``sqrt(|N minus C| / d)`` times its own normalized average
    ``theta'_1``, so with independent estimators::

        (1/d) sum_{i in C} Var(x_i) + (|N minus C| / d) Var(theta'_1)

    ``local_vars`` may be a full per-node sequence or a mapping over the
    isolated nodes.
    """
    d = config.num_nodes if d is None else d
    if d != config.num_nodes:
        raise ValidationError("d does not match the configuration")
    total = 0.0
    for i in config.isolated_nodes:
        try:
            v = local_vars[i]
        except (KeyError, IndexError) as exc:
            raise ValidationError(f"missing local variance for node {i}") from exc
        if not v > 0:
            raise ValidationError("local variances must be positive")
        total += v
    n_ent = len(config.entangled_nodes)
    if n_ent and not entangled_var > 0:
        raise ValidationError("entangled variance must be positive")
    return total / d + (n_ent / d) * entangled_var if n_ent else total / d


def combine_inverse_variance(
    entries: Sequence[EstimatorVariance | float],
) -> tuple[np.ndarray, float]:
    """Inverse-variance weights and the variance of the weighted estimator."""
    if len(entries) == 0:
        raise ValidationError("nothing to combine")
    variances = np.array(
        [e.variance if isinstance(e, EstimatorVariance) else float(e) for e in entries]
    )
    if np.any(~(variances > 0)):
        raise ValidationError("variances must be positive")
    inv = 1.0 / variances
    total = inv.sum()
    return inv / total, float(1.0 / total)


def coarse_grain(
    coefficients: Mapping[int, float],
    counts: Mapping[int, int],
    d: int | None = None,
) -> float:
    """Combined variance with configurations grouped by size ``m = |C|``.

    Group ``m`` holds ``N_m`` rounds sharing the variance coefficient ``F_m``
    (the single-round variance), giving ``[sum_m N_m / F_m]^{-1}``.
    """
    if d is not None:
        bad = [m for m in counts if m == d - 1 or not 0 <= m <= d]
        if bad:
            raise ValidationError(f"group sizes {bad} are not valid configuration sizes for d={d}")
    info = 0.0
    for m, n in counts.items():
        if n < 0:
            raise ValidationError("counts must be nonnegative")
        if n == 0:
            continue
        f = coefficients.get(m)
        if f is None or not f > 0:
            raise ValidationError(f"group {m} needs a positive variance coefficient")
        info += n / f
    if info == 0:
        raise ValidationError("all counts are zero")
    return 1.0 / info


def simulate_hybrid_estimator(
    config: Configuration,
    phases: Sequence[float],
    n: int,
    shots: int,
    eta: float,
    rng: np.random.Generator,
    repeats: int = 2000,
) -> float:
    """Empirical variance of the hybrid estimator of ``theta_1``.

    Every node or block is read out with ``shots`` two-outcome measurements
    whose probability is ``(1 + A sin(phase))/2``, inverted by arcsine:

    * an isolated node uses ``n`` local qubits in a GHZ state (``A = 1``,
      ``phase = n x_i``), so ``Var(x_i) = 1/(n^2 shots)``;
    * the entangled block of ``e`` nodes has ``phase = n sqrt(e) theta'_1``
      and contrast ``A = sqrt(eta / e)``, giving ``Var(theta'_1) =
      1/(eta n^2 shots)`` near zero phase.

    Phases should sit near 0, where the arcsine inversion is unbiased.
    """
    d = config.num_nodes
    phases = np.asarray(phases, dtype=float)
    ent = sorted(config.entangled_nodes)
    iso = sorted(config.isolated_nodes)

    def readout(phase: float, scale: float, contrast: float) -> np.ndarray:
        prob = (1 + contrast * np.sin(scale * phase)) / 2
        hits = rng.binomial(shots, prob, size=repeats)
        return np.arcsin(np.clip((2 * hits / shots - 1) / contrast, -1, 1)) / scale

    estimates = np.zeros(repeats)
    for i in iso:
        estimates += readout(phases[i], n, 1.0) / np.sqrt(d)
    if ent:
        e = len(ent)
        if not 0 < eta <= e:
            raise ValidationError(f"eta must lie in (0, {e}] for a {e}-node block")
        theta_block = phases[ent].sum() / np.sqrt(e)
        estimates += np.sqrt(e / d) * readout(theta_block, n * np.sqrt(e), np.sqrt(eta / e))
    return float(estimates.var(ddof=1))
