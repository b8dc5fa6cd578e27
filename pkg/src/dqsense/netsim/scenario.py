"""Network scenario description, presets and YAML scenario files."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from ..bell_algebra import BellDiagonalState, MemoryErrorModel, OperationErrorModel
from ..errors import UnsupportedScaleError, ValidationError

WERNER_PATTERN = (1 / 3, 1 / 3, 1 / 3)
ASSEMBLY_METHODS = ("merging", "teleportation")
# Sensor nodes the dense assembly kernel can hold (3 sensors x at most 2 helper qubits).
MAX_SENSOR_NODES = 3


@dataclass(frozen=True)
class MemorySpec:
    """Quantum-memory hardware shared by all nodes."""

    coherence_time: float = 1.0
    pattern: tuple[float, float, float] = WERNER_PATTERN
    frequency: float = 2000.0
    efficiency: float = 0.5
    cutoff_ratio: float = 0.5
    # 1: efficiency counted once per heralded attempt; 2: once per emitting memory
    efficiency_exponent: int = 1

    def error_model(self) -> MemoryErrorModel:
        return MemoryErrorModel(self.coherence_time, self.pattern)


@dataclass(frozen=True)
class RawBell:
    """Bell-diagonal state installed right after a heralded success."""

    fidelity: float = 0.9
    pattern: tuple[float, float, float] = WERNER_PATTERN

    def state(self) -> BellDiagonalState:
        return BellDiagonalState.from_pattern(self.fidelity, self.pattern)


@dataclass(frozen=True)
class NetworkScenario:
    """A linear chain: end nodes, an optional center sensor node, repeaters in between.

    ``num_nodes`` counts sensor nodes (2 or 3). With 3 the center node is a
    sensor and each arm joins it to one end node. ``repeaters_per_arm``
    inserts non-sensing swap nodes, every elementary link has length
    ``link_length`` and a heralding station at its midpoint.
    """

    name: str = "custom"
    num_nodes: int = 3
    repeaters_per_arm: int = 0
    link_length: float = 10.0  # km
    attenuation: float = 0.2  # dB/km
    signal_speed: float = 2.0e8  # m/s
    classical_overhead: float = 1e-3  # s, added to L/c for outcome exchange
    classical_comm_time: float | None = None  # s, overrides the derived value
    memories_per_end_node: int = 10
    memories_center: int = 20
    memories_repeater: int = 20
    memory: MemorySpec = field(default_factory=MemorySpec)
    raw_bell: RawBell = field(default_factory=RawBell)
    bsm_success: float = 0.5
    swap_success: float = 1.0
    op_errors: OperationErrorModel = field(
        default_factory=lambda: OperationErrorModel(0.99, 0.99)
    )
    node_op_errors: tuple[tuple[int, OperationErrorModel], ...] = ()
    distribution_window: float = 1.0  # s
    assembly_method: str = "merging"

    def __post_init__(self):
        validate(self)

    # derived quantities -------------------------------------------------
    @property
    def transmissivity(self) -> float:
        """Fiber transmission from a node to its heralding station (half a link)."""
        return 10 ** (-self.attenuation * (self.link_length / 2) / 10)

    @property
    def generation_probability(self) -> float:
        m = self.memory
        return m.efficiency**m.efficiency_exponent * self.transmissivity**2 * self.bsm_success

    @property
    def link_latency(self) -> float:
        """Photon to the midpoint plus heralding signal back, in seconds."""
        return self.link_length * 1e3 / self.signal_speed

    @property
    def attempt_interval(self) -> float:
        return max(1 / self.memory.frequency, self.link_latency)

    @property
    def comm_time(self) -> float:
        if self.classical_comm_time is not None:
            return self.classical_comm_time
        return self.link_latency + self.classical_overhead

    @property
    def cutoff_time(self) -> float:
        return self.memory.cutoff_ratio * self.memory.coherence_time

    def op_errors_at(self, node: int) -> OperationErrorModel:
        for index, model in self.node_op_errors:
            if index == node:
                return model
        return self.op_errors


def _probability(name: str, value: float) -> None:
    if not 0 <= value <= 1:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValidationError(f"{name} must be positive, got {value}")


def validate(s: NetworkScenario) -> None:
    if s.num_nodes < 2:
        raise ValidationError("a sensing network needs at least 2 nodes")
    if s.num_nodes > MAX_SENSOR_NODES:
        raise UnsupportedScaleError(
            f"{s.num_nodes} sensor nodes exceed the assembly kernel cap of {MAX_SENSOR_NODES}"
        )
    if s.repeaters_per_arm < 0:
        raise ValidationError("repeaters_per_arm must be nonnegative")
    for name in ("link_length", "signal_speed", "distribution_window"):
        _positive(name, getattr(s, name))
    if s.attenuation < 0 or s.classical_overhead < 0:
        raise ValidationError("attenuation and classical_overhead must be nonnegative")
    if s.classical_comm_time is not None:
        _positive("classical_comm_time", s.classical_comm_time)
    for name in ("memories_per_end_node", "memories_center", "memories_repeater"):
        if getattr(s, name) < 1:
            raise ValidationError(f"{name} must be at least 1")
    if s.num_nodes == 3 and s.memories_center < 2:
        raise ValidationError("the center node serves two arms and needs at least 2 memories")
    if s.repeaters_per_arm and s.memories_repeater < 2:
        raise ValidationError("a repeater serves two links and needs at least 2 memories")
    m = s.memory
    s.memory.error_model()  # validates coherence time and pattern
    _positive("memory frequency", m.frequency)
    _probability("memory efficiency", m.efficiency)
    _positive("cutoff_ratio", m.cutoff_ratio)
    if m.efficiency_exponent not in (1, 2):
        raise ValidationError("efficiency_exponent must be 1 or 2")
    _probability("raw_bell fidelity", s.raw_bell.fidelity)
    s.raw_bell.state()
    _probability("bsm_success", s.bsm_success)
    if s.bsm_success > 0.5:
        raise ValidationError("bsm_success is capped at 1/2 for linear-optics Bell measurements")
    _probability("swap_success", s.swap_success)
    if s.assembly_method not in ASSEMBLY_METHODS:
        raise ValidationError(f"assembly_method must be one of {ASSEMBLY_METHODS}")


# presets ----------------------------------------------------------------

_PRESET_KNOBS = {
    1: (0.01, 0.05, 0.80),
    2: (0.1, 0.1, 0.85),
    3: (1.0, 0.5, 0.90),
}


def preset(index: int) -> NetworkScenario:
    """The three benchmark scenarios: (coherence time, memory efficiency, raw fidelity)."""
    if index not in _PRESET_KNOBS:
        raise ValidationError(f"unknown preset {index}; choose from {sorted(_PRESET_KNOBS)}")
    tau, eff, fid = _PRESET_KNOBS[index]
    return NetworkScenario(
        name=f"scenario-{index}",
        memory=MemorySpec(coherence_time=tau, efficiency=eff),
        raw_bell=RawBell(fidelity=fid),
    )


def ideal(num_nodes: int = 3, method: str = "merging") -> NetworkScenario:
    """Noise-free limit: lossless memories, perfect raw pairs and operations."""
    return NetworkScenario(
        name="ideal",
        num_nodes=num_nodes,
        link_length=1e-6,
        memory=MemorySpec(coherence_time=math.inf, efficiency=1.0),
        raw_bell=RawBell(fidelity=1.0),
        op_errors=OperationErrorModel(1.0, 1.0),
        assembly_method=method,
    )


# YAML scenario files --------------------------------------------------------

# file key -> (field, nested section or None)
_TOP_KEYS = {
    "name": "name",
    "num_nodes": "num_nodes",
    "repeaters_per_arm": "repeaters_per_arm",
    "link_length_km": "link_length",
    "attenuation_db_per_km": "attenuation",
    "signal_speed_m_per_s": "signal_speed",
    "classical_overhead_s": "classical_overhead",
    "classical_comm_time_s": "classical_comm_time",
    "memories_per_end_node": "memories_per_end_node",
    "memories_center": "memories_center",
    "memories_repeater": "memories_repeater",
    "bsm_success": "bsm_success",
    "swap_success": "swap_success",
    "distribution_window_s": "distribution_window",
    "assembly_method": "assembly_method",
}
_MEMORY_KEYS = {
    "coherence_time_s": "coherence_time",
    "pattern": "pattern",
    "frequency_hz": "frequency",
    "efficiency": "efficiency",
    "cutoff_ratio": "cutoff_ratio",
    "efficiency_exponent": "efficiency_exponent",
}
_RAW_KEYS = {"fidelity": "fidelity", "pattern": "pattern"}
_OP_KEYS = {"gate_fidelity": "gate_fidelity", "measurement_fidelity": "measurement_fidelity"}


def _translate(section: dict, keys: dict, where: str) -> dict:
    if not isinstance(section, dict):
        raise ValidationError(f"{where} must be a mapping")
    unknown = set(section) - set(keys)
    if unknown:
        raise ValidationError(f"unknown keys in {where}: {sorted(unknown)}")
    out = {}
    for k, v in section.items():
        if k == "pattern":
            v = tuple(float(x) for x in v)
        elif k == "coherence_time_s" and isinstance(v, str):
            v = float(v)  # allows "inf"
        out[keys[k]] = v
    return out


def scenario_from_dict(data: dict[str, Any], base: NetworkScenario | None = None) -> NetworkScenario:
    """Build a scenario from a parsed file; missing keys fall back to ``base``."""
    if not isinstance(data, dict):
        raise ValidationError("scenario file must contain a mapping at top level")
    base = base or NetworkScenario()
    data = dict(data)
    nested = {name: data.pop(name, None) for name in ("memory", "raw_bell", "op_errors", "node_op_errors")}
    kwargs = _translate(data, _TOP_KEYS, "scenario")
    if nested["memory"] is not None:
        kwargs["memory"] = replace(base.memory, **_translate(nested["memory"], _MEMORY_KEYS, "memory"))
    if nested["raw_bell"] is not None:
        kwargs["raw_bell"] = replace(base.raw_bell, **_translate(nested["raw_bell"], _RAW_KEYS, "raw_bell"))
    if nested["op_errors"] is not None:
        kwargs["op_errors"] = replace(
            base.op_errors, **_translate(nested["op_errors"], _OP_KEYS, "op_errors")
        )
    if nested["node_op_errors"] is not None:
        per_node = []
        for node, section in dict(nested["node_op_errors"]).items():
            per_node.append(
                (int(node), replace(kwargs.get("op_errors", base.op_errors),
                                    **_translate(section, _OP_KEYS, f"node_op_errors.{node}")))
            )
        kwargs["node_op_errors"] = tuple(sorted(per_node, key=lambda x: x[0]))
    try:
        return replace(base, **kwargs)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def scenario_to_dict(s: NetworkScenario) -> dict[str, Any]:
    inverse_top = {v: k for k, v in _TOP_KEYS.items()}
    raw = asdict(s)
    out: dict[str, Any] = {}
    for fname, key in inverse_top.items():
        out[key] = raw[fname]
    out["memory"] = {k: (list(raw["memory"][f]) if f == "pattern" else raw["memory"][f])
                     for k, f in _MEMORY_KEYS.items()}
    if math.isinf(out["memory"]["coherence_time_s"]):
        out["memory"]["coherence_time_s"] = "inf"
    out["raw_bell"] = {"fidelity": s.raw_bell.fidelity, "pattern": list(s.raw_bell.pattern)}
    out["op_errors"] = {k: getattr(s.op_errors, f) for k, f in _OP_KEYS.items()}
    if s.node_op_errors:
        out["node_op_errors"] = {
            node: {k: getattr(m, f) for k, f in _OP_KEYS.items()} for node, m in s.node_op_errors
        }
    return out


def load_scenarios(path: str | Path) -> list[NetworkScenario]:
    """Read one scenario, or a ``scenarios:`` list, from a YAML file.

    A top-level ``preset: k`` key (or per-entry) starts from that preset.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"malformed scenario file {path}: {exc}") from exc
    if isinstance(data, dict) and "scenarios" in data:
        entries = data["scenarios"]
        if not isinstance(entries, list) or not entries:
            raise ValidationError("'scenarios' must be a nonempty list")
    else:
        entries = [data]
    out = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise ValidationError("each scenario must be a mapping")
        entry = dict(entry)
        base = preset(int(entry.pop("preset"))) if "preset" in entry else None
        out.append(scenario_from_dict(entry, base))
    return out


def dump_scenario(s: NetworkScenario, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(s), sort_keys=False))
