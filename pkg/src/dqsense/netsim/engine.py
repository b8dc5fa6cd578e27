"""Single-trial discrete-event engine for entanglement distribution on a chain.

Node indices run along the chain ``0 .. num_chain_nodes-1``. A pair between
nodes ``x < y`` holds one memory in the right-facing pool of ``x`` and one
in the left-facing pool of ``y``. Every pair idles on both qubits for the
same wall-clock time, so a single update time per pair is enough.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .. import bell_algebra as ba
from .scenario import NetworkScenario

# Same-time ordering of queued events: lower fires first. Purification and
# swap checks run the moment a pair appears or unlocks, ahead of anything
# still queued for that instant, which realizes their top priorities.
PRIORITY = {
    "purify": 0,
    "swap": 1,
    "generation": 2,
    "cutoff": 3,
    "unlock": 4,
    "window_end": 9,
}

LEFT, RIGHT = 0, 1


class GenerationOutcome(NamedTuple):
    success: bool
    emission_time: float
    herald_time: float
    next_attempt_time: float
    lambdas: ba.Lambdas | None


def raw_pair_at_herald(scenario: NetworkScenario, mem: ba.MemoryErrorModel) -> ba.Lambdas:
    """Installed state: raw pair idled on both qubits from emission to heralding."""
    dt = scenario.link_latency
    return ba.decohere_lambdas(scenario.raw_bell.state().lambdas, dt, dt, mem, mem)


def attempt_generation(
    scenario: NetworkScenario, rng: np.random.Generator, time: float
) -> GenerationOutcome:
    """One heralded generation attempt on an elementary link starting at ``time``."""
    mem = scenario.memory.error_model()
    herald = time + scenario.link_latency
    nxt = time + scenario.attempt_interval
    if rng.random() < scenario.generation_probability:
        return GenerationOutcome(True, time, herald, nxt, raw_pair_at_herald(scenario, mem))
    return GenerationOutcome(False, time, herald, nxt, None)


def attempts_until_success(p: float, rng: np.random.Generator) -> float:
    """Number of Bernoulli(p) attempts up to and including the first success."""
    if p <= 0:
        return math.inf
    if p >= 1:
        return 1
    return int(rng.geometric(p))


@dataclass(slots=True)
class Pair:
    ident: int
    x: int
    y: int
    lambdas: ba.Lambdas
    updated: float
    deadline: float
    locked: bool = False
    pending_ok: bool = True


@dataclass
class TrialOutcome:
    success: bool
    pairs: list[ba.Lambdas] = field(default_factory=list)
    log: list[tuple[float, str, str, str]] | None = None


def chain_layout(scenario: NetworkScenario) -> tuple[list[int], list[int]]:
    """Sensor node indices along the chain and memories per node."""
    arm = scenario.repeaters_per_arm + 1
    if scenario.num_nodes == 2:
        sensors = [0, arm]
    else:
        sensors = [0, arm, 2 * arm]
    n_chain = sensors[-1] + 1
    memories = []
    for node in range(n_chain):
        if node in (0, n_chain - 1):
            memories.append(scenario.memories_per_end_node)
        elif node in sensors:
            memories.append(scenario.memories_center)
        else:
            memories.append(scenario.memories_repeater)
    return sensors, memories


class TrialEngine:
    """Runs one distribution window and returns the pairs handed to assembly."""

    def __init__(self, scenario: NetworkScenario, rng: np.random.Generator, log: bool = False):
        self.s = scenario
        self.rng = rng
        self.mem = scenario.memory.error_model()
        self.sensors, memories = chain_layout(scenario)
        self.n_chain = len(memories)
        # free[node][side]; end nodes use their whole pool on their single side
        self.free = []
        for node, count in enumerate(memories):
            if node == 0:
                self.free.append([0, count])
            elif node == self.n_chain - 1:
                self.free.append([count, 0])
            else:
                self.free.append([count // 2, count - count // 2])
        self.required = list(zip(self.sensors[:-1], self.sensors[1:]))
        self.repeaters = [n for n in range(1, self.n_chain - 1) if n not in self.sensors]
        self.pairs: dict[int, Pair] = {}
        self.by_link: dict[tuple[int, int], dict[int, Pair]] = {}
        self._ids = itertools.count()
        self._seq = itertools.count()
        self.queue: list = []
        self.now = 0.0
        self.log = [] if log else None
        self.p_gen = scenario.generation_probability
        self.raw = raw_pair_at_herald(scenario, self.mem)
        self.tcc = scenario.comm_time
        self.window = scenario.distribution_window
        self.cutoff = scenario.cutoff_time
        self.ops = [scenario.op_errors_at(node) for node in range(self.n_chain)]

    # bookkeeping -------------------------------------------------------
    def _push(self, time: float, kind: str, payload) -> None:
        heapq.heappush(self.queue, (time, PRIORITY[kind], next(self._seq), kind, payload))

    def _record(self, event: str, x: int, y: int, outcome: str) -> None:
        if self.log is not None:
            self.log.append((self.now, event, f"{x}-{y}", outcome))

    def _refresh(self, pair: Pair) -> None:
        dt = self.now - pair.updated
        if dt > 0:
            pair.lambdas = ba.decohere_pair_lambdas(pair.lambdas, dt, self.mem)
            pair.updated = self.now

    def _add(self, pair: Pair) -> None:
        self.pairs[pair.ident] = pair
        self.by_link.setdefault((pair.x, pair.y), {})[pair.ident] = pair

    def _remove(self, pair: Pair) -> None:
        del self.pairs[pair.ident]
        del self.by_link[pair.x, pair.y][pair.ident]

    def _release(self, x: int, y: int) -> None:
        self.free[x][RIGHT] += 1
        self.free[y][LEFT] += 1
        # the freed memories face elementary links (x, x+1) and (y-1, y)
        self._start_generation(x)
        if y - 1 != x:
            self._start_generation(y - 1)

    def _discard(self, pair: Pair, reason: str) -> None:
        self._remove(pair)
        self._record(reason, pair.x, pair.y, "discard")
        self._release(pair.x, pair.y)

    def _pairs_between(self, x: int, y: int, unlocked: bool = True) -> list[Pair]:
        pool = self.by_link.get((x, y), {}).values()
        return [p for p in pool if not (unlocked and p.locked)]

    # generation ----------------------------------------------------------
    def _start_generation(self, x: int) -> None:
        """Launch attempt sequences on elementary link (x, x+1) for each free memory couple."""
        y = x + 1
        while self.free[x][RIGHT] > 0 and self.free[y][LEFT] > 0:
            self.free[x][RIGHT] -= 1
            self.free[y][LEFT] -= 1
            g = attempts_until_success(self.p_gen, self.rng)
            if math.isinf(g):
                continue  # memories stay reserved, nothing can ever herald
            emission = self.now + (g - 1) * self.s.attempt_interval
            herald = emission + self.s.link_latency
            if herald <= self.window:
                self._push(herald, "generation", (x, emission))

    def _on_generation(self, payload) -> None:
        x, emission = payload
        pair = Pair(next(self._ids), x, x + 1, self.raw, self.now, emission + self.cutoff)
        self._add(pair)
        self._record("generation", x, x + 1, "success")
        self._schedule_cutoff(pair)
        self._after_change(x, x + 1)

    def _schedule_cutoff(self, pair: Pair) -> None:
        if pair.deadline <= self.window:
            self._push(pair.deadline, "cutoff", pair.ident)

    def _after_change(self, x: int, y: int) -> None:
        self._on_purify((x, y))
        for node in (x, y):
            if node in self.repeaters:
                self._on_swap(node)

    # purification ---------------------------------------------------------
    def _purify_step(self, kept: Pair, measured: Pair) -> tuple[ba.Lambdas, bool]:
        """Bilocal-CNOT round; the surviving pair is then DEJMPS-rotated.

        The rotation moves the dominant phase-flip error of the output into
        Psi-, where the next round detects it and where it does not become
        the GHZ partner component after assembly.
        """
        ea, eb = self.ops[kept.x], self.ops[kept.y]
        lam, p_s = ba.purify_lambdas(
            kept.lambdas,
            measured.lambdas,
            ea.gate_fidelity,
            eb.gate_fidelity,
            ea.measurement_fidelity,
            eb.measurement_fidelity,
        )
        return ba.dejmps_rotate_lambdas(lam), bool(self.rng.random() < p_s)

    def _on_purify(self, link) -> None:
        x, y = link
        candidates = self._pairs_between(x, y)
        for p in candidates:
            self._refresh(p)
        candidates.sort(key=lambda p: (-p.lambdas[0], p.ident))
        # the two best unlocked pairs, repeatedly, while the link has a spare
        while len(candidates) >= 2:
            kept, measured = candidates[0], candidates[1]
            candidates = candidates[2:]
            lam, ok = self._purify_step(kept, measured)
            self._remove(measured)
            kept.lambdas = lam
            kept.locked = True
            kept.pending_ok = ok
            self._record("purify", x, y, "pending")
            self._push(self.now + self.tcc, "unlock", (kept.ident, ok, "purify"))
            self._release(x, y)

    def _on_unlock(self, payload) -> None:
        ident, ok, what = payload
        pair = self.pairs.get(ident)
        if pair is None:
            return  # reset by cutoff while waiting
        if not ok:
            self._discard(pair, f"{what}_result")
            return
        pair.locked = False
        self._record(f"{what}_result", pair.x, pair.y, "success")
        self._after_change(pair.x, pair.y)

    # swapping -------------------------------------------------------------
    def _on_swap(self, node: int) -> None:
        left = [p for p in self.pairs.values() if p.y == node and not p.locked]
        right = [p for p in self.pairs.values() if p.x == node and not p.locked]
        if not left or not right:
            return
        for p in left + right:
            self._refresh(p)
        a = max(left, key=lambda p: (p.lambdas[0], -p.ident))
        b = max(right, key=lambda p: (p.lambdas[0], -p.ident))
        ops = self.ops[node]
        lam = ba.swap_lambdas(
            a.lambdas, b.lambdas, ops.gate_fidelity, ops.measurement_fidelity, ops.measurement_fidelity
        )
        self._remove(a)
        self._remove(b)
        # the repeater's two memories are free again
        self.free[node][LEFT] += 1
        self.free[node][RIGHT] += 1
        self._start_generation(node - 1)
        self._start_generation(node)
        if self.rng.random() >= self.s.swap_success:
            self._record("swap", a.x, b.y, "failure")
            self._release(a.x, b.y)
            return
        pair = Pair(next(self._ids), a.x, b.y, lam, self.now, min(a.deadline, b.deadline), True)
        self._add(pair)
        self._schedule_cutoff(pair)
        self._record("swap", a.x, b.y, "pending")
        self._push(self.now + self.tcc, "unlock", (pair.ident, True, "swap"))
        self._on_swap(node)

    # cutoff ---------------------------------------------------------------
    def _on_cutoff(self, ident: int) -> None:
        pair = self.pairs.get(ident)
        if pair is not None and pair.deadline <= self.now:
            self._discard(pair, "cutoff")

    # window end -----------------------------------------------------------
    def _final_purification(self, x: int, y: int) -> Pair | None:
        # Outcomes still in flight are already determined: keep the pairs whose
        # pending result is a success and drop the others (post-selection on
        # the heralds that arrive during assembly).
        pool = [p for p in self._pairs_between(x, y, unlocked=False) if p.pending_ok]
        for p in pool:
            self._refresh(p)
        while len(pool) >= 2:
            pool.sort(key=lambda p: (p.lambdas[0], p.ident))
            low, high = pool[0], pool[1]
            lam, ok = self._purify_step(high, low)
            pool = pool[2:]
            if ok:
                high.lambdas = lam
                pool.append(high)
            self._record("final_purify", x, y, "success" if ok else "failure")
        return pool[0] if pool else None

    def run(self) -> TrialOutcome:
        for x in range(self.n_chain - 1):
            self._start_generation(x)
        self._push(self.window, "window_end", None)
        handlers = {
            "generation": self._on_generation,
            "purify": self._on_purify,
            "swap": self._on_swap,
            "cutoff": self._on_cutoff,
            "unlock": self._on_unlock,
        }
        while self.queue:
            time, _, _, kind, payload = heapq.heappop(self.queue)
            self.now = time
            if kind == "window_end":
                break
            handlers[kind](payload)
        self.now = self.window
        chosen = []
        for x, y in self.required:
            pair = self._final_purification(x, y)
            if pair is None:
                self._record("window_end", x, y, "missing")
                return TrialOutcome(False, [], self.log)
            chosen.append(pair.lambdas)
        self._record("window_end", self.required[0][0], self.required[-1][1], "success")
        return TrialOutcome(True, chosen, self.log)


def run_trial(
    scenario: NetworkScenario, rng: np.random.Generator, log: bool = False
) -> TrialOutcome:
    return TrialEngine(scenario, rng, log).run()
