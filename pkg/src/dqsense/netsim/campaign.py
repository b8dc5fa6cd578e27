"""Many independent distribution windows and their figures of merit."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import densmat, metrology
from ..errors import ValidationError
from .assembly import assemble
from .engine import chain_layout, run_trial
from .scenario import NetworkScenario

RESULT_COLUMNS = ("scenario", "p", "eta", "eta_tilde", "F", "seed", "trials", "eta_raw")


@dataclass
class SimResult:
    scenario: str
    seed: int
    trials: int
    successes: int
    avg_state: np.ndarray | None
    fidelity: float
    eta: float
    eta_raw: float
    per_trial_fidelity: list[float] = field(default_factory=list)
    logs: list[list[tuple]] | None = None

    @property
    def success_prob(self) -> float:
        return self.successes / self.trials

    p = success_prob

    @property
    def eta_tilde(self) -> float:
        return self.success_prob * self.eta

    @property
    def eta_defined(self) -> bool:
        return self.successes > 0

    def row(self) -> dict[str, str]:
        return {
            "scenario": self.scenario,
            "p": fmt(self.success_prob),
            "eta": fmt(self.eta),
            "eta_tilde": fmt(self.eta_tilde),
            "F": fmt(self.fidelity),
            "seed": str(self.seed),
            "trials": str(self.trials),
            "eta_raw": fmt(self.eta_raw),
        }


def fmt(x: float) -> str:
    """12 significant digits, so that output files are stable byte for byte."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return format(float(x), ".12g")


def _trial_state(scenario: NetworkScenario, rng: np.random.Generator, log: bool):
    outcome = run_trial(scenario, rng, log)
    if not outcome.success:
        return None, outcome.log
    sensors, _ = chain_layout(scenario)
    center_ops = scenario.op_errors_at(sensors[1]) if len(sensors) == 3 else scenario.op_errors
    end_ops = [scenario.op_errors_at(sensors[0]), scenario.op_errors_at(sensors[-1])]
    rho = assemble(outcome.pairs, scenario.assembly_method, center_ops, end_ops)
    return rho, outcome.log


def _run_chunk(args):
    scenario, seqs, first_index, log_count = args
    return [
        _trial_state(scenario, np.random.default_rng(sq), first_index + i < log_count)
        for i, sq in enumerate(seqs)
    ]


def run_campaign(
    scenario: NetworkScenario,
    trials: int,
    seed: int,
    log: bool | int = False,
    workers: int = 1,
) -> SimResult:
    """Run ``trials`` independent windows; trial ``i`` uses the ``i``-th spawned seed.

    ``log`` records event logs for all trials (``True``) or for the first
    ``log`` trials (an integer). Results do not depend on ``workers``:
    trials are reduced in index order.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    log_count = trials if log is True else int(log)
    if log_count < 0:
        log_count = trials
    seqs = np.random.SeedSequence(seed).spawn(trials)
    if workers > 1 and trials > 1:
        size = math.ceil(trials / workers)
        chunks = [(scenario, seqs[i : i + size], i, log_count) for i in range(0, trials, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = [item for chunk in pool.map(_run_chunk, chunks) for item in chunk]
    else:
        outputs = _run_chunk((scenario, seqs, 0, log_count))

    states = [rho for rho, _ in outputs if rho is not None]
    logs = [lg for _, lg in outputs[:log_count]] if log_count else None
    per_trial = [densmat.fidelity_to_ghz(rho) for rho in states]
    d = scenario.num_nodes
    if not states:
        nan = math.nan
        return SimResult(scenario.name, seed, trials, 0, None, nan, nan, nan, [], logs)
    avg = sum(states[1:], states[0].copy()) / len(states)
    problem = metrology.SensingProblem(d)
    twirled = densmat.ghz_twirl(avg)
    eta = metrology.qfi_average(metrology.c_coefficient(twirled), problem)
    v1 = problem.direction
    eta_raw = float(v1 @ metrology.qfim_numeric(avg, problem) @ v1)
    return SimResult(
        scenario.name,
        seed,
        trials,
        len(states),
        avg,
        densmat.fidelity_to_ghz(avg),
        eta,
        eta_raw,
        per_trial,
        logs,
    )


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))


# output ---------------------------------------------------------------------


def results_csv(results: list[SimResult]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow(r.row())
    return buf.getvalue()


def format_event_log(log: list[tuple]) -> str:
    """``time_s<TAB>event<TAB>link<TAB>outcome`` records, one per line."""
    return "".join(f"{fmt(t)}\t{event}\t{link}\t{outcome}\n" for t, event, link, outcome in log)


def write_results(results: list[SimResult], path: str | Path) -> None:
    Path(path).write_text(results_csv(results))


def write_event_logs(result: SimResult, directory: str | Path) -> list[Path]:
    if result.logs is None:
        raise ValidationError("campaign was run without event logging")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, log in enumerate(result.logs):
        path = directory / f"trial_{i:05d}.tsv"
        path.write_text(format_event_log(log))
        paths.append(path)
    return paths
