"""Discrete-event simulation of GHZ-probe distribution over a repeater chain."""

from .assembly import assemble
from .campaign import (
    RESULT_COLUMNS,
    SimResult,
    format_event_log,
    results_csv,
    run_campaign,
    write_event_logs,
    write_results,
)
from .engine import PRIORITY, TrialEngine, attempt_generation, attempts_until_success, run_trial
from .scenario import (
    MemorySpec,
    NetworkScenario,
    RawBell,
    dump_scenario,
    ideal,
    load_scenarios,
    preset,
    scenario_from_dict,
    scenario_to_dict,
)

__all__ = [
    "MemorySpec",
    "NetworkScenario",
    "PRIORITY",
    "RESULT_COLUMNS",
    "RawBell",
    "SimResult",
    "TrialEngine",
    "assemble",
    "attempt_generation",
    "attempts_until_success",
    "dump_scenario",
    "format_event_log",
    "ideal",
    "load_scenarios",
    "preset",
    "results_csv",
    "run_campaign",
    "run_trial",
    "scenario_from_dict",
    "scenario_to_dict",
    "write_event_logs",
    "write_results",
]
