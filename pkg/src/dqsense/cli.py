"""Command-line front end: threshold tables, advantage curves and network simulations.

Every subcommand writes CSV files into ``--out``. Files are first written
to a staging directory and moved into place only when the whole command
succeeded, so a failing run leaves no partial output behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import metrology
from .errors import NoAdvantageError, UnsupportedScaleError, ValidationError
from .netsim import campaign
from .netsim.scenario import load_scenarios, preset

log = logging.getLogger("dqsense")

THRESHOLD_COLUMNS = (
    "d",
    "n",
    "F_th_dp",
    "F_th_azimuthal",
    "F_th_rank2",
    "F_bell_opt",
    "F_bell_azimuthal",
    "gme_bound",
    "sep_bound",
)
CURVE_COLUMNS = ("F", "k", "d", "n", "eta")
CROSSING_COLUMNS = ("F", "k", "d", "n_crossing", "n_max_estimate")
ANALYZE_FIDELITIES = (0.8, 0.9, 0.99)
ANALYZE_K = (0.9999, 0.999, 0.99)

fmt = campaign.fmt


def _csv(columns: Sequence[str], rows: list[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# table builders (pure) -------------------------------------------------------------


def threshold_rows(d_range: Sequence[int], n_range: Sequence[int]) -> list[tuple]:
    rows = []
    for d in d_range:
        if d < 2:
            raise ValidationError("thresholds need d >= 2")
        bell_opt = metrology.bell_pair_threshold(d, "optimal")
        bell_az = metrology.bell_pair_threshold(d, "azimuthal")
        rank2 = metrology.threshold_rank2(d)
        for n in n_range:
            if n < 1:
                raise ValidationError("n must be at least 1")
            rows.append(
                (
                    d,
                    n,
                    metrology.threshold_dp(d, n),
                    metrology.threshold_azimuthal(d, n),
                    rank2,
                    bell_opt,
                    bell_az,
                    0.5,
                    3 / (2.0 ** (n * d) + 2),
                )
            )
    return rows


def curve_rows(
    fidelities: Sequence[float], ks: Sequence[float], d: int, n_max: int
) -> tuple[list[tuple], list[tuple]]:
    """Advantage factor of depolarized probes against local qubits per node.

    Returns the curve rows and one crossing row per (F, k): the largest ``n``
    that still has ``eta >= 1`` (0 if none does) next to the asymptotic
    estimate (empty if there is no advantage at all).
    """
    curves, crossings = [], []
    for f in fidelities:
        for k in ks:
            for n in range(1, n_max + 1):
                model = metrology.DepolarizedGhzModel(f, d, n, k)
                curves.append((f, k, d, n, metrology.eta_depolarized(model)))
            crossing = metrology.n_max_exact(d, f, k, n_limit=max(n_max, 1_000_000))
            try:
                estimate = fmt(metrology.n_max_estimate(d, f, k).n_max)
            except NoAdvantageError:
                estimate = ""
            crossings.append((f, k, d, crossing, estimate))
    return curves, crossings


# staged output ----------------------------------------------------------------------


class StagedOutput:
    """Collects files in a temporary directory and publishes them on success."""

    def __init__(self, out: Path):
        self.out = out
        self.stage: Path | None = None

    def __enter__(self) -> "StagedOutput":
        self.created = not self.out.exists()
        self.out.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out))
        return self

    def path(self, relative: str) -> Path:
        target = self.stage / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def write(self, relative: str, text: str) -> None:
        self.path(relative).write_text(text)

    def __exit__(self, exc_type, exc, tb) -> bool:
        try:
            if exc_type is None:
                for item in sorted(self.stage.iterdir()):
                    dest = self.out / item.name
                    if dest.is_dir():
                        shutil.rmtree(dest)
                    item.replace(dest)
        finally:
            shutil.rmtree(self.stage, ignore_errors=True)
            if exc_type is not None and self.created:
                shutil.rmtree(self.out, ignore_errors=True)
        return False


# subcommands ------------------------------------------------------------------------


def cmd_thresholds(args, out: StagedOutput) -> None:
    rows = threshold_rows(range(args.d_min, args.d_max + 1), range(1, args.n_max + 1))
    out.write("thresholds.csv", _csv(THRESHOLD_COLUMNS, rows))


def cmd_analyze(args, out: StagedOutput) -> None:
    curves, crossings = curve_rows(ANALYZE_FIDELITIES, ANALYZE_K, args.d, args.n_max)
    out.write("eta_curves.csv", _csv(CURVE_COLUMNS, curves))
    out.write("crossings.csv", _csv(CROSSING_COLUMNS, crossings))


def _scenarios(args) -> list:
    if args.config and args.preset:
        raise ValidationError("use either --config or --preset, not both")
    if args.preset:
        return [preset(args.preset)]
    if args.config:
        return load_scenarios(args.config)
    if args.command == "sweep":
        return [preset(i) for i in (1, 2, 3)]
    raise ValidationError("simulate needs --config or --preset")


def _run(args, out: StagedOutput, results_name: str) -> None:
    if args.seed is None or args.trials is None:
        raise ValidationError(f"{args.command} requires --seed and --trials")
    scenarios = _scenarios(args)
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ValidationError(f"scenario names must be unique, got {names}")
    results = []
    for s in scenarios:
        log.info("running %s: %d trials, seed %d", s.name, args.trials, args.seed)
        result = campaign.run_campaign(
            s, args.trials, args.seed, log=args.log_trials, workers=args.workers
        )
        if not result.eta_defined:
            log.warning("%s: no trial produced a GHZ state, eta is undefined", s.name)
        results.append(result)
        if result.logs:
            campaign.write_event_logs(result, out.path(f"logs/{s.name}"))
    out.write(results_name, campaign.results_csv(results))


def cmd_simulate(args, out: StagedOutput) -> None:
    _run(args, out, "results.csv")


def cmd_sweep(args, out: StagedOutput) -> None:
    _run(args, out, "sweep.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqsense", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")

    p = sub.add_parser("thresholds", help="fidelity threshold table")
    common(p)
    p.add_argument("--d-min", type=int, default=2)
    p.add_argument("--d-max", type=int, default=10)
    p.add_argument("--n-max", type=int, default=4)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("analyze", help="advantage factor against local qubit number")
    common(p)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--n-max", type=int, default=200)
    p.set_defaults(func=cmd_analyze)

    for name, func, text in (
        ("simulate", cmd_simulate, "simulate one scenario"),
        ("sweep", cmd_sweep, "simulate a list of scenarios (default: presets 1-3)"),
    ):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--config", type=Path, help="YAML scenario file")
        p.add_argument("--preset", type=int, choices=(1, 2, 3))
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument(
            "--log-trials",
            type=int,
            default=10 if name == "simulate" else 0,
            help="write event logs for the first N trials (-1: all)",
        )
        p.set_defaults(func=func)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        with StagedOutput(args.out) as out:
            args.func(args, out)
    except (ValidationError, NoAdvantageError, UnsupportedScaleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
