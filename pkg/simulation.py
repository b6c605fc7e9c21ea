"""
Scenario runner and command-line entry point.

    python simulation.py run --preset free --out runs/free
    python simulation.py run --preset eckart --override n_steps=20000
    python simulation.py run --config my_run.cfg

Exit status: 0 on success, 1 on a validation error, 2 on a numerical failure.
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional

from dotenv import load_dotenv

from analysis import ScatteringReport, onset_detector, scattering_report
from bohmian import TrajectoryEnsemble, TrajectoryTracker, make_ensemble
from potentials import describe, potential_on_grid
from propagator import EXPLICIT, EXPLICIT_DRIFT_LIMIT, SnapshotSet, propagate
from utils.config import RunConfig, resolve_config
from utils.csv_io import run_files, write_fields_csv, write_report, write_trajectories_csv
from utils.errors import NumericalError, SimulationError, ValidationError
from utils.lockfile import RunDirectoryLock
from wavepacket import gaussian_packet

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

# the trajectory at the back of the packet
LEFT_EDGE = 0


def configure_logging() -> None:
    """
    Configure logging for the simulation CLI: a log file plus the console.
    Log lines never go into run artefacts.
    """
    level = getattr(logging, os.environ.get("BOHM_LOG_LEVEL", "INFO").upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[
            logging.FileHandler(os.environ.get("BOHM_LOG_FILE", "bohm_sim.log")),
            logging.StreamHandler(),
        ],
    )


@dataclass(frozen=True)
class ScenarioRun:
    config: RunConfig
    snapshots: SnapshotSet
    ensemble: TrajectoryEnsemble


@dataclass(frozen=True)
class RunResult:
    primary: ScenarioRun
    baseline: Optional[ScenarioRun]
    report: ScatteringReport
    files: Dict[str, str]


class ScenarioRunner:
    """
    Runs one configured scenario: propagation with the trajectory ensemble carried
    along, the free baseline when a barrier is present, the analysis, and the artefacts.
    """

    def __init__(self, config: RunConfig):
        self.config = config

    # ---------- SIMULATION ----------

    def simulate(self, config: Optional[RunConfig] = None) -> ScenarioRun:
        config = config or self.config
        grid = config.grid
        logger.info(f"Simulating {config.scenario} scenario, potential {describe(config.potential)}")

        initial = gaussian_packet(grid, config.packet)
        tracker = TrajectoryTracker(
            make_ensemble(config.packet, config.n_traj, config.half_span),
            grid,
            config.potential,
            n_steps=grid.n_steps,
            trajectory_stride=config.trajectory_stride,
            record_stride=config.schedule.snapshot_stride,
            amplitude_floor=config.amplitude_floor,
        )
        snapshots = propagate(initial, config.potential, grid, config.schedule,
                              observer=tracker, amplitude_floor=config.amplitude_floor)
        return ScenarioRun(config=config, snapshots=snapshots, ensemble=tracker.ensemble)

    def analyse(self, primary: ScenarioRun, baseline: Optional[ScenarioRun]) -> ScatteringReport:
        config = primary.config
        onset = None
        if baseline is not None:
            onset = onset_detector(primary.snapshots, primary.ensemble, baseline.snapshots, baseline.ensemble,
                                   threshold=config.onset_threshold, trajectory=LEFT_EDGE)
        report = scattering_report(primary.snapshots, config.grid, config.potential, config.split_position,
                                   onset_time=onset, onset_threshold=config.onset_threshold,
                                   scheme=config.schedule.scheme)
        logger.info(f"Transmission {report.transmission:.6f}, reflection {report.reflection:.6f} "
                    f"at t={report.evaluation_time!r}; onset {report.onset_time}")
        return report

    # ---------- ARTEFACTS ----------

    def write_outputs(self, primary: ScenarioRun, report: ScatteringReport) -> Dict[str, str]:
        config = primary.config
        files = run_files(config.output_dir)
        drift_exceeded = (config.schedule.scheme == EXPLICIT
                          and primary.snapshots.max_norm_deviation() > EXPLICIT_DRIFT_LIMIT)

        write_fields_csv(files["fields"], primary.snapshots, config.grid,
                         potential_on_grid(config.potential, config.grid))
        write_trajectories_csv(files["trajectories"], primary.ensemble)
        write_report(files["report"], config, report, primary.snapshots, explicit_drift_flag=drift_exceeded)
        return files

    def run(self) -> RunResult:
        """Simulate, analyse and write artefacts while holding the output directory lock."""
        with RunDirectoryLock(self.config.output_dir):
            primary = self.simulate()
            baseline = None if self.config.potential.is_free else self.simulate(self.config.free_baseline())
            report = self.analyse(primary, baseline)
            files = self.write_outputs(primary, report)
        logger.info(f"Run finished, artefacts in {self.config.output_dir}")
        return RunResult(primary=primary, baseline=baseline, report=report, files=files)


# ---------- COMMAND LINE ----------


class RunArgumentParser(argparse.ArgumentParser):
    """Usage errors surface as ValidationError (exit 1) instead of argparse's exit 2."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = RunArgumentParser(description="Bohmian trajectories of a 1D wavepacket")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a scenario and write fields.csv, trajectories.csv, report.txt")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="flat `key = value` config document")
    source.add_argument("--preset", choices=["free", "eckart"], help="built-in scenario preset")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="override one config key (repeatable)")
    run.add_argument("--out", help="output directory")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except ValidationError as e:
        logger.error(f"Invalid command line: {e}")
        return EXIT_VALIDATION

    try:
        config = resolve_config(preset=args.preset, path=args.config, overrides=args.override,
                                output_dir=args.out)
        ScenarioRunner(config).run()
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_VALIDATION
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except SimulationError as e:
        logger.error(f"Run failed: {e}", exc_info=True)
        return EXIT_NUMERICAL

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
