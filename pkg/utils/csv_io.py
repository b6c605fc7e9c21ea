"""
Plain-text artefacts of a run: fields.csv, trajectories.csv and report.txt.

Floats are written with repr(), the shortest text that parses back to the same
double, so reading a file reproduces the in-memory values exactly. Nothing
time-of-day dependent is written, so identical runs give identical bytes.
"""
import csv
import logging
import os
from typing import Dict, List, Optional

import numpy as np

from bohmian import SAMPLE_COLUMNS, TrajectoryEnsemble, quantum_potential
from utils.config import describe_config, parse_document
from wavepacket import Grid, node_positions

logger = logging.getLogger(__name__)

FIELDS_FILE = "fields.csv"
TRAJECTORIES_FILE = "trajectories.csv"
REPORT_FILE = "report.txt"

FIELD_COLUMNS = ["t", "q", "re", "im", "R", "S", "Q", "V"]
TRAJECTORY_COLUMNS = ["traj_id", "t"] + list(SAMPLE_COLUMNS)


def format_float(value) -> str:
    return repr(float(value))


def format_optional(value: Optional[float]) -> str:
    return "none" if value is None else format_float(value)


# ---------- WRITERS ----------


def write_fields_csv(path: str, snapshots, grid: Grid, potential_values: np.ndarray) -> int:
    """One row per (snapshot, node). Returns the number of rows written."""
    q_text = [format_float(q) for q in node_positions(grid)]
    v_text = [format_float(v) for v in potential_values]
    rows = 0

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(FIELD_COLUMNS)
        for snap in snapshots.snapshots:
            t_text = format_float(snap.time)
            psi = snap.field.values
            Q = quantum_potential(snap.polar, grid)
            for i in range(grid.n_points):
                writer.writerow([
                    t_text, q_text[i],
                    format_float(psi[i].real), format_float(psi[i].imag),
                    format_float(snap.polar.amplitude[i]), format_float(snap.polar.phase[i]),
                    format_float(Q[i]), v_text[i],
                ])
                rows += 1

    logger.info(f"Wrote {rows} rows to {path}")
    return rows


def write_trajectories_csv(path: str, ensemble: TrajectoryEnsemble) -> int:
    """One row per (trajectory, record), grouped by trajectory."""
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for index in range(ensemble.n_traj):
            for record in ensemble.records:
                writer.writerow([str(index), format_float(record.time)]
                                + [format_float(record.values[column][index]) for column in SAMPLE_COLUMNS])
                rows += 1

    logger.info(f"Wrote {rows} rows to {path}")
    return rows


def write_report(path: str, config, report, snapshots, explicit_drift_flag: bool = False) -> None:
    """
    report.txt in the same `key = value` form as config documents, so it parses
    with the same reader.
    """
    lines: List[str] = ["# bohmian trajectory run report", "", "# configuration"]
    lines += [f"{key} = {value}" for key, value in describe_config(config).items()]

    position_residual, momentum_residual = report.ehrenfest_residuals
    lines += [
        "",
        "# scattering",
        f"transmission = {format_float(report.transmission)}",
        f"reflection = {format_float(report.reflection)}",
        f"split_position = {format_float(report.split_position)}",
        f"evaluation_time = {format_float(report.evaluation_time)}",
        f"transmission_dominant = {'true' if report.transmission > 0.5 else 'false'}",
        "",
        "# consistency",
        f"ehrenfest_position_residual = {format_float(position_residual)}",
        f"ehrenfest_momentum_residual = {format_float(momentum_residual)}",
        f"continuity_mismatch = {format_float(report.continuity_mismatch)}",
        f"continuity_residual = {format_float(report.max_continuity_residual)}",
        "",
        "# onset of the barrier's influence on the left-edge trajectory",
        f"onset_time = {format_optional(report.onset_time)}",
        f"onset_threshold = {format_float(report.onset_threshold)}",
        f"onset_reference_time = {format_float(report.onset_reference_time)}",
        "",
        "# norm history (time norm)",
        f"max_norm_deviation = {format_float(snapshots.max_norm_deviation())}",
        f"norm_drift_exceeded = {'true' if explicit_drift_flag else 'false'}",
        f"norm_samples = {len(snapshots.norm_history)}",
    ]
    width = len(str(max(len(snapshots.norm_history) - 1, 0)))
    lines += [f"norm_{k:0{width}d} = {format_float(t)} {format_float(norm)}"
              for k, (t, norm) in enumerate(snapshots.norm_history)]

    lines += ["", "# continuity residual per snapshot (time residual)"]
    width = len(str(max(len(report.continuity_residuals) - 1, 0)))
    lines += [f"residual_{k:0{width}d} = {format_float(t)} {format_float(value)}"
              for k, (t, value) in enumerate(report.continuity_residuals)]

    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    logger.info(f"Wrote report to {path}")


# ---------- READERS ----------


def read_fields_csv(path: str) -> Dict[str, np.ndarray]:
    """Column name -> float array, in file order"""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        columns: Dict[str, list] = {name: [] for name in reader.fieldnames or []}
        for row in reader:
            for name in columns:
                columns[name].append(float(row[name]))
    return {name: np.array(values, dtype=float) for name, values in columns.items()}


def read_trajectories_csv(path: str) -> Dict[int, Dict[str, np.ndarray]]:
    """traj_id -> column name -> float array"""
    series: Dict[int, Dict[str, list]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        names = [name for name in reader.fieldnames or [] if name != "traj_id"]
        for row in reader:
            entry = series.setdefault(int(row["traj_id"]), {name: [] for name in names})
            for name in names:
                entry[name].append(float(row[name]))
    return {index: {name: np.array(values, dtype=float) for name, values in columns.items()}
            for index, columns in series.items()}


def read_report(path: str) -> Dict[str, str]:
    with open(path, encoding="utf-8") as f:
        return {key: value for _, key, value in parse_document(f.read())}


def split_snapshots(fields: Dict[str, np.ndarray]) -> List[Dict[str, np.ndarray]]:
    """Cut the flat fields table into one block per snapshot time"""
    times = fields.get("t")
    if times is None or not times.size:
        return []
    starts = np.flatnonzero(np.concatenate(([True], times[1:] != times[:-1])))
    ends = np.append(starts[1:], times.size)
    return [{name: values[start:end] for name, values in fields.items()} for start, end in zip(starts, ends)]


def run_files(directory: str) -> Dict[str, str]:
    return {
        "fields": os.path.join(directory, FIELDS_FILE),
        "trajectories": os.path.join(directory, TRAJECTORIES_FILE),
        "report": os.path.join(directory, REPORT_FILE),
    }
