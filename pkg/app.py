"""
Read-only JSON service over finished run directories.

Every sub-directory of BOHM_RUNS_DIR that holds a report.txt is a run. The service
only reads artefacts; it never starts or steers a simulation.
"""
import logging
import math
import os

from dotenv import load_dotenv
from flask import Flask, abort, jsonify, request
from werkzeug.utils import secure_filename

from utils.csv_cache import artefact_cache
from utils.csv_io import (read_fields_csv, read_report, read_trajectories_csv, run_files,
                          split_snapshots)
from utils.validators import validate_run_name

# Load environment variables from .env file
load_dotenv()

app = Flask(__name__)
app.config["RUNS_DIR"] = os.environ.get("BOHM_RUNS_DIR", "runs")

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


# ---------- HELPERS ----------


def _json_number(value: float):
    """JSON has no NaN: not-computed markers become null"""
    return None if math.isnan(value) else value


def _column(values):
    return [_json_number(float(v)) for v in values]


def run_directory(run: str) -> str:
    """Resolve a run name to its directory or abort with 404"""
    is_valid, error = validate_run_name(run)
    safe = secure_filename(run)
    if not is_valid or safe != run:
        abort(404, description=error or "Unknown run")

    directory = os.path.join(app.config["RUNS_DIR"], safe)
    if not os.path.isfile(run_files(directory)["report"]):
        abort(404, description=f"Run {run} not found")
    return directory


@app.errorhandler(404)
def not_found(error):
    return jsonify({"error": getattr(error, "description", "Not found")}), 404


# ---------- API ENDPOINTS ----------


@app.route("/api/runs")
def api_runs():
    """GET endpoint listing finished runs"""
    root = app.config["RUNS_DIR"]
    try:
        names = sorted(os.listdir(root)) if os.path.isdir(root) else []
        runs = [name for name in names if os.path.isfile(run_files(os.path.join(root, name))["report"])]
        return jsonify({"runs": runs, "total": len(runs)})
    except OSError as e:
        logger.error(f"Error listing runs in {root}: {e}", exc_info=True)
        return jsonify({"error": "Failed to list runs"}), 500


@app.route("/api/runs/<run>/report")
def api_report(run):
    """GET endpoint returning report.txt as JSON"""
    directory = run_directory(run)
    try:
        report = artefact_cache.load(run_files(directory)["report"], read_report)
        return jsonify({"run": run, "report": report})
    except (OSError, ValueError) as e:
        logger.error(f"Error reading report of {run}: {e}", exc_info=True)
        return jsonify({"error": "Failed to read report"}), 500


@app.route("/api/runs/<run>/trajectories")
def api_trajectories(run):
    """GET endpoint returning trajectory series, optionally a single one via ?traj_id="""
    directory = run_directory(run)
    try:
        series = artefact_cache.load(run_files(directory)["trajectories"], read_trajectories_csv)
    except FileNotFoundError:
        abort(404, description=f"Run {run} has no trajectories")
    except (OSError, ValueError) as e:
        logger.error(f"Error reading trajectories of {run}: {e}", exc_info=True)
        return jsonify({"error": "Failed to read trajectories"}), 500

    traj_id = request.args.get("traj_id", type=int)
    if traj_id is not None:
        if traj_id not in series:
            abort(404, description=f"Trajectory {traj_id} not found")
        selected = {traj_id: series[traj_id]}
    else:
        selected = series

    return jsonify({
        "run": run,
        "trajectories": {
            str(index): {name: _column(values) for name, values in columns.items()}
            for index, columns in sorted(selected.items())
        },
        "total": len(selected),
    })


def _snapshot_blocks(run: str):
    directory = run_directory(run)
    try:
        fields = artefact_cache.load(run_files(directory)["fields"], read_fields_csv)
    except FileNotFoundError:
        abort(404, description=f"Run {run} has no fields")
    return split_snapshots(fields)


@app.route("/api/runs/<run>/snapshots")
def api_snapshots(run):
    """GET endpoint listing the snapshot times of a run"""
    blocks = _snapshot_blocks(run)
    return jsonify({"run": run, "times": [float(block["t"][0]) for block in blocks], "total": len(blocks)})


@app.route("/api/runs/<run>/snapshots/<int:index>")
def api_snapshot(run, index):
    """GET endpoint returning one snapshot's columns"""
    blocks = _snapshot_blocks(run)
    if not 0 <= index < len(blocks):
        abort(404, description=f"Snapshot {index} not found")
    block = blocks[index]
    return jsonify({
        "run": run,
        "index": index,
        "time": float(block["t"][0]),
        "columns": {name: _column(values) for name, values in block.items() if name != "t"},
    })


# Request logging middleware
@app.before_request
def log_request():
    """Log request information for debugging"""
    logger.info(f"{request.method} {request.path} - IP: {request.remote_addr}")


if __name__ == "__main__":
    port = int(os.environ.get("PORT", 5000))
    debug = os.environ.get("FLASK_ENV") != "production"
    app.run(host="0.0.0.0", port=port, debug=debug)
