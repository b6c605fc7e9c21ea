"""
Run configuration: scenario presets, the flat `key = value` config document and
validation into a RunConfig.

Config documents are parsed with python-dotenv's stream parser (no variable
expansion) so every binding keeps its line number. Unknown keys are rejected.
"""
import io
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, Optional, Tuple

from dotenv.parser import parse_stream

from potentials import ECKART, FREE, POTENTIAL_KINDS, PotentialSpec, eckart_potential, free_potential
from propagator import EXPLICIT, SCHEMES, PropagationSchedule, make_schedule
from utils.errors import ConfigError, ValidationError
from utils.validators import validate_bool, validate_choice, validate_count, validate_float
from wavepacket import GaussianParams, Grid, make_grid

logger = logging.getLogger(__name__)

SCENARIOS = ("free", "eckart", "custom")

# step count of the long explicit-scheme regime
PAPER_REGIME_STEPS = 10_000_000

PRESETS: Dict[str, Dict[str, str]] = {
    "free": {
        "q_min": "-10.0", "q_max": "10.0", "n_points": "2500",
        "t_final": "0.4", "n_steps": "100000",
        "gamma": "2.0", "q0": "-2.0", "p0": "10.0",
        "potential": "free",
        "scheme": "implicit", "snapshot_stride": "2500", "norm_check_stride": "1000",
        "trajectory_stride": "10", "n_traj": "19",
        "onset_threshold": "0.05", "paper_regime": "false",
        "output_dir": "runs/free",
    },
}
# the packet centre reaches the barrier at t = (qv - q0) / p0 = 0.15
PRESETS["eckart"] = dict(PRESETS["free"], **{
    "t_final": "0.35", "potential": "eckart", "V0": "200.0", "beta": "20.0", "qv": "-0.5",
    "output_dir": "runs/eckart",
})
PRESETS["custom"] = dict(PRESETS["free"], output_dir="runs/custom")

KNOWN_KEYS = (
    "scenario", "q_min", "q_max", "n_points", "t_final", "n_steps", "gamma", "q0", "p0",
    "potential", "V0", "beta", "qv", "scheme", "snapshot_stride", "norm_check_stride",
    "trajectory_stride", "n_traj", "half_span", "split_position", "onset_threshold",
    "amplitude_floor", "paper_regime", "output_dir",
)


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    grid: Grid
    packet: GaussianParams
    potential: PotentialSpec
    schedule: PropagationSchedule
    trajectory_stride: int
    n_traj: int
    half_span: float
    split_position: float
    onset_threshold: float
    amplitude_floor: Optional[float]
    paper_regime: bool
    output_dir: str

    def free_baseline(self) -> "RunConfig":
        """Same grid, packet, ensemble and schedule with V = 0"""
        return replace(self, potential=free_potential())


# ---------- PARSING ----------


def parse_document(text: str) -> Iterable[Tuple[int, str, str]]:
    """
    Yield (line, key, value) for every binding of a flat config document.
    Raises ConfigError for lines that are not `key = value` or comments.
    """
    for binding in parse_stream(io.StringIO(text)):
        original = binding.original.string
        leading = original[:len(original) - len(original.lstrip())]
        line = binding.original.line + leading.count("\n")
        if binding.error:
            raise ConfigError(f"cannot parse {original.strip()!r}", line=line)
        if binding.key is None:
            continue
        if binding.value is None:
            raise ConfigError("expected `key = value`", key=binding.key, line=line)
        yield line, binding.key, binding.value


def parse_override(text: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {text!r} must look like key=value")
    return key.strip(), value.strip()


# ---------- VALIDATION ----------


def _require(result, key: str, lines: Dict[str, int]):
    is_valid, value, error = result
    if not is_valid:
        raise ConfigError(error, key=key, line=lines.get(key))
    return value


def build_config(raw: Dict[str, str], lines: Optional[Dict[str, int]] = None) -> RunConfig:
    """Validate a merged key/value mapping (preset already applied) into a RunConfig."""
    lines = lines or {}
    for key in raw:
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", key=key, line=lines.get(key))

    def number(key, **limits):
        return _require(validate_float(raw.get(key), key, **limits), key, lines)

    def count(key, **limits):
        return _require(validate_count(raw.get(key), key, **limits), key, lines)

    scenario = _require(validate_choice(raw.get("scenario", "custom"), "scenario", SCENARIOS), "scenario", lines)
    paper_regime = _require(validate_bool(raw.get("paper_regime", "false"), "paper_regime"), "paper_regime", lines)

    q_min = number("q_min")
    q_max = number("q_max")
    n_points = count("n_points", min_value=3)
    t_final = number("t_final", min_value=0.0, exclusive_min=True)
    n_steps = PAPER_REGIME_STEPS if paper_regime else count("n_steps", min_value=1)
    if q_min >= q_max:
        raise ConfigError("q_min must be below q_max", key="q_min", line=lines.get("q_min"))

    gamma = number("gamma", min_value=0.0, exclusive_min=True)
    packet = GaussianParams(gamma=gamma, q0=number("q0"), p0=number("p0"))
    if not q_min < packet.q0 < q_max:
        raise ConfigError("packet centre must lie inside the grid", key="q0", line=lines.get("q0"))

    kind = _require(validate_choice(raw.get("potential"), "potential", POTENTIAL_KINDS), "potential", lines)
    if kind == ECKART:
        potential = eckart_potential(
            V0=number("V0", min_value=0.0, exclusive_min=True),
            beta=number("beta", min_value=0.0, exclusive_min=True),
            qv=number("qv") if "qv" in raw else 0.0,
        )
    else:
        potential = free_potential()

    scheme = EXPLICIT if paper_regime else _require(validate_choice(raw.get("scheme"), "scheme", SCHEMES),
                                                    "scheme", lines)
    try:
        grid = make_grid(q_min, q_max, n_points, t_final / n_steps, n_steps)
    except ValidationError as e:
        raise ConfigError(str(e), key="t_final", line=lines.get("t_final"))

    strides = {}
    for key in ("snapshot_stride", "norm_check_stride", "trajectory_stride"):
        default = "1" if key == "trajectory_stride" and paper_regime else None
        raw_value = default if default is not None else raw.get(key)
        strides[key] = _require(validate_count(raw_value, key, min_value=1, max_value=n_steps), key, lines)
    schedule = make_schedule(scheme, strides["snapshot_stride"], strides["norm_check_stride"], n_steps)

    n_traj = count("n_traj", min_value=1)
    if n_traj % 2 == 0:
        raise ConfigError("must be odd so a centre trajectory exists", key="n_traj", line=lines.get("n_traj"))
    half_span = number("half_span", min_value=0.0, exclusive_min=True) if "half_span" in raw \
        else 2.0 * packet.delta

    default_split = potential.qv if kind == ECKART else 0.0
    split = number("split_position") if "split_position" in raw else default_split
    if not q_min < split < q_max:
        raise ConfigError("must lie inside the grid", key="split_position", line=lines.get("split_position"))

    threshold = _require(validate_onset_threshold(raw.get("onset_threshold", "0.05")), "onset_threshold", lines)
    floor_text = (raw.get("amplitude_floor") or "auto").strip().lower()
    floor = None if floor_text == "auto" else number("amplitude_floor", min_value=0.0)

    output_dir = (raw.get("output_dir") or "").strip()
    if not output_dir:
        raise ConfigError("output_dir is required", key="output_dir", line=lines.get("output_dir"))

    return RunConfig(
        scenario=scenario,
        grid=grid,
        packet=packet,
        potential=potential,
        schedule=schedule,
        trajectory_stride=strides["trajectory_stride"],
        n_traj=n_traj,
        half_span=half_span,
        split_position=split,
        onset_threshold=threshold,
        amplitude_floor=floor,
        paper_regime=paper_regime,
        output_dir=output_dir,
    )


def validate_onset_threshold(raw) -> Tuple[bool, Optional[float], Optional[str]]:
    """Like validate_float but also accepts inf (never report an onset)."""
    text = str(raw).strip().lower() if raw is not None else ""
    if text in {"inf", "+inf", "infinity"}:
        return True, math.inf, None
    return validate_float(raw, "onset_threshold", min_value=0.0)


# ---------- ENTRY POINTS ----------


def resolve_config(preset: Optional[str] = None, path: Optional[str] = None,
                   overrides: Iterable[str] = (), output_dir: Optional[str] = None) -> RunConfig:
    """
    Merge preset -> config file -> overrides -> output directory, then validate.
    A `scenario` key in the file selects the preset when none is given.
    """
    file_values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path!r}: {e}")
        for line, key, value in parse_document(text):
            if key in file_values:
                raise ConfigError("duplicate key", key=key, line=line)
            file_values[key] = value
            lines[key] = line

    scenario = preset or file_values.get("scenario", "custom")
    is_valid, scenario, error = validate_choice(scenario, "scenario", SCENARIOS)
    if not is_valid:
        raise ConfigError(error, key="scenario", line=lines.get("scenario"))

    merged = dict(PRESETS[scenario])
    merged.update(file_values)
    merged["scenario"] = scenario
    given = set(file_values)
    for text in overrides:
        key, value = parse_override(text)
        merged[key] = value
        given.add(key)
        lines.pop(key, None)
    if output_dir:
        merged["output_dir"] = output_dir

    # preset strides are sized for the desk-scale step count
    is_valid, paper_regime, _ = validate_bool(merged.get("paper_regime", "false"), "paper_regime")
    if is_valid and paper_regime:
        factor = PAPER_REGIME_STEPS // int(PRESETS[scenario]["n_steps"])
        for key in ("snapshot_stride", "norm_check_stride"):
            if key not in given:
                merged[key] = str(int(PRESETS[scenario][key]) * factor)

    config = build_config(merged, lines)
    logger.info(f"Resolved {scenario} configuration: {config.grid.n_points} nodes, "
                f"{config.grid.n_steps} {config.schedule.scheme} steps, dt={config.grid.dt!r}")
    return config


def load_config(path: str) -> RunConfig:
    """Load and validate a config document."""
    return resolve_config(path=path)


def describe_config(config: RunConfig) -> Dict[str, str]:
    """Flat key/value form of a resolved configuration, in KNOWN_KEYS order"""
    grid, packet, potential = config.grid, config.packet, config.potential
    values = {
        "scenario": config.scenario,
        "q_min": repr(grid.q_min), "q_max": repr(grid.q_max), "n_points": str(grid.n_points),
        "t_final": repr(grid.t_final), "n_steps": str(grid.n_steps),
        "gamma": repr(packet.gamma), "q0": repr(packet.q0), "p0": repr(packet.p0),
        "potential": potential.kind,
    }
    if potential.kind != FREE:
        values.update(V0=repr(potential.V0), beta=repr(potential.beta), qv=repr(potential.qv))
    values.update({
        "scheme": config.schedule.scheme,
        "snapshot_stride": str(config.schedule.snapshot_stride),
        "norm_check_stride": str(config.schedule.norm_check_stride),
        "trajectory_stride": str(config.trajectory_stride),
        "n_traj": str(config.n_traj),
        "half_span": repr(config.half_span),
        "split_position": repr(config.split_position),
        "onset_threshold": repr(config.onset_threshold),
        "amplitude_floor": "auto" if config.amplitude_floor is None else repr(config.amplitude_floor),
        "paper_regime": "true" if config.paper_regime else "false",
        "output_dir": config.output_dir,
    })
    return values
