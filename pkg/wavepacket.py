"""
Spatial grid, complex wavefunction storage, the Gaussian initial packet and the
polar decomposition psi = R exp(iS) with phase unwrapping.

Atomic units throughout (hbar = m = 1). All types are immutable after construction.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from utils.errors import ValidationError
from utils.validators import validate_count, validate_float

logger = logging.getLogger(__name__)

# Relative amplitude below which arg(psi) carries no information.
DEFAULT_RELATIVE_FLOOR = 1e-10

# A packet whose boundary amplitude exceeds this fraction of its peak is not contained by the grid.
CONTAINMENT_TOLERANCE = 1e-12


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


# ---------- TYPES ----------


@dataclass(frozen=True)
class Grid:
    """Uniform lattice on [q_min, q_max], endpoints included, plus the time-step schedule."""
    q_min: float
    q_max: float
    n_points: int
    dt: float
    n_steps: int

    @property
    def dq(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    @property
    def t_final(self) -> float:
        return self.n_steps * self.dt


@dataclass(frozen=True, eq=False)
class ComplexField:
    values: np.ndarray
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class PolarField:
    amplitude: np.ndarray
    phase: np.ndarray
    time: float
    floor: float

    def reliable(self) -> np.ndarray:
        """Mask of nodes whose amplitude is at or above the floor"""
        return self.amplitude >= self.floor

    def reconstruct(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)


@dataclass(frozen=True)
class GaussianParams:
    gamma: float
    q0: float
    p0: float

    @property
    def delta(self) -> float:
        """Packet width parameter, gamma = 1 / (2 delta^2)"""
        return float(np.sqrt(1.0 / (2.0 * self.gamma)))

    @property
    def sigma(self) -> float:
        """Standard deviation of |psi|^2 at t = 0"""
        return float(np.sqrt(1.0 / (4.0 * self.gamma)))


# ---------- GRID ----------


def make_grid(q_min: float, q_max: float, n_points: int, dt: float, n_steps: int) -> Grid:
    """
    Build a validated grid. Node i sits at q_min + i*dq with dq = (q_max - q_min)/(n_points - 1).
    """
    checks = [
        validate_float(q_min, "q_min"),
        validate_float(q_max, "q_max"),
        validate_count(n_points, "n_points", min_value=3),
        validate_float(dt, "dt", min_value=0.0, exclusive_min=True),
        validate_count(n_steps, "n_steps", min_value=1),
    ]
    for is_valid, _, error in checks:
        if not is_valid:
            raise ValidationError(error)

    (_, lo, _), (_, hi, _), (_, n, _), (_, step, _), (_, steps, _) = checks
    if lo >= hi:
        raise ValidationError(f"q_min must be below q_max (got {lo!r} >= {hi!r})")

    return Grid(q_min=lo, q_max=hi, n_points=n, dt=step, n_steps=steps)


def node_positions(grid: Grid) -> np.ndarray:
    """Node positions computed from their index, so they are reproducible bit for bit"""
    return grid.q_min + np.arange(grid.n_points) * grid.dq


def discrete_norm(field: ComplexField, grid: Grid) -> float:
    return float(np.sum(np.abs(field.values) ** 2) * grid.dq)


def make_field(values, grid: Grid, time: float = 0.0) -> ComplexField:
    """Wrap an array as a ComplexField on the grid, clamping both boundary nodes to zero."""
    data = np.array(values, dtype=complex)
    if data.shape != (grid.n_points,):
        raise ValidationError(f"field has shape {data.shape}, grid expects ({grid.n_points},)")
    data[0] = 0.0
    data[-1] = 0.0
    return ComplexField(values=_frozen(data), time=float(time))


# ---------- INITIAL STATE ----------


def gaussian_packet(grid: Grid, params: GaussianParams) -> ComplexField:
    """
    (2 gamma/pi)^(1/4) exp[-gamma (q - q0)^2 + i p0 (q - q0)] sampled on the grid, boundaries clamped to zero.
    """
    is_valid, _, error = validate_float(params.gamma, "gamma", min_value=0.0, exclusive_min=True)
    if not is_valid:
        raise ValidationError(error)

    offset = node_positions(grid) - params.q0
    prefactor = (2.0 * params.gamma / np.pi) ** 0.25
    values = prefactor * np.exp(-params.gamma * offset ** 2 + 1j * params.p0 * offset)

    edge = max(abs(values[0]), abs(values[-1]))
    if edge > CONTAINMENT_TOLERANCE * prefactor:
        logger.warning(
            f"Gaussian packet not contained by the grid: boundary amplitude {edge:.3e} "
            f"is {edge / prefactor:.3e} of the peak"
        )

    return make_field(values, grid, time=0.0)


# ---------- POLAR DECOMPOSITION ----------


def polar_decompose(field: ComplexField, amplitude_floor: Optional[float] = None) -> PolarField:
    """
    Split psi into amplitude R = |psi| and a spatially unwrapped phase S.

    Nodes with R below the floor (default 1e-10 of max R) have no meaningful argument:
    their phase is bridged linearly between the neighbouring reliable nodes and held
    constant beyond the outermost ones.
    """
    values = field.values
    if not np.all(np.isfinite(values)):
        raise ValidationError("cannot decompose a field with non-finite values")

    amplitude = np.abs(values)
    peak = float(amplitude.max()) if amplitude.size else 0.0
    floor = DEFAULT_RELATIVE_FLOOR * peak if amplitude_floor is None else float(amplitude_floor)

    phase = np.zeros(amplitude.shape)
    if peak == 0.0:
        return PolarField(amplitude=_frozen(amplitude), phase=_frozen(phase), time=field.time, floor=floor)

    reliable = np.flatnonzero(amplitude >= floor) if floor > 0.0 else np.flatnonzero(amplitude > 0.0)
    unwrapped = np.unwrap(np.angle(values[reliable]))
    if reliable.size == amplitude.size:
        phase = unwrapped
    else:
        phase = np.interp(np.arange(amplitude.size), reliable, unwrapped)
        phase[reliable] = unwrapped

    return PolarField(amplitude=_frozen(amplitude), phase=_frozen(phase), time=field.time, floor=floor)
