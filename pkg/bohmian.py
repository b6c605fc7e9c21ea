"""
Quantum potential, quantum force, velocity field and the Bohmian trajectory ensemble.

Derivatives are central differences on the grid; values between nodes are read by
linear interpolation. Nodes whose amplitude lies below the polar floor carry NaN
for Q and FQ ("not computed"), and a trajectory that samples one is an error.
"""
import logging
from dataclasses import dataclass, field as dataclass_field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from potentials import PotentialSpec, classical_force, eval_potential
from propagator import is_record_step
from utils.errors import (StarvedRegionError, TrajectoryCrossingError, TrajectoryEscapeError,
                          ValidationError)
from utils.validators import validate_count, validate_float
from wavepacket import ComplexField, GaussianParams, Grid, PolarField, node_positions, polar_decompose

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = ("q", "v", "Q", "FQ", "FC", "Feff", "V", "Veff")


# ---------- TYPES ----------


@dataclass(frozen=True, eq=False)
class FieldDerived:
    """
    Per-node quantities of one field. v is the phase gradient; transport is the
    velocity the probability actually flows with on the lattice.
    """
    Q: np.ndarray
    FQ: np.ndarray
    v: np.ndarray
    transport: np.ndarray
    time: float


@dataclass(frozen=True, eq=False)
class EnsembleRecord:
    """Every trajectory sampled at one time; each array has one entry per trajectory."""
    time: float
    values: Dict[str, np.ndarray]


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    initial_positions: np.ndarray
    positions: np.ndarray
    time: float = 0.0
    records: Tuple[EnsembleRecord, ...] = dataclass_field(default_factory=tuple)

    @property
    def n_traj(self) -> int:
        return int(self.initial_positions.size)

    @property
    def times(self) -> np.ndarray:
        return np.array([record.time for record in self.records])

    def series(self, index: int) -> Dict[str, np.ndarray]:
        """Time series of one trajectory: t plus every sampled quantity"""
        data = {"t": self.times}
        for column in SAMPLE_COLUMNS:
            data[column] = np.array([record.values[column][index] for record in self.records])
        return data


# ---------- FIELD-DERIVED QUANTITIES ----------


def quantum_potential(polar: PolarField, grid: Grid) -> np.ndarray:
    """
    Q = -(1/2) R''/R with the 3-point second difference.
    Boundary nodes and nodes with R below the floor are NaN.

    The leading minus sign is the one from the definition Q = -(1/2m) lap(R)/R; the
    finite-difference form is sometimes printed without it, which flips the sign of Q.
    """
    amplitude = polar.amplitude
    result = np.full(amplitude.shape, np.nan)

    centre = amplitude[1:-1]
    computable = (centre >= polar.floor) & (centre > 0.0)
    second = (amplitude[2:] - 2.0 * centre + amplitude[:-2]) / grid.dq ** 2

    interior = result[1:-1]
    interior[computable] = -0.5 * second[computable] / centre[computable]
    return result


def quantum_force(Q: np.ndarray, grid: Grid) -> np.ndarray:
    """F_Q = -dQ/dq by central differences; NaN markers spread to their neighbours."""
    result = np.full(Q.shape, np.nan)
    result[1:-1] = -(Q[2:] - Q[:-2]) / (2.0 * grid.dq)
    return result


def velocity_field(polar: PolarField, grid: Grid) -> np.ndarray:
    """v = dS/dq (m = 1): central differences inside, one-sided at the two boundary nodes."""
    return np.gradient(polar.phase, grid.dq)


def transport_velocity(polar: PolarField, grid: Grid) -> np.ndarray:
    """
    Velocity of the lattice probability current, J_i / R_i^2 with
    J_i = Im{psi*_i (psi_{i+1} - psi_{i-1})} / (2 dq).

    A plane wave exp(ipq) gives sin(p dq)/dq, the speed at which a packet moves on
    the 3-point lattice. Boundary nodes and nodes below the floor carry dS/dq.
    """
    amplitude, phase = polar.amplitude, polar.phase
    result = velocity_field(polar, grid)

    centre = amplitude[1:-1]
    usable = (centre >= polar.floor) & (centre > 0.0)
    flow = (amplitude[2:] * np.sin(phase[2:] - phase[1:-1])
            + amplitude[:-2] * np.sin(phase[1:-1] - phase[:-2])) / (2.0 * grid.dq)

    interior = result[1:-1]
    interior[usable] = flow[usable] / centre[usable]
    return result


def derive_fields(polar: PolarField, grid: Grid) -> FieldDerived:
    Q = quantum_potential(polar, grid)
    return FieldDerived(Q=Q, FQ=quantum_force(Q, grid), v=velocity_field(polar, grid),
                        transport=transport_velocity(polar, grid), time=polar.time)


def effective_force(FQ, FC):
    return FC + FQ


def effective_potential(Q, V):
    """Potential the particle actually moves in: classical plus quantum"""
    return V + Q


# ---------- ENSEMBLE ----------


def make_ensemble(params: GaussianParams, n_traj: int, half_span: float) -> TrajectoryEnsemble:
    """
    n_traj points spread evenly over [q0 - half_span, q0 + half_span]; the middle one sits exactly on q0.
    """
    is_valid, count, error = validate_count(n_traj, "n_traj", min_value=1)
    if not is_valid:
        raise ValidationError(error)
    if count % 2 == 0:
        raise ValidationError(f"n_traj must be odd so a centre trajectory exists (got {count})")
    is_valid, span, error = validate_float(half_span, "half_span", min_value=0.0, exclusive_min=True)
    if not is_valid:
        raise ValidationError(error)

    if count == 1:
        positions = np.array([params.q0], dtype=float)
    else:
        fractions = 2.0 * np.arange(count) / (count - 1) - 1.0
        positions = params.q0 + span * fractions

    positions.setflags(write=False)
    return TrajectoryEnsemble(initial_positions=positions, positions=positions, time=0.0)


def _interpolate(values: np.ndarray, positions: np.ndarray, grid: Grid) -> np.ndarray:
    return np.interp(positions, node_positions(grid), values)


def sample_ensemble(ensemble: TrajectoryEnsemble, derived: FieldDerived, spec: PotentialSpec,
                    grid: Grid) -> TrajectoryEnsemble:
    """Append one record of the transport velocity, Q, FQ, FC, Feff, V and Veff at the current positions."""
    positions = ensemble.positions
    Q = _interpolate(derived.Q, positions, grid)
    FQ = _interpolate(derived.FQ, positions, grid)

    starved = np.flatnonzero(~(np.isfinite(Q) & np.isfinite(FQ)))
    if starved.size:
        raise StarvedRegionError(int(starved[0]), ensemble.time)

    FC = np.asarray(classical_force(spec, positions), dtype=float)
    V = np.asarray(eval_potential(spec, positions), dtype=float)
    values = {
        "q": positions.copy(),
        "v": _interpolate(derived.transport, positions, grid),
        "Q": Q,
        "FQ": FQ,
        "FC": FC,
        "Feff": effective_force(FQ, FC),
        "V": V,
        "Veff": effective_potential(Q, V),
    }
    record = EnsembleRecord(time=ensemble.time, values=values)
    return replace(ensemble, records=ensemble.records + (record,))


def advance_trajectories(ensemble: TrajectoryEnsemble, v_field: np.ndarray, grid: Grid, dt: float,
                         derived: Optional[FieldDerived] = None,
                         spec: Optional[PotentialSpec] = None) -> TrajectoryEnsemble:
    """
    Euler step q <- q + v(q) dt with v linearly interpolated between the bracketing nodes.
    With derived (and spec) given, the ensemble is first sampled at its current positions.
    """
    if derived is not None:
        ensemble = sample_ensemble(ensemble, derived, spec or PotentialSpec(), grid)

    positions = ensemble.positions + dt * _interpolate(v_field, ensemble.positions, grid)
    time = ensemble.time + dt

    outside = np.flatnonzero((positions <= grid.q_min) | (positions >= grid.q_max) | ~np.isfinite(positions))
    if outside.size:
        index = int(outside[0])
        raise TrajectoryEscapeError(index, time, float(positions[index]))

    positions.setflags(write=False)
    return replace(ensemble, positions=positions, time=time)


def check_ordering(ensemble: TrajectoryEnsemble) -> None:
    gaps = np.diff(ensemble.positions)
    crossed = np.flatnonzero(gaps <= 0.0)
    if crossed.size:
        raise TrajectoryCrossingError(int(crossed[0]), ensemble.time)


# ---------- TRACKING DURING PROPAGATION ----------


class TrajectoryTracker:
    """
    Propagation observer that carries an ensemble along with the field.

    Trajectories move every trajectory_stride steps and at every record step, so
    records line up with the snapshot times of the same run.
    """

    def __init__(self, ensemble: TrajectoryEnsemble, grid: Grid, spec: PotentialSpec, n_steps: int,
                 trajectory_stride: int = 1, record_stride: int = 1, amplitude_floor: Optional[float] = None):
        self.ensemble = ensemble
        self.grid = grid
        self.spec = spec
        self.n_steps = int(n_steps)
        self.trajectory_stride = int(trajectory_stride)
        self.record_stride = int(record_stride)
        self.amplitude_floor = amplitude_floor

    def _is_event(self, step: int) -> bool:
        return step % self.trajectory_stride == 0 or is_record_step(step, self.n_steps, self.record_stride)

    def _next_event(self, step: int) -> int:
        next_move = (step // self.trajectory_stride + 1) * self.trajectory_stride
        next_record = (step // self.record_stride + 1) * self.record_stride
        return min(next_move, next_record, self.n_steps)

    def __call__(self, step: int, field: ComplexField) -> None:
        if not self._is_event(step):
            return

        polar = polar_decompose(field, self.amplitude_floor)
        ensemble = replace(self.ensemble, time=field.time)
        if is_record_step(step, self.n_steps, self.record_stride):
            ensemble = sample_ensemble(ensemble, derive_fields(polar, self.grid), self.spec, self.grid)

        if step < self.n_steps:
            span = self._next_event(step) - step
            ensemble = advance_trajectories(ensemble, transport_velocity(polar, self.grid), self.grid,
                                            span * self.grid.dt)
            check_ordering(ensemble)

        self.ensemble = ensemble
