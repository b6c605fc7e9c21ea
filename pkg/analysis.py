"""
Scenario-level observables: transmission/reflection, moments of |psi|^2,
Ehrenfest residuals, the continuity cross-check and the onset of the barrier's
influence on the quantum potential along a trajectory.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from bohmian import TrajectoryEnsemble, velocity_field
from potentials import PotentialSpec, force_on_grid
from propagator import IMPLICIT, Snapshot, SnapshotSet, advance_field
from utils.errors import ValidationError
from wavepacket import ComplexField, Grid, PolarField, discrete_norm, node_positions, polar_decompose

logger = logging.getLogger(__name__)

DEFAULT_ONSET_THRESHOLD = 0.05

# Time at which scattering is read off the trajectory plots of the Eckart run.
SCATTERING_REFERENCE_TIME = 0.15


@dataclass(frozen=True)
class ScatteringReport:
    transmission: float
    reflection: float
    split_position: float
    evaluation_time: float
    ehrenfest_residuals: Tuple[float, float]
    onset_time: Optional[float]
    onset_threshold: float = DEFAULT_ONSET_THRESHOLD
    onset_reference_time: float = SCATTERING_REFERENCE_TIME
    continuity_mismatch: float = 0.0
    continuity_residuals: Tuple[Tuple[float, float], ...] = ()

    @property
    def max_continuity_residual(self) -> float:
        return max((value for _, value in self.continuity_residuals), default=0.0)


# ---------- PROBABILITY SPLIT AND MOMENTS ----------


def transmission_reflection(field: ComplexField, grid: Grid, split: float) -> Tuple[float, float]:
    """Probability beyond split (T) and the rest (R = 1 - T)."""
    if not grid.q_min < split < grid.q_max:
        raise ValidationError(f"split position {split!r} lies outside ({grid.q_min!r}, {grid.q_max!r})")

    density = np.abs(field.values) ** 2
    norm = float(np.sum(density))
    if norm == 0.0:
        raise ValidationError("cannot split an all-zero field")

    transmitted = float(np.sum(density[node_positions(grid) > split])) / norm
    return transmitted, 1.0 - transmitted


def momentum_density(field: ComplexField, grid: Grid) -> np.ndarray:
    """Im{psi* dpsi/dq} with a central difference; zero at the boundary nodes"""
    psi = field.values
    result = np.zeros(psi.shape)
    result[1:-1] = np.imag(np.conj(psi[1:-1]) * (psi[2:] - psi[:-2])) / (2.0 * grid.dq)
    return result


def expectation_values(field: ComplexField, grid: Grid) -> Tuple[float, float, float]:
    """Returns (<q>, <p>, sigma) of the field, normalised by its discrete norm."""
    norm = discrete_norm(field, grid)
    if norm == 0.0:
        raise ValidationError("expectation values of an all-zero field are undefined")

    q = node_positions(grid)
    density = np.abs(field.values) ** 2 * grid.dq / norm
    mean_q = float(np.sum(q * density))
    mean_p = float(np.sum(momentum_density(field, grid)) * grid.dq / norm)
    variance = float(np.sum((q - mean_q) ** 2 * density))
    return mean_q, mean_p, math.sqrt(max(variance, 0.0))


def width_law(gamma: float, t):
    """Width of a free Gaussian: sigma0 sqrt(1 + (t / (2 sigma0^2))^2), sigma0^2 = 1/(4 gamma)"""
    sigma0_sq = 1.0 / (4.0 * gamma)
    return np.sqrt(sigma0_sq) * np.sqrt(1.0 + (np.asarray(t) / (2.0 * sigma0_sq)) ** 2)


def mean_classical_force(field: ComplexField, grid: Grid, spec: PotentialSpec) -> float:
    density = np.abs(field.values) ** 2
    return float(np.sum(force_on_grid(spec, grid) * density) / np.sum(density))


# ---------- CONSISTENCY CHECKS ----------


def probability_current(field: ComplexField, grid: Grid) -> np.ndarray:
    """
    J = |psi|^2 arg(psi_{i+1} psi*_{i-1}) / (2 dq), read straight from psi.
    No unwrapping and no amplitude floor are involved, so agreement with R^2 v
    checks the polar decomposition.
    """
    psi = field.values
    result = np.zeros(psi.shape)
    result[1:-1] = (np.abs(psi[1:-1]) ** 2 * np.angle(psi[2:] * np.conj(psi[:-2]))) / (2.0 * grid.dq)
    return result


def continuity_check(snapshot: Snapshot, grid: Grid) -> float:
    """
    Largest |R^2 v - J| over nodes whose three-point stencil is above the floor,
    relative to the largest |J| there. This checks the unwrapped phase of one field
    and says nothing about its time evolution; see continuity_residual for that.
    """
    polar = snapshot.polar
    reliable = polar.reliable()
    stencil = np.zeros(reliable.shape, dtype=bool)
    stencil[1:-1] = reliable[:-2] & reliable[1:-1] & reliable[2:]
    if not stencil.any():
        return 0.0

    from_polar = polar.amplitude ** 2 * velocity_field(polar, grid)
    from_field = probability_current(snapshot.field, grid)
    mismatch = float(np.max(np.abs(from_polar[stencil] - from_field[stencil])))
    scale = float(np.max(np.abs(from_field[stencil])))
    return mismatch / scale if scale > 0.0 else mismatch


def bond_current(polar: PolarField, grid: Grid) -> np.ndarray:
    """Current through the n - 1 links between neighbouring nodes, R_i R_{i+1} sin(S_{i+1} - S_i) / dq"""
    amplitude, phase = polar.amplitude, polar.phase
    return amplitude[:-1] * amplitude[1:] * np.sin(phase[1:] - phase[:-1]) / grid.dq


def continuity_residual(before: ComplexField, after: ComplexField, grid: Grid) -> float:
    """
    ||drho/dt + dJ/dq|| / ||rho|| over the interior nodes for one time step.

    drho/dt is the finite difference of |psi|^2 between the two fields and J the
    bond current of their midpoint, taken from its polar form. A Crank-Nicolson
    step satisfies this to round-off and an explicit step to O(dt^2); a pair of
    fields not linked by the lattice Schrodinger equation leaves the divergence
    of its own current behind.
    """
    dt = after.time - before.time
    if not dt > 0.0:
        raise ValidationError(f"fields must be ordered in time (dt = {dt!r})")

    rho_before = np.abs(before.values) ** 2
    rho_after = np.abs(after.values) ** 2
    midpoint = ComplexField(values=0.5 * (before.values + after.values), time=before.time + 0.5 * dt)
    current = bond_current(polar_decompose(midpoint), grid)

    rate = (rho_after[1:-1] - rho_before[1:-1]) / dt
    divergence = (current[1:] - current[:-1]) / grid.dq
    scale = float(np.linalg.norm(rho_before))
    if scale == 0.0:
        raise ValidationError("continuity residual of an all-zero field is undefined")
    return float(np.linalg.norm(rate + divergence)) / scale


def continuity_residuals(snapshots: SnapshotSet, grid: Grid, spec: PotentialSpec,
                         scheme: str = IMPLICIT) -> Tuple[Tuple[float, float], ...]:
    """(time, residual) per snapshot, stepping each snapshot once more with the run's scheme"""
    results = []
    for snap in snapshots.snapshots:
        after = advance_field(snap.field, spec, grid, scheme)
        results.append((snap.time, continuity_residual(snap.field, after, grid)))
    return tuple(results)


def ehrenfest_residuals(snapshots: SnapshotSet, grid: Grid, spec: PotentialSpec) -> Tuple[float, float]:
    """
    (max |d<q>/dt - <p>|, max |d<p>/dt - <F_C>|) using centred differences over the
    snapshot times. NaN when fewer than three snapshots exist.
    """
    if len(snapshots.snapshots) < 3:
        return math.nan, math.nan

    times = snapshots.times
    moments = np.array([expectation_values(snap.field, grid)[:2] for snap in snapshots.snapshots])
    forces = np.array([mean_classical_force(snap.field, grid, spec) for snap in snapshots.snapshots])

    span = times[2:] - times[:-2]
    dq_dt = (moments[2:, 0] - moments[:-2, 0]) / span
    dp_dt = (moments[2:, 1] - moments[:-2, 1]) / span

    position_residual = float(np.max(np.abs(dq_dt - moments[1:-1, 1])))
    momentum_residual = float(np.max(np.abs(dp_dt - forces[1:-1])))
    return position_residual, momentum_residual


# ---------- ONSET OF THE BARRIER'S INFLUENCE ----------


def onset_detector(eckart_snapshots: SnapshotSet, eckart_ensemble: TrajectoryEnsemble,
                   free_snapshots: SnapshotSet, free_ensemble: TrajectoryEnsemble,
                   threshold: float = DEFAULT_ONSET_THRESHOLD, trajectory: int = 0) -> Optional[float]:
    """
    Earliest recorded time at which trajectory's quantum potential in the barrier run
    differs from the free run by more than threshold (relative). None when it never does.
    """
    if math.isnan(threshold) or threshold < 0.0:
        raise ValidationError(f"onset threshold must be non-negative (got {threshold!r})")

    if not np.array_equal(eckart_snapshots.times, free_snapshots.times):
        raise ValidationError("runs have different snapshot times")
    if eckart_snapshots.final.field.values.shape != free_snapshots.final.field.values.shape:
        raise ValidationError("runs use different grids")
    if not np.array_equal(eckart_ensemble.initial_positions, free_ensemble.initial_positions):
        raise ValidationError("runs use different ensembles")
    if not np.array_equal(eckart_ensemble.times, free_ensemble.times):
        raise ValidationError("runs recorded their ensembles at different times")
    if not 0 <= trajectory < eckart_ensemble.n_traj:
        raise ValidationError(f"trajectory index {trajectory} out of range")

    if math.isinf(threshold):
        return None

    barrier = eckart_ensemble.series(trajectory)["Q"]
    baseline = free_ensemble.series(trajectory)["Q"]
    deviation = np.abs(barrier - baseline)
    scale = np.maximum(np.abs(baseline), np.finfo(float).tiny)

    exceeded = np.flatnonzero(deviation > threshold * scale)
    if not exceeded.size:
        return None

    onset = float(eckart_ensemble.times[exceeded[0]])
    logger.info(f"Quantum potential of trajectory {trajectory} departs from the free run at t={onset!r}")
    return onset


def scattering_report(snapshots: SnapshotSet, grid: Grid, spec: PotentialSpec, split: float,
                      onset_time: Optional[float] = None,
                      onset_threshold: float = DEFAULT_ONSET_THRESHOLD,
                      scheme: str = IMPLICIT) -> ScatteringReport:
    final = snapshots.final
    transmission, reflection = transmission_reflection(final.field, grid, split)
    mismatch = max(continuity_check(snap, grid) for snap in snapshots.snapshots)
    residuals = continuity_residuals(snapshots, grid, spec, scheme)
    return ScatteringReport(
        transmission=transmission,
        reflection=reflection,
        split_position=float(split),
        evaluation_time=final.time,
        ehrenfest_residuals=ehrenfest_residuals(snapshots, grid, spec),
        onset_time=onset_time,
        onset_threshold=onset_threshold,
        continuity_mismatch=mismatch,
        continuity_residuals=residuals,
    )
