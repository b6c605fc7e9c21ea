"""
Time propagation of the wavefunction.

Two schemes share one contract: the explicit forward-time centred-space update
(psi += dt [ (i/2) d2psi - i V psi ]) and a Crank-Nicolson update solved as a
tridiagonal system. Both keep psi = 0 at the two boundary nodes.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from potentials import PotentialSpec, potential_on_grid
from utils.errors import DivergenceError, SolverError, ValidationError
from utils.validators import validate_choice, validate_count
from wavepacket import ComplexField, Grid, PolarField, discrete_norm, make_field, polar_decompose

logger = logging.getLogger(__name__)

EXPLICIT = "explicit"
IMPLICIT = "implicit"
SCHEMES = (IMPLICIT, EXPLICIT)

# max|psi| beyond this multiple of its initial value means the explicit scheme blew up
DIVERGENCE_FACTOR = 1e3

NORM_TOLERANCE = 1e-4
EXPLICIT_DRIFT_LIMIT = 1e-3

StepObserver = Callable[[int, ComplexField], None]


@dataclass(frozen=True)
class PropagationSchedule:
    scheme: str = IMPLICIT
    snapshot_stride: int = 1
    norm_check_stride: int = 1


@dataclass(frozen=True)
class Snapshot:
    step: int
    time: float
    field: ComplexField
    polar: PolarField


@dataclass(frozen=True)
class SnapshotSet:
    snapshots: Tuple[Snapshot, ...]
    norm_history: Tuple[Tuple[float, float], ...]

    @property
    def times(self) -> np.ndarray:
        return np.array([snap.time for snap in self.snapshots])

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def max_norm_deviation(self) -> float:
        return max((abs(norm - 1.0) for _, norm in self.norm_history), default=0.0)


def make_schedule(scheme: str, snapshot_stride: int, norm_check_stride: int, n_steps: int) -> PropagationSchedule:
    """Validate strides against the number of steps (1 <= stride <= n_steps)."""
    is_valid, scheme_name, error = validate_choice(scheme, "scheme", SCHEMES)
    if not is_valid:
        raise ValidationError(error)
    strides = {}
    for name, raw in (("snapshot_stride", snapshot_stride), ("norm_check_stride", norm_check_stride)):
        is_valid, value, error = validate_count(raw, name, min_value=1, max_value=max(int(n_steps), 1))
        if not is_valid:
            raise ValidationError(error)
        strides[name] = value
    return PropagationSchedule(scheme=scheme_name, **strides)


def is_record_step(step: int, n_steps: int, stride: int) -> bool:
    """Steps stored in a SnapshotSet: every stride-th step plus the last one."""
    return step % stride == 0 or step == n_steps


# ---------- SINGLE STEPS ----------


def _laplacian(values: np.ndarray, dq: float) -> np.ndarray:
    """Second difference at the interior nodes"""
    return (values[2:] - 2.0 * values[1:-1] + values[:-2]) / dq ** 2


def step_ftcs(field: ComplexField, spec: PotentialSpec, grid: Grid,
              reference_max: Optional[float] = None) -> ComplexField:
    """
    One explicit step. Raises DivergenceError once max|psi| exceeds DIVERGENCE_FACTOR
    times reference_max, which defaults to max|psi| of the incoming field.
    """
    psi = field.values
    if reference_max is None:
        reference_max = float(np.max(np.abs(psi))) if psi.size else 0.0
    potential = potential_on_grid(spec, grid)

    updated = np.zeros_like(psi)
    updated[1:-1] = psi[1:-1] + grid.dt * (
        0.5j * _laplacian(psi, grid.dq) - 1j * potential[1:-1] * psi[1:-1]
    )

    peak = float(np.max(np.abs(updated)))
    if not np.isfinite(peak) or peak > DIVERGENCE_FACTOR * reference_max:
        raise DivergenceError(f"explicit scheme diverged: max|psi| = {peak:.3e} "
                              f"against reference {reference_max:.3e}")

    return make_field(updated, grid, time=field.time + grid.dt)


@lru_cache(maxsize=8)
def _crank_nicolson_factors(spec: PotentialSpec, grid: Grid):
    """
    LU factors of (1 + i dt/2 H) on the interior nodes, with
    H = -1/2 d2/dq2 + V, plus the diagonals of (1 - i dt/2 H).
    """
    potential = potential_on_grid(spec, grid)[1:-1]
    size = grid.n_points - 2
    kinetic = 1.0 / grid.dq ** 2
    h_diag = kinetic + potential
    h_off = np.full(size - 1, -0.5 * kinetic)

    half = 0.5j * grid.dt
    lhs = sparse.diags([half * h_off, 1.0 + half * h_diag, half * h_off], [-1, 0, 1],
                       shape=(size, size), format="csc", dtype=complex)
    try:
        factors = splu(lhs)
    except RuntimeError as e:
        raise SolverError(f"Crank-Nicolson factorisation failed for dt/dq^2 = {grid.dt / grid.dq ** 2:.3e}: {e}")

    return factors, 1.0 - half * h_diag, 0.5 * half * kinetic


def step_implicit(field: ComplexField, spec: PotentialSpec, grid: Grid) -> ComplexField:
    """One Crank-Nicolson step; unitary up to the solver tolerance."""
    factors, rhs_diag, rhs_off = _crank_nicolson_factors(spec, grid)
    psi = field.values

    interior = psi[1:-1]
    rhs = rhs_diag * interior
    rhs[1:] += rhs_off * interior[:-1]
    rhs[:-1] += rhs_off * interior[1:]

    updated = np.zeros_like(psi)
    updated[1:-1] = factors.solve(rhs)
    if not np.all(np.isfinite(updated)):
        raise SolverError("Crank-Nicolson solve produced non-finite values")

    return make_field(updated, grid, time=field.time + grid.dt)


def advance_field(field: ComplexField, spec: PotentialSpec, grid: Grid, scheme: str,
                  reference_max: Optional[float] = None) -> ComplexField:
    if scheme == EXPLICIT:
        return step_ftcs(field, spec, grid, reference_max=reference_max)
    return step_implicit(field, spec, grid)


# ---------- FULL RUN ----------


def propagate(initial: ComplexField, spec: PotentialSpec, grid: Grid, schedule: PropagationSchedule,
              n_steps: Optional[int] = None, observer: Optional[StepObserver] = None,
              amplitude_floor: Optional[float] = None) -> SnapshotSet:
    """
    Run the selected scheme for n_steps (grid.n_steps by default, 0 allowed) and
    collect snapshots with their polar fields plus the norm history.

    observer(step, field) is called at step 0 and after every step.
    """
    steps = grid.n_steps if n_steps is None else int(n_steps)
    if steps < 0:
        raise ValidationError("n_steps must be non-negative")

    initial_norm = discrete_norm(initial, grid)
    if abs(initial_norm - 1.0) > NORM_TOLERANCE:
        raise ValidationError(f"initial field is not normalized (norm = {initial_norm!r})")

    reference_max = float(np.max(np.abs(initial.values)))
    snapshots: List[Snapshot] = []
    norm_history: List[Tuple[float, float]] = []

    def record(step: int, field: ComplexField) -> None:
        if is_record_step(step, steps, schedule.snapshot_stride):
            snapshots.append(Snapshot(step=step, time=field.time, field=field,
                                      polar=polar_decompose(field, amplitude_floor)))
        if is_record_step(step, steps, schedule.norm_check_stride):
            norm_history.append((field.time, discrete_norm(field, grid)))

    logger.info(f"Propagating {steps} {schedule.scheme} steps (dt={grid.dt!r}, dq={grid.dq!r})")

    field = initial
    record(0, field)
    if observer is not None:
        observer(0, field)

    for index in range(1, steps + 1):
        try:
            field = advance_field(field, spec, grid, schedule.scheme, reference_max=reference_max)
        except DivergenceError as e:
            raise DivergenceError(str(e), step=index) from e

        # time from the step index, not by accumulation
        field = ComplexField(values=field.values, time=initial.time + index * grid.dt)
        record(index, field)
        if observer is not None:
            observer(index, field)

    result = SnapshotSet(snapshots=tuple(snapshots), norm_history=tuple(norm_history))
    drift = result.max_norm_deviation()
    if schedule.scheme == EXPLICIT and drift > EXPLICIT_DRIFT_LIMIT:
        logger.warning(f"Explicit scheme norm drift {drift:.3e} exceeds {EXPLICIT_DRIFT_LIMIT:.0e}")
    else:
        logger.info(f"Propagation finished, max norm deviation {drift:.3e}")

    return result
