"""
External classical potentials: the free particle and the Eckart barrier.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from utils.errors import ValidationError
from utils.validators import validate_float
from wavepacket import Grid, node_positions

logger = logging.getLogger(__name__)

FREE = "free"
ECKART = "eckart"
POTENTIAL_KINDS = (FREE, ECKART)


@dataclass(frozen=True)
class PotentialSpec:
    """Tagged potential description. V0, beta and qv only mean something for the Eckart barrier."""
    kind: str = FREE
    V0: float = 0.0
    beta: float = 0.0
    qv: float = 0.0

    @property
    def is_free(self) -> bool:
        return self.kind == FREE


def free_potential() -> PotentialSpec:
    return PotentialSpec(kind=FREE)


def eckart_potential(V0: float, beta: float, qv: float = 0.0) -> PotentialSpec:
    """V(q) = V0 e^x / (1 + e^x)^2 with x = beta (q - qv); peak height V0/4 at q = qv."""
    checks = [
        validate_float(V0, "V0", min_value=0.0, exclusive_min=True),
        validate_float(beta, "beta", min_value=0.0, exclusive_min=True),
        validate_float(qv, "qv"),
    ]
    for is_valid, _, error in checks:
        if not is_valid:
            raise ValidationError(error)
    return PotentialSpec(kind=ECKART, V0=checks[0][1], beta=checks[1][1], qv=checks[2][1])


def _decay(spec: PotentialSpec, q):
    """(a, x) with x = beta (q - qv) and a = e^{-|x|} in (0, 1]"""
    x = spec.beta * (np.asarray(q, dtype=float) - spec.qv)
    return np.exp(-np.abs(x)), x


def eval_potential(spec: PotentialSpec, q):
    """
    Potential energy at q (scalar or array).
    The Eckart form e^x/(1 + e^x)^2 is even in x and equals a/(1 + a)^2 with
    a = e^{-|x|}, which never overflows.
    """
    if spec.is_free:
        return np.zeros_like(np.asarray(q, dtype=float)) if np.ndim(q) else 0.0
    a, _ = _decay(spec, q)
    value = spec.V0 * a / (1.0 + a) ** 2
    return value if np.ndim(value) else float(value)


def classical_force(spec: PotentialSpec, q):
    """
    Analytic F_C = -dV/dq.
    For Eckart, -V0 beta e^x (1 - e^x)/(1 + e^x)^3, evaluated as
    sign(x) V0 beta a (1 - a)/(1 + a)^3 with a = e^{-|x|}.
    """
    if spec.is_free:
        return np.zeros_like(np.asarray(q, dtype=float)) if np.ndim(q) else 0.0
    a, x = _decay(spec, q)
    value = np.sign(x) * spec.V0 * spec.beta * a * (1.0 - a) / (1.0 + a) ** 3
    return value if np.ndim(value) else float(value)


@lru_cache(maxsize=16)
def potential_on_grid(spec: PotentialSpec, grid: Grid) -> np.ndarray:
    """V at every node of the grid; read-only and cached per (spec, grid)"""
    values = np.asarray(eval_potential(spec, node_positions(grid)), dtype=float)
    values.setflags(write=False)
    return values


@lru_cache(maxsize=16)
def force_on_grid(spec: PotentialSpec, grid: Grid) -> np.ndarray:
    values = np.asarray(classical_force(spec, node_positions(grid)), dtype=float)
    values.setflags(write=False)
    return values


def describe(spec: PotentialSpec) -> str:
    if spec.is_free:
        return "free"
    return f"eckart(V0={spec.V0!r}, beta={spec.beta!r}, qv={spec.qv!r})"
