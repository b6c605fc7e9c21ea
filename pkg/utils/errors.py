"""
Exception hierarchy shared by the simulation modules, the CLI and the results service.
The CLI maps ValidationError to exit status 1 and NumericalError to exit status 2.
"""
from typing import Optional


class SimulationError(Exception):
    """Base class for every error raised on purpose by this package"""


class ValidationError(SimulationError, ValueError):
    """Bad input: grid parameters, packet parameters, config values, output directory"""


class ConfigError(ValidationError):
    """A config document that does not parse or names an invalid value"""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)


class RunLockedError(ValidationError):
    """Another run already owns the output directory"""


class NumericalError(SimulationError, ArithmeticError):
    """The numerics went somewhere they must not go"""


class DivergenceError(NumericalError):
    """Explicit-scheme blow-up, reported with the step at which it was detected"""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class SolverError(NumericalError):
    """Tridiagonal factorisation or solve failed"""


class TrajectoryEscapeError(NumericalError):
    """A trajectory left the open interval (q_min, q_max)"""

    def __init__(self, index: int, time: float, position: float):
        self.index = index
        self.time = time
        self.position = position
        super().__init__(f"trajectory {index} left the grid at t={time!r} (q={position!r})")


class StarvedRegionError(NumericalError):
    """A trajectory sampled a node where the amplitude is below the floor"""

    def __init__(self, index: int, time: float):
        self.index = index
        self.time = time
        super().__init__(f"trajectory {index} entered a starved region at t={time!r}")


class TrajectoryCrossingError(NumericalError):
    """Two trajectories of the same wavefunction swapped order"""

    def __init__(self, index: int, time: float):
        self.index = index
        self.time = time
        super().__init__(f"trajectories {index} and {index + 1} crossed at t={time!r}")
