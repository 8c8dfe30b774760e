"""Exception hierarchy; each family carries the CLI exit code it maps to"""
from typing import Optional


class MsjLabError(Exception):
    """Base class for all msjlab errors"""

    exit_code: int = 2

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(MsjLabError):
    """Invalid configuration, malformed input or bad command-line values"""

    exit_code = 1


class ComputeError(MsjLabError):
    """A computation could not be carried out"""

    exit_code = 2


class CapacityExceededError(ComputeError):
    """State-space or vector materialization cap exceeded"""

    def __init__(self, detail: str, estimate: Optional[int] = None):
        super().__init__(detail)
        self.estimate = estimate


class SolverError(ComputeError):
    """Linear solve failed or did not reach the requested residual"""

    def __init__(self, detail: str, residual: Optional[float] = None):
        super().__init__(detail if residual is None else f"{detail} (residual {residual:.3e})")
        self.residual = residual


class InstabilityError(ComputeError):
    """Simulated queue grew past the configured bound"""


class UnsupportedRegimeError(ComputeError):
    """No single leading-order formula exists for the requested regime"""
