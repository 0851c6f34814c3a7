"""Exception taxonomy shared by the whole package.

The CLI maps these onto process exit codes, so keep the hierarchy flat and
stable: ConfigError -> 2, ValidityError -> 3, SimulationError -> 4.
"""

from __future__ import annotations


class EitmemError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(EitmemError):
    """Scenario file or parameter-set construction problem."""


class ValidityError(EitmemError):
    """Physics regime checks failed and the run was not forced."""


class SimulationError(EitmemError):
    """Numerical failure while integrating or post-processing."""


class DomainOverflowError(SimulationError):
    """Transported pulse support reached the edge of the periodic z-domain."""

    def __init__(self, t: float, message: str | None = None):
        self.t = t
        super().__init__(message or f"pulse support reached the domain edge at t={t:.6e} s")


class AmplificationOverflowError(SimulationError):
    """Modal gain exceeded the overflow guard (badly off-resonant scenario)."""


class QuadratureError(SimulationError):
    """Adaptive quadrature failed to meet its tolerance."""


class UntrackableFieldError(SimulationError):
    """Field amplitude everywhere below the tracking floor."""


class SingularParametersError(EitmemError):
    """Coefficient denominator collapsed (cannot occur in the high-density regime)."""


class InvalidComparisonError(EitmemError):
    """Reference and adiabatic runs do not describe the same scenario."""
