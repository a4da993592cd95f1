"""Exception hierarchy for twinbarrier."""

from __future__ import annotations


class TwinBarrierError(Exception):
    """Base class for all errors raised by this package."""


class EnergyOutOfRange(TwinBarrierError, ValueError):
    """Energy is not strictly between 0 and the barrier height."""


class WavenumberOutOfRange(TwinBarrierError, ValueError):
    """Wavenumber is not strictly between 0 and the barrier-top wavenumber."""


class NumericalOverflow(TwinBarrierError, ArithmeticError):
    """An exponent cap was exceeded while evaluating amplitudes."""


class SingularMatching(TwinBarrierError, ArithmeticError):
    """An interface matching system is too ill-conditioned to solve."""


class ResonanceSingularity(TwinBarrierError, ArithmeticError):
    """The opaque-limit amplitudes diverge at a resonance."""


class QuadratureNotConverged(TwinBarrierError, RuntimeError):
    """Grid doubling did not reach the requested tolerance."""


class DetectorOutOfGrid(TwinBarrierError, ValueError):
    """A detector position lies outside the spatial grid."""


class NoPeaksFound(TwinBarrierError, RuntimeError):
    """No local maximum cleared the prominence threshold."""


class DegenerateDistribution(TwinBarrierError, ArithmeticError):
    """A momentum distribution has zero total weight."""


class EmptyRegion(TwinBarrierError, ValueError):
    """A region holds (numerically) no probability."""


class ConfigError(TwinBarrierError):
    """Base class for scenario configuration problems."""


class ParseError(ConfigError, ValueError):
    """The configuration file could not be read or decoded."""


class ValidationError(ConfigError, ValueError):
    """A configuration value violates an invariant.

    Attributes:
        path: dotted field path of the offending value, e.g. ``"physical.L"``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
