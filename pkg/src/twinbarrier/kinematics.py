"""Potential geometry and per-momentum kinematics.

All functions broadcast over numpy arrays of energies or wavenumbers, so a
``KinematicState`` may hold scalars or arrays of equal shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnergyOutOfRange, WavenumberOutOfRange


@dataclass(frozen=True)
class PhysicalConfig:
    """Two rectangular barriers of common height ``V0``.

    The potential is ``V0`` on ``0 < x < a`` and on ``L < x < L + b`` and
    zero elsewhere.
    """

    V0: float
    a: float
    L: float
    b: float
    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m", "hbar", "V0", "a", "b"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not (np.isfinite(self.L) and self.L > self.a):
            raise ValueError(f"L must exceed a (got L={self.L!r}, a={self.a!r})")

    @property
    def w2(self) -> float:
        """Squared barrier-top wavenumber, ``2 m V0 / hbar**2``."""
        return 2.0 * self.m * self.V0 / self.hbar**2

    @property
    def k_top(self) -> float:
        """Wavenumber at which the energy reaches the barrier top."""
        return float(np.sqrt(self.w2))

    @property
    def well(self) -> float:
        """Width ``L - a`` of the free region between the barriers."""
        return self.L - self.a

    @property
    def interfaces(self) -> tuple[float, float, float, float]:
        return (0.0, self.a, self.L, self.L + self.b)

    def energy(self, k):
        return self.hbar**2 * np.asarray(k, dtype=float) ** 2 / (2.0 * self.m)


@dataclass(frozen=True)
class KinematicState:
    """Derived quantities at one wavenumber (or an array of them)."""

    k: np.ndarray | float
    E: np.ndarray | float
    chi: np.ndarray | float
    phi: np.ndarray | float
    w2: float


def _state(k, config: PhysicalConfig) -> KinematicState:
    k = np.asarray(k, dtype=float)
    chi = np.sqrt(np.maximum(config.w2 - k * k, 0.0))
    phi = np.arctan2(chi, k)
    E = config.energy(k)
    if k.ndim == 0:
        k, E, chi, phi = float(k), float(E), float(chi), float(phi)
    return KinematicState(k=k, E=E, chi=chi, phi=phi, w2=config.w2)


def kinematics_from_energy(E, config: PhysicalConfig) -> KinematicState:
    """Kinematics for energies strictly inside ``(0, V0)``."""
    E_arr = np.asarray(E, dtype=float)
    if np.any(~np.isfinite(E_arr)) or np.any(E_arr <= 0) or np.any(E_arr >= config.V0):
        raise EnergyOutOfRange(f"energy must satisfy 0 < E < V0={config.V0}, got {E!r}")
    k = np.sqrt(2.0 * config.m * E_arr) / config.hbar
    chi = np.sqrt(2.0 * config.m * (config.V0 - E_arr)) / config.hbar
    phi = np.arctan2(chi, k)
    if E_arr.ndim == 0:
        return KinematicState(float(k), float(E_arr), float(chi), float(phi), config.w2)
    return KinematicState(k, E_arr, chi, phi, config.w2)


def kinematics_from_wavenumber(k, config: PhysicalConfig) -> KinematicState:
    """Kinematics for wavenumbers strictly inside ``(0, k_top)``."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k_arr)) or np.any(k_arr <= 0) or np.any(k_arr >= config.k_top):
        raise WavenumberOutOfRange(
            f"wavenumber must satisfy 0 < k < {config.k_top}, got {k!r}"
        )
    return _state(k_arr, config)


def hartman_delay_length(state: KinematicState):
    """Magnitude of ``2 dphi/dk``, i.e. the opaque-barrier delay length ``2/chi``.

    Because ``k**2 + chi**2`` is fixed, ``dphi/dk = -1/chi``; the sign is
    dropped so the result can be used directly as a positive delay.
    """
    return 2.0 / state.chi


def delay_time(state: KinematicState, config: PhysicalConfig):
    """Hartman delay expressed as a time, ``(m / hbar k) * 2/chi``."""
    return config.m / (config.hbar * np.asarray(state.k)) * hartman_delay_length(state)
