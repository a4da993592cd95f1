"""Multiple-reflection expansion of the transmitted amplitude.

Expanding the shared denominator ``1 - ratio`` as a geometric series splits
the transmitted wave into terms ``prefactor * ratio**(n-1)``: term ``n`` has
made ``n - 1`` extra round trips between the barriers. Each term is a
separate wave packet whose peak the stationary phase method can locate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResonanceSingularity, WavenumberOutOfRange
from .kinematics import KinematicState, PhysicalConfig, hartman_delay_length, kinematics_from_wavenumber
from .scattering import ScatteringSolution, _squeeze, sinh_factors

RESONANCE_THRESHOLD = 0.1
SINGULAR_PROXIMITY = 1e-12


@dataclass(frozen=True)
class SeriesDecomposition:
    """Geometric decomposition of the transmitted amplitude.

    ``terms[n - 1]`` is the amplitude of the n-th transmitted peak.
    """

    ratio: complex
    prefactor: complex
    terms: np.ndarray
    n_terms: int

    def partial_sum(self, N: int | None = None) -> complex:
        N = self.n_terms if N is None else N
        return complex(np.sum(self.terms[:N]))

    def tail_bound(self, N: int) -> float:
        return geometric_tail_bound(self.prefactor, self.ratio, N)


@dataclass(frozen=True)
class ExitTimePrediction:
    """Stationary-phase exit time of the n-th transmitted peak."""

    n: int
    k_tilde: float
    t_n: float
    phase_fn: str


def _check_index(n):
    if int(n) != n or n < 1:
        raise IndexError(f"series index must be an integer >= 1, got {n!r}")
    return int(n)


def series_ratio(state: KinematicState, config: PhysicalConfig):
    """Round-trip factor ``sinh(chi a) sinh(chi b) / [sinh(chi a + 2i phi) sinh(chi b + 2i phi)] e^{2ik(L-a)}``."""
    fa = sinh_factors(np.asarray(state.chi) * config.a, state.phi)
    fb = sinh_factors(np.asarray(state.chi) * config.b, state.phi)
    return _squeeze(fa.rho * fb.rho * np.exp(2j * np.asarray(state.k) * config.well))


def series_prefactor(state: KinematicState, config: PhysicalConfig):
    """n-independent factor: the transmitted amplitude with the denominator set to 1."""
    k, chi = np.asarray(state.k), np.asarray(state.chi)
    fa = sinh_factors(chi * config.a, state.phi)
    fb = sinh_factors(chi * config.b, state.phi)
    pre = 2j * chi * k / state.w2
    return _squeeze(pre**2 * np.exp(-1j * k * (config.a + config.b)) * fa.inv * fb.inv)


def transmitted_series_term(state: KinematicState, config: PhysicalConfig, n: int):
    n = _check_index(n)
    return _squeeze(
        np.asarray(series_prefactor(state, config))
        * np.asarray(series_ratio(state, config)) ** (n - 1)
    )


def transmitted_partial_sum(state: KinematicState, config: PhysicalConfig, N: int):
    """Sum of the first ``N`` transmitted terms, in closed geometric form.

    ``prefactor * (1 - ratio**N) / (1 - ratio)`` is used rather than a loop
    so large ``N`` costs nothing; it is algebraically identical.
    """
    N = _check_index(N)
    r = np.asarray(series_ratio(state, config))
    pre = np.asarray(series_prefactor(state, config))
    return _squeeze(pre * (1.0 - r**N) / (1.0 - r))


def geometric_tail_bound(prefactor, ratio, N: int):
    """Upper bound ``|prefactor| |ratio|^N / (1 - |ratio|)`` on the truncation error."""
    q = np.abs(ratio)
    return np.abs(prefactor) * q**N / (1.0 - q)


def series_decomposition(
    state: KinematicState, config: PhysicalConfig, n_terms: int
) -> SeriesDecomposition:
    n_terms = _check_index(n_terms)
    ratio = complex(series_ratio(state, config))
    prefactor = complex(series_prefactor(state, config))
    terms = prefactor * ratio ** np.arange(n_terms)
    return SeriesDecomposition(ratio=ratio, prefactor=prefactor, terms=terms, n_terms=n_terms)


def resonance_proximity(state: KinematicState, config: PhysicalConfig):
    """``|sin(2 phi - k (L - a))|``; zero exactly on an opaque-limit resonance."""
    value = np.abs(np.sin(2 * np.asarray(state.phi) - np.asarray(state.k) * config.well))
    return float(value) if value.ndim == 0 else value


def is_near_resonance(state, config, threshold: float = RESONANCE_THRESHOLD):
    return resonance_proximity(state, config) < threshold


def opaque_amplitudes(state: KinematicState, config: PhysicalConfig) -> ScatteringSolution:
    """Leading-order amplitudes for ``chi a, chi b >> 1``.

    ``denom`` holds the matching opaque-limit denominator
    ``1 - e^{2i(k(L-a) - 2 phi)}``.

    Raises:
        ResonanceSingularity: where ``|sin(2 phi - k(L-a))| < 1e-12``.
    """
    k, chi, phi = np.asarray(state.k), np.asarray(state.chi), np.asarray(state.phi)
    a, L, b = config.a, config.L, config.b
    s = np.sin(2 * phi - k * (L - a))
    if np.any(np.abs(s) < SINGULAR_PROXIMITY):
        raise ResonanceSingularity("opaque-limit amplitudes diverge at resonance")
    c = 2 * chi * k / state.w2
    return ScatteringSolution(
        a1r=_squeeze(np.exp(-2j * phi)),
        a1t=_squeeze(c * np.exp(-chi * a - 1j * k * L) / s),
        a1t_a2r=_squeeze(c * np.exp(-chi * a + 1j * k * L - 2j * phi) / s),
        a1t_a2t=_squeeze(
            2j * c**2 * np.exp(-chi * (a + b) - 1j * k * (L + b) - 2j * phi) / s
        ),
        denom=_squeeze(1.0 - np.exp(2j * (k * (L - a) - 2 * phi))),
    )


def barrier_phase(opacity, phi):
    """``arctan[tan(2 phi) coth(opacity)]`` on the branch continuous in energy.

    Equal to ``arg sinh(opacity + 2i phi)``; it lies in ``(0, pi)`` and
    passes smoothly through ``pi/2`` where ``2 phi`` does.
    """
    phi = np.asarray(phi)
    return np.arctan2(np.sin(2 * phi), np.tanh(opacity) * np.cos(2 * phi))


def round_trip_phase(state: KinematicState, config: PhysicalConfig):
    """Phase added by one extra round trip, ``2k(L-a)`` minus both barrier phases."""
    k, chi, phi = np.asarray(state.k), np.asarray(state.chi), np.asarray(state.phi)
    return (
        2 * k * config.well
        - barrier_phase(chi * config.a, phi)
        - barrier_phase(chi * config.b, phi)
    )


def transmitted_phase(n: int, x, t, state: KinematicState, config: PhysicalConfig):
    """Total phase of the n-th transmitted term times ``e^{i(kx - Et/hbar)}``.

    The constant ``pi`` carried by ``(2i)**2`` in the prefactor is omitted;
    it does not move any stationary point.
    """
    n = _check_index(n)
    k, chi, phi = np.asarray(state.k), np.asarray(state.chi), np.asarray(state.phi)
    a, b = config.a, config.b
    first = (
        k * np.asarray(x)
        - np.asarray(state.E) * np.asarray(t) / config.hbar
        - k * (a + b)
        - barrier_phase(chi * a, phi)
        - barrier_phase(chi * b, phi)
    )
    return first + (n - 1) * round_trip_phase(state, config)


def transmitted_phase_opaque(n: int, x, t, state: KinematicState, config: PhysicalConfig):
    """Opaque-limit phase, where each barrier phase collapses to ``2 phi``."""
    n = _check_index(n)
    k, phi = np.asarray(state.k), np.asarray(state.phi)
    a, b = config.a, config.b
    return (
        k * np.asarray(x)
        - np.asarray(state.E) * np.asarray(t) / config.hbar
        - k * (a + b)
        - 4 * phi
        + (n - 1) * (2 * k * config.well - 4 * phi)
    )


def spm_exit_time(n: int, k_tilde: float, config: PhysicalConfig) -> float:
    """Stationary-phase time at which the n-th transmitted peak leaves ``x = L + b``.

    ``t_n = m/(hbar k) [(2n - 1)(L - a) + 2n tau]`` with ``tau = 2/chi`` at
    ``k_tilde``. Time zero is when the incident peak would reach ``x = 0``.
    """
    n = _check_index(n)
    state = kinematics_from_wavenumber(k_tilde, config)
    tau = hartman_delay_length(state)
    return float(
        config.m / (config.hbar * k_tilde) * ((2 * n - 1) * config.well + 2 * n * tau)
    )


def spm_peak_spacing(k_tilde: float, config: PhysicalConfig) -> float:
    """Constant gap ``t_{n+1} - t_n`` between successive peaks."""
    state = kinematics_from_wavenumber(k_tilde, config)
    tau = hartman_delay_length(state)
    return float(config.m / (config.hbar * k_tilde) * (2 * config.well + 2 * tau))


def exit_time_predictions(
    k_tilde: float, config: PhysicalConfig, n_peaks: int = 5
) -> list[ExitTimePrediction]:
    if not 0 < k_tilde < config.k_top:
        raise WavenumberOutOfRange(f"k_tilde={k_tilde!r} outside (0, {config.k_top})")
    return [
        ExitTimePrediction(n=n, k_tilde=float(k_tilde), t_n=spm_exit_time(n, k_tilde, config), phase_fn="opaque")
        for n in range(1, _check_index(n_peaks) + 1)
    ]


def spm_exit_time_exact(n: int, k_tilde: float, config: PhysicalConfig, rel_step: float = 1e-6) -> float:
    """Exit time from the stationary point of the exact (non-opaque) phase.

    Same time origin as :func:`spm_exit_time`; the k-derivative of the
    amplitude phase is taken by central differences.
    """
    n = _check_index(n)

    def amplitude_phase(k):
        state = kinematics_from_wavenumber(k, config)
        return transmitted_phase(n, 0.0, 0.0, state, config)

    h = rel_step * k_tilde
    dtheta = (amplitude_phase(k_tilde + h) - amplitude_phase(k_tilde - h)) / (2 * h)
    return float(config.m / (config.hbar * k_tilde) * (config.L + config.b + dtheta))
