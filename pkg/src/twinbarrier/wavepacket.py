"""Time-dependent wave packets built from the stationary scattering states.

A packet is the momentum superposition

    Psi(x, t) = (2 pi)^{-1/2} \\int g(k) e^{-i k x0} psi_k(x) e^{-i E(k) t / hbar} dk

over a truncated, strictly sub-barrier window, evaluated with composite
Simpson quadrature whose node count doubles until the field settles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import find_peaks

from .errors import (
    DegenerateDistribution,
    DetectorOutOfGrid,
    EmptyRegion,
    NoPeaksFound,
    QuadratureNotConverged,
)
from .kinematics import PhysicalConfig, kinematics_from_wavenumber
from .scattering import (
    REGIONS,
    exact_amplitudes,
    interior_coefficients,
    stationary_wavefunction,
)
from .series import series_prefactor, series_ratio

log = logging.getLogger(__name__)

SHAPES = ("gaussian", "raised_cosine")
SUB_BARRIER_MARGIN = 1e-6
MIN_NODES = 65
MAX_NODES = 2**16 + 1
DEFAULT_PROMINENCE = 0.05

# std of cos^4(pi u / 2) on [-1, 1]; converts the raised-cosine half-width to sigma
_RAISED_COSINE_STD = np.sqrt(1.0 / 3.0 - 5.0 / (2.0 * np.pi**2))

COMPONENTS = {
    "reflected": 1,
    "intermediate_forward": 3,
    "intermediate_backward": 3,
    "transmitted": 5,
}


@dataclass(frozen=True)
class ModulationSpec:
    """Momentum envelope of the incident packet.

    ``sigma`` is the standard deviation of ``|g(k)|^2`` (so the launched
    packet has position spread ``1/(2 sigma)`` for the Gaussian shape).
    ``x0`` is the launch centre at ``t = 0``; ``None`` means ``-4/(2 sigma)``.
    """

    k0: float
    sigma: float
    k_min: float
    k_max: float
    shape: str = "gaussian"
    x0: float | None = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not 0 < self.k_min < self.k0 < self.k_max:
            raise ValueError(
                f"need 0 < k_min < k0 < k_max, got {self.k_min!r}, {self.k0!r}, {self.k_max!r}"
            )

    @classmethod
    def around(cls, k0, sigma, config: PhysicalConfig, n_sigma=6.0, shape="gaussian", x0=None):
        """Window ``k0 +- n_sigma*sigma`` clipped to the sub-barrier range."""
        k_hi = (1 - SUB_BARRIER_MARGIN) * config.k_top
        return cls(
            k0=k0,
            sigma=sigma,
            k_min=max(k0 - n_sigma * sigma, 1e-3 * k0),
            k_max=min(k0 + n_sigma * sigma, k_hi),
            shape=shape,
            x0=x0,
        )

    @property
    def launch_x(self) -> float:
        return -4.0 / (2.0 * self.sigma) if self.x0 is None else self.x0

    def check_sub_barrier(self, config: PhysicalConfig):
        limit = (1 - SUB_BARRIER_MARGIN) * config.k_top
        if self.k_max > limit:
            raise ValueError(f"k_max={self.k_max!r} exceeds the sub-barrier limit {limit!r}")


def _raw_envelope(k, spec: ModulationSpec):
    k = np.asarray(k, dtype=float)
    if spec.shape == "gaussian":
        g = np.exp(-((k - spec.k0) ** 2) / (4 * spec.sigma**2))
    else:
        half = spec.sigma / _RAISED_COSINE_STD
        u = np.clip((k - spec.k0) / half, -1.0, 1.0)
        g = 0.5 * (1.0 + np.cos(np.pi * u))
    return np.where((k >= spec.k_min) & (k <= spec.k_max), g, 0.0)


@lru_cache(maxsize=64)
def _envelope_norm(spec: ModulationSpec) -> float:
    k = np.linspace(spec.k_min, spec.k_max, 2**15 + 1)
    w = simpson_weights(k.size, k[1] - k[0])
    return float(np.sqrt(np.sum(w * _raw_envelope(k, spec) ** 2)))


def modulation_amplitude(k, spec: ModulationSpec):
    """Real, non-negative envelope ``g(k)`` with ``int |g|^2 dk = 1``; zero outside the window."""
    return _raw_envelope(k, spec) / _envelope_norm(spec)


def simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson's rule needs an odd node count >= 3, got {n}")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _odd(n: int) -> int:
    n = max(int(n), MIN_NODES)
    return n if n % 2 else n + 1


# -- packet synthesis -------------------------------------------------------


@dataclass(frozen=True)
class PacketField:
    """Sampled field ``values[i_t, i_x] = Psi(x_grid[i_x], t_grid[i_t])``."""

    x_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    mode: str
    n_k: int = 0
    quadrature_error: float = 0.0

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def parse_mode(mode: str) -> tuple[str, int | None]:
    """Split ``"series_term:3"`` style mode strings into ``(kind, index)``."""
    kind, _, index = mode.partition(":")
    if kind in ("series_term", "partial_sum"):
        if not index.isdigit() or int(index) < 1:
            raise ValueError(f"mode {mode!r} needs a positive integer index, e.g. {kind}:3")
        return kind, int(index)
    if index:
        raise ValueError(f"mode {mode!r} takes no index")
    if kind == "exact" or kind in COMPONENTS:
        return kind, None
    raise ValueError(f"unknown mode {mode!r}")


def mode_table(mode: str, k: np.ndarray, x: np.ndarray, config: PhysicalConfig) -> np.ndarray:
    """Stationary amplitude ``psi_k(x)`` of the selected mode, shape ``(n_x, n_k)``.

    Series modes and directional components are single plane waves kept only
    inside their own region (region 5 for the series) and zero elsewhere.
    """
    kind, index = parse_mode(mode)
    state = kinematics_from_wavenumber(k, config)
    xs = np.asarray(x, dtype=float)[:, None]
    kk = np.asarray(k)[None, :]
    if kind == "exact":
        solution = exact_amplitudes(state, config)
        interior = interior_coefficients(state, config, solution)
        return stationary_wavefunction(xs, state, config, solution, interior)

    if kind in ("series_term", "partial_sum"):
        r = np.asarray(series_ratio(state, config))
        pre = np.asarray(series_prefactor(state, config))
        amp = pre * r ** (index - 1) if kind == "series_term" else pre * (1 - r**index) / (1 - r)
        inside = xs >= config.L + config.b
        return np.where(inside, amp[None, :] * np.exp(1j * kk * xs), 0.0)

    solution = exact_amplitudes(state, config)
    lo, hi = {1: (-np.inf, 0.0), 3: (config.a, config.L), 5: (config.L + config.b, np.inf)}[
        COMPONENTS[kind]
    ]
    inside = (xs >= lo) & (xs < hi)
    if kind == "reflected":
        wave = np.asarray(solution.a1r)[None, :] * np.exp(-1j * kk * xs)
    elif kind == "intermediate_forward":
        wave = np.asarray(solution.a1t)[None, :] * np.exp(1j * kk * xs)
    elif kind == "intermediate_backward":
        wave = np.asarray(solution.a1t_a2r)[None, :] * np.exp(-1j * kk * xs)
    else:
        wave = np.asarray(solution.a1t_a2t)[None, :] * np.exp(1j * kk * xs)
    return np.where(inside, wave, 0.0)


def _field_at(spec, config, mode, x_grid, t_grid, n_k, chunk=1024):
    k = np.linspace(spec.k_min, spec.k_max, n_k)
    weights = simpson_weights(n_k, k[1] - k[0])
    coef = weights * modulation_amplitude(k, spec) * np.exp(-1j * k * spec.launch_x)
    coef /= np.sqrt(2 * np.pi)
    E = config.energy(k)
    out = np.zeros((len(t_grid), len(x_grid)), dtype=complex)
    for start in range(0, n_k, chunk):
        sl = slice(start, start + chunk)
        table = mode_table(mode, k[sl], x_grid, config) * coef[sl][None, :]
        evolve = np.exp(-1j * np.outer(t_grid, E[sl]) / config.hbar)
        out += evolve @ table.T
    return out


def synthesize_packet(
    spec: ModulationSpec,
    config: PhysicalConfig,
    mode: str = "exact",
    x_grid=None,
    t_grid=None,
    n_k: int = 257,
    rtol: float = 1e-6,
    max_nodes: int = MAX_NODES,
) -> PacketField:
    """Superpose stationary states into ``Psi(x, t)`` on the given grids.

    The k-node count starts at ``n_k`` and doubles until the relative L2
    change of the whole field falls below ``rtol``.

    Raises:
        QuadratureNotConverged: if ``max_nodes`` is reached first.
    """
    spec.check_sub_barrier(config)
    parse_mode(mode)
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    for name, grid in (("x_grid", x_grid), ("t_grid", t_grid)):
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError(f"{name} must be strictly increasing")

    n = _odd(n_k)
    previous = _field_at(spec, config, mode, x_grid, t_grid, n)
    change = float("nan")
    while True:
        n_next = 2 * n - 1
        if n_next > max_nodes:
            raise QuadratureNotConverged(
                f"k-quadrature did not reach rtol={rtol:g} within {max_nodes} nodes"
                f" (last relative change {change:.3g})"
            )
        current = _field_at(spec, config, mode, x_grid, t_grid, n_next)
        scale = np.linalg.norm(current)
        change = np.linalg.norm(current - previous) / scale if scale > 0 else 0.0
        log.debug("quadrature %d -> %d nodes, relative change %.3g", n, n_next, change)
        if change < rtol:
            return PacketField(x_grid, t_grid, current, mode, n_next, float(change))
        previous, n = current, n_next


# -- detector series and peaks ----------------------------------------------


@dataclass(frozen=True)
class DetectorSeries:
    detector_x: float
    times: np.ndarray
    density: np.ndarray


@dataclass(frozen=True)
class PeakReport:
    """Arrival peaks at a detector plus whole-signal arrival statistics."""

    detector_x: float
    peak_times: np.ndarray
    peak_heights: np.ndarray
    prominences: np.ndarray
    mean_arrival: float
    width: float
    extras: dict = field(default_factory=dict)

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.peak_times)


def probability_time_series(packet: PacketField, detector_x: float) -> DetectorSeries:
    """``|Psi(detector_x, t)|^2`` on the packet's time grid.

    Off-grid detectors are linearly interpolated in x between the two
    neighbouring columns of the density.
    """
    x = packet.x_grid
    if not x[0] <= detector_x <= x[-1]:
        raise DetectorOutOfGrid(f"detector {detector_x!r} outside [{x[0]!r}, {x[-1]!r}]")
    density = packet.density
    hit = np.flatnonzero(x == detector_x)
    if hit.size:
        series = density[:, hit[0]]
    else:
        j = int(np.searchsorted(x, detector_x)) - 1
        frac = (detector_x - x[j]) / (x[j + 1] - x[j])
        series = (1 - frac) * density[:, j] + frac * density[:, j + 1]
    return DetectorSeries(float(detector_x), packet.t_grid.copy(), np.asarray(series))


def _vertex(t, y):
    """Vertex of the parabola through three (possibly unevenly spaced) samples."""
    (t0, t1, t2), (y0, y1, y2) = t, y
    d0, d2 = t0 - t1, t2 - t1
    denom = d0 * d2 * (d0 - d2)
    A = (d2 * (y0 - y1) - d0 * (y2 - y1)) / denom
    B = (d0**2 * (y2 - y1) - d2**2 * (y0 - y1)) / denom
    if A >= 0:
        return t1, y1
    shift = -B / (2 * A)
    return t1 + shift, y1 + B * shift + A * shift**2


def arrival_moments(times, density) -> tuple[float, float]:
    """Probability-weighted mean arrival time and RMS spread of a series."""
    total = np.trapezoid(density, times)
    if not total > 0:
        raise NoPeaksFound("detector series carries no probability")
    mean = np.trapezoid(times * density, times) / total
    var = np.trapezoid((times - mean) ** 2 * density, times) / total
    return float(mean), float(np.sqrt(var))


def detect_peaks(series: DetectorSeries, min_prominence: float = DEFAULT_PROMINENCE) -> PeakReport:
    """Local maxima whose prominence exceeds ``min_prominence`` of the global maximum.

    Peak times and heights are refined with a three-point parabola.
    """
    if not 0 < min_prominence < 1:
        raise ValueError(f"min_prominence must lie in (0, 1), got {min_prominence!r}")
    t, y = np.asarray(series.times), np.asarray(series.density)
    if y.size == 0:
        raise NoPeaksFound("empty detector series")
    top = float(np.max(y))
    if not top > 0:
        raise NoPeaksFound("detector series is identically zero")
    idx, props = find_peaks(y, prominence=min_prominence * top)
    if idx.size == 0:
        raise NoPeaksFound(
            f"no peak with prominence >= {min_prominence:g} of the maximum at x={series.detector_x:g}"
        )
    refined = [_vertex(t[i - 1 : i + 2], y[i - 1 : i + 2]) for i in idx]
    mean, width = arrival_moments(t, y)
    return PeakReport(
        detector_x=series.detector_x,
        peak_times=np.array([r[0] for r in refined]),
        peak_heights=np.array([r[1] for r in refined]),
        prominences=np.asarray(props["prominences"]),
        mean_arrival=mean,
        width=width,
    )


# -- momentum filter --------------------------------------------------------

CHANNELS = ("transmitted", "reflected", "intermediate")


def momentum_distribution(spec, config, channel="transmitted", n_k=4097):
    """k-grid, Simpson weights and weight ``|A(k) g(k)|^2`` of an outgoing channel."""
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")
    n_k = _odd(n_k)
    k = np.linspace(spec.k_min, spec.k_max, n_k)
    solution = exact_amplitudes(kinematics_from_wavenumber(k, config), config)
    amp = {
        "transmitted": solution.a1t_a2t,
        "reflected": solution.a1r,
        "intermediate": solution.a1t,
    }[channel]
    weight = np.abs(np.asarray(amp) * modulation_amplitude(k, spec)) ** 2
    return k, simpson_weights(n_k, k[1] - k[0]), weight


def effective_momentum(
    spec: ModulationSpec,
    config: PhysicalConfig,
    method: str = "mean",
    channel: str = "transmitted",
    n_k: int = 4097,
) -> float:
    """Momentum carried by an outgoing channel after the barriers' filtering.

    ``method="peak"`` is the argmax of ``|A g|`` (parabola-refined);
    ``method="mean"`` is the ``|A g|^2``-weighted average.

    Raises:
        DegenerateDistribution: if the weight underflows to zero.
    """
    k, w, weight = momentum_distribution(spec, config, channel, n_k)
    total = float(np.sum(w * weight))
    if not (np.isfinite(total) and total > 0):
        raise DegenerateDistribution(f"{channel} momentum weight vanishes across the window")
    if method == "mean":
        return float(np.sum(w * weight * k) / total)
    if method == "peak":
        i = int(np.argmax(weight))
        if 0 < i < k.size - 1:
            return float(_vertex(k[i - 1 : i + 2], weight[i - 1 : i + 2])[0])
        return float(k[i])
    raise ValueError(f"method must be 'peak' or 'mean', got {method!r}")


def momentum_spread(spec, config, channel="transmitted", n_k=4097) -> float:
    """RMS width of the channel's momentum distribution."""
    k, w, weight = momentum_distribution(spec, config, channel, n_k)
    total = float(np.sum(w * weight))
    if not (np.isfinite(total) and total > 0):
        raise DegenerateDistribution(f"{channel} momentum weight vanishes across the window")
    mean = np.sum(w * weight * k) / total
    return float(np.sqrt(np.sum(w * weight * (k - mean) ** 2) / total))


def free_flight_time(distance: float, k: float, config: PhysicalConfig) -> float:
    """Time to cover ``distance`` at the group velocity ``hbar k / m``."""
    return float(distance * config.m / (config.hbar * k))


# -- spatial statistics -----------------------------------------------------


@dataclass(frozen=True)
class PacketStatistics:
    mean_x: float
    rms_width: float
    norm: float


def _region_bounds(region, config):
    edges = (-np.inf,) + config.interfaces + (np.inf,)
    if region == "all":
        return -np.inf, np.inf
    if region not in REGIONS:
        raise ValueError(f"region must be 1..5 or 'all', got {region!r}")
    return edges[region - 1], edges[region]


def _restricted(x, y, lo, hi):
    """Samples of y on [lo, hi] with linearly interpolated end nodes at the bounds."""
    inside = (x > lo) & (x < hi)
    xs, ys = list(x[inside]), list(y[inside])
    for bound, front in ((lo, True), (hi, False)):
        if np.isfinite(bound) and x[0] <= bound <= x[-1]:
            val = float(np.interp(bound, x, y))
            if front:
                xs.insert(0, bound)
                ys.insert(0, val)
            else:
                xs.append(bound)
                ys.append(val)
    return np.array(xs), np.array(ys)


def packet_statistics(
    packet: PacketField, t: float, region, config: PhysicalConfig
) -> PacketStatistics:
    """Norm, mean position and RMS width of ``|Psi(x, t)|^2`` within a region.

    ``region`` is 1..5 or ``"all"``. Interface points are interpolated so the
    five regional norms add up to the whole-grid norm.

    Raises:
        EmptyRegion: if the regional norm is below 1e-14.
    """
    i = int(np.argmin(np.abs(packet.t_grid - t)))
    if not np.isclose(packet.t_grid[i], t, rtol=0, atol=1e-9 * max(1.0, abs(t))):
        raise ValueError(f"t={t!r} is not on the packet's time grid")
    lo, hi = _region_bounds(region, config)
    x, y = _restricted(packet.x_grid, packet.density[i], lo, hi)
    norm = float(np.trapezoid(y, x)) if x.size > 1 else 0.0
    if norm < 1e-14:
        raise EmptyRegion(f"region {region!r} holds norm {norm:.3g} at t={t!r}")
    mean = float(np.trapezoid(x * y, x) / norm)
    rms = float(np.sqrt(np.trapezoid((x - mean) ** 2 * y, x) / norm))
    return PacketStatistics(mean_x=mean, rms_width=rms, norm=norm)
