"""Stationary scattering states of the two-barrier potential.

The closed-form amplitudes and an independent transfer-matrix solver both
live here. Every hyperbolic sine of a complex argument ``x + 2i*phi`` is
evaluated with ``e^{x}`` factored out, so opaque barriers (``chi*a`` in the
hundreds) neither overflow nor lose relative precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalOverflow, SingularMatching
from .kinematics import KinematicState, PhysicalConfig

DEFAULT_MAX_EXPONENT = 350.0
MAX_CONDITION = 1e12

REGIONS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class ScatteringSolution:
    """Outgoing amplitudes for a unit wave incident from the left.

    ``a1t_a2r`` and ``a1t_a2t`` are the products appearing in the stationary
    solution (region 3 backward wave and region 5 transmitted wave).
    ``denom`` is the multiple-reflection denominator shared by all four.
    """

    a1r: complex | np.ndarray
    a1t: complex | np.ndarray
    a1t_a2r: complex | np.ndarray
    a1t_a2t: complex | np.ndarray
    denom: complex | np.ndarray

    @property
    def reflectance(self):
        return np.abs(self.a1r) ** 2

    @property
    def transmittance(self):
        return np.abs(self.a1t_a2t) ** 2


@dataclass(frozen=True)
class InteriorCoefficients:
    """Exponential coefficients inside each barrier.

    Region 2 holds ``alpha1 e^{-chi x} + beta1 e^{chi x}``; region 4 holds
    ``a1t * (alpha2 e^{-chi (x-L)} + beta2 e^{chi (x-L)})``.
    """

    alpha1: complex | np.ndarray
    beta1: complex | np.ndarray
    alpha2: complex | np.ndarray
    beta2: complex | np.ndarray


@dataclass(frozen=True)
class SinhFactors:
    """Scaled hyperbolic-sine quotients for one barrier of opacity ``x = chi*w``.

    Attributes:
        rho: ``sinh(x) / sinh(x + 2i phi)``
        inv: ``1 / sinh(x + 2i phi)``
        flip: ``sinh(x - 2i phi) / sinh(x + 2i phi)``
    """

    rho: np.ndarray
    inv: np.ndarray
    flip: np.ndarray


def sinh_factors(x, phi) -> SinhFactors:
    x = np.asarray(x, dtype=float)
    u = np.exp(2j * np.asarray(phi))
    e = np.exp(-2.0 * x)
    den = u - e / u  # 2 e^{-x} sinh(x + 2i phi)
    return SinhFactors(
        rho=(1.0 - e) / den,
        inv=2.0 * np.exp(-x) / den,
        flip=(1.0 / u - e * u) / den,
    )


def _check_exponents(state: KinematicState, config: PhysicalConfig, max_exponent: float):
    worst = float(np.max(np.asarray(state.chi))) * max(config.a, config.b)
    if worst > max_exponent:
        raise NumericalOverflow(
            f"barrier opacity chi*width={worst:.4g} exceeds cap {max_exponent:.4g}"
        )


def _squeeze(value):
    value = np.asarray(value)
    return complex(value) if value.ndim == 0 else value


def exact_amplitudes(
    state: KinematicState,
    config: PhysicalConfig,
    max_exponent: float = DEFAULT_MAX_EXPONENT,
) -> ScatteringSolution:
    """Closed-form outgoing amplitudes of the two-barrier problem.

    Raises:
        NumericalOverflow: if ``chi*a`` or ``chi*b`` exceeds ``max_exponent``.
            Below the cap the transmitted amplitude ``~e^{-chi(a+b)}`` stays
            representable in double precision.
    """
    _check_exponents(state, config, max_exponent)
    k, chi, phi = np.asarray(state.k), np.asarray(state.chi), np.asarray(state.phi)
    a, L, b = config.a, config.L, config.b

    fa = sinh_factors(chi * a, phi)
    fb = sinh_factors(chi * b, phi)
    loop = np.exp(2j * k * (L - a))
    ratio = fa.rho * fb.rho * loop
    denom = 1.0 - ratio
    pre = 2j * chi * k / state.w2

    a1r = (fa.rho - fa.flip * fb.rho * loop) / denom
    a1t = pre * np.exp(-1j * k * a) * fa.inv / denom
    a1t_a2r = pre * fb.rho * np.exp(1j * k * (2 * L - a)) * fa.inv / denom
    a1t_a2t = pre**2 * np.exp(-1j * k * (a + b)) * fa.inv * fb.inv / denom
    return ScatteringSolution(
        a1r=_squeeze(a1r),
        a1t=_squeeze(a1t),
        a1t_a2r=_squeeze(a1t_a2r),
        a1t_a2t=_squeeze(a1t_a2t),
        denom=_squeeze(denom),
    )


def _solve_stacked(matrix: np.ndarray, rhs: np.ndarray, where: str) -> np.ndarray:
    cond = np.linalg.cond(matrix)
    if np.any(~np.isfinite(cond)) or np.any(cond > MAX_CONDITION):
        raise SingularMatching(
            f"matching system at {where} has condition number {np.max(cond):.3g}"
        )
    return np.linalg.solve(matrix, rhs[..., None])[..., 0]


def interior_coefficients(
    state: KinematicState, config: PhysicalConfig, solution: ScatteringSolution
) -> InteriorCoefficients:
    """Barrier-interior coefficients from value/slope matching.

    Region 4 is fixed by the transmitted wave at ``x = L + b``; region 2 by
    the region 3 wave at ``x = a``. Each 2x2 system is solved with its
    columns scaled by the exponentials at the interface, which keeps the
    condition number O(1) however opaque the barrier is.
    """
    k, chi = np.asarray(state.k), np.asarray(state.chi)
    a, L, b = config.a, config.L, config.b
    shape = np.broadcast(k, chi).shape

    # unknowns (alpha e^{-chi x_i}, beta e^{chi x_i}) at the interface x_i
    scaled = np.zeros(shape + (2, 2))
    scaled[..., 0, 0] = 1.0
    scaled[..., 0, 1] = 1.0
    scaled[..., 1, 0] = -chi
    scaled[..., 1, 1] = chi

    # x = L + b: region 4 / a1t must reproduce the transmitted wave
    v = np.asarray(solution.a1t_a2t) * np.exp(1j * k * (L + b)) / np.asarray(solution.a1t)
    rhs = np.stack(np.broadcast_arrays(v, 1j * k * v), axis=-1)
    lo, hi = np.moveaxis(_solve_stacked(scaled, rhs, "x = L + b"), -1, 0)
    alpha2 = lo * np.exp(chi * b)
    beta2 = hi * np.exp(-chi * b)

    # x = a: region 2 must reproduce the region 3 wave
    fwd = np.asarray(solution.a1t) * np.exp(1j * k * a)
    bwd = np.asarray(solution.a1t_a2r) * np.exp(-1j * k * a)
    rhs = np.stack(np.broadcast_arrays(fwd + bwd, 1j * k * (fwd - bwd)), axis=-1)
    lo, hi = np.moveaxis(_solve_stacked(scaled, rhs, "x = a"), -1, 0)
    alpha1 = lo * np.exp(chi * a)
    beta1 = hi * np.exp(-chi * a)

    return InteriorCoefficients(
        alpha1=_squeeze(alpha1),
        beta1=_squeeze(beta1),
        alpha2=_squeeze(alpha2),
        beta2=_squeeze(beta2),
    )


def region_of(x, config: PhysicalConfig) -> np.ndarray:
    """Region index 1..5 for each position (interfaces belong to the right)."""
    return np.searchsorted(np.asarray(config.interfaces), np.asarray(x, dtype=float), side="right") + 1


def region_wavefunction(
    region: int,
    x,
    state: KinematicState,
    config: PhysicalConfig,
    solution: ScatteringSolution,
    interior: InteriorCoefficients,
    derivative: bool = False,
):
    """Evaluate one region's analytic form at ``x``, wherever ``x`` lies."""
    x = np.asarray(x, dtype=float)
    k, chi = np.asarray(state.k), np.asarray(state.chi)
    L = config.L
    ik = 1j * k

    def plane(fwd, bwd):
        ef, eb = np.exp(ik * x), np.exp(-ik * x)
        if derivative:
            return ik * (fwd * ef - bwd * eb)
        return fwd * ef + bwd * eb

    def evanescent(alpha, beta, origin):
        lo = alpha * np.exp(-chi * (x - origin))
        hi = beta * np.exp(chi * (x - origin))
        if derivative:
            return chi * (hi - lo)
        return lo + hi

    if region == 1:
        return plane(1.0, solution.a1r)
    if region == 2:
        return evanescent(interior.alpha1, interior.beta1, 0.0)
    if region == 3:
        return plane(solution.a1t, solution.a1t_a2r)
    if region == 4:
        return solution.a1t * evanescent(interior.alpha2, interior.beta2, L)
    if region == 5:
        return plane(solution.a1t_a2t, 0.0)
    raise ValueError(f"region must be one of {REGIONS}, got {region!r}")


def stationary_wavefunction(
    x,
    state: KinematicState,
    config: PhysicalConfig,
    solution: ScatteringSolution,
    interior: InteriorCoefficients,
    derivative: bool = False,
):
    """Piecewise stationary wavefunction (or its x-derivative) at ``x``.

    ``x`` broadcasts against the state arrays, so an ``(n_x, 1)`` column of
    positions with length-``n_k`` states yields an ``(n_x, n_k)`` table.
    """
    x = np.asarray(x, dtype=float)
    regions = region_of(x, config)
    out = None
    for region in REGIONS:
        mask = regions == region
        if not np.any(mask):
            continue
        # evaluate only at the positions in this region to avoid overflowing
        # the evanescent exponentials far outside their barrier
        xr = np.where(mask, x, config.interfaces[min(region - 1, 3)])
        value = region_wavefunction(region, xr, state, config, solution, interior, derivative)
        if out is None:
            out = np.zeros(np.broadcast(value, x).shape, dtype=complex)
        out = np.where(mask, value, out)
    return _squeeze(out)


# -- transfer-matrix oracle -------------------------------------------------


def _transfer_solve(k, edges, potentials, m, hbar):
    """Scattering through piecewise-constant segments by 2x2 transfer matrices.

    ``potentials[j]`` is the potential of the region left of ``edges[j]``;
    the outermost regions (``potentials[0]`` and ``potentials[-1]``) must
    be zero. Region ``j`` is written as ``A e^{kappa (x-x_j)} + B e^{-kappa (x-x_j)}``
    with ``x_j`` its left edge (``x_0 = 0``), ``kappa = i k`` in free regions
    and ``kappa = chi`` under a barrier.

    Returns the reflection amplitude, the transmitted amplitude in the
    ``e^{ikx}`` convention, and the coefficient pairs ``(A_j, B_j)`` of
    every region. Growth across barriers is carried as a separate log
    scale, and interior coefficients are recovered by propagating leftward
    from the transmitted side, the numerically dominant direction.
    """
    k = np.asarray(k, dtype=float)
    E = hbar**2 * k**2 / (2 * m)
    # sqrt of a negative real + 0j is +i|.|, giving kappa = i k in free regions
    kappas = [np.sqrt(2 * m * (V - E) + 0j) / hbar for V in potentials]
    refs = [0.0] + list(edges)
    widths = [edges[j] - refs[j] for j in range(len(edges))]

    one = np.ones_like(k, dtype=complex)
    zero = np.zeros_like(k, dtype=complex)
    # running matrix M = e^{scale} [[m11, m12], [m21, m22]] mapping region 0 -> region j
    m11, m12, m21, m22 = one, zero, zero, one
    scale = np.zeros_like(k)
    for j in range(len(edges)):
        k1, k2, d = kappas[j], kappas[j + 1], widths[j]
        grow = np.real(k1) * d
        p_plus = np.exp(k1 * d - grow)
        p_minus = np.exp(-k1 * d - grow)
        scale = scale + grow
        q = k1 / k2
        s11, s12 = 0.5 * (1 + q) * p_plus, 0.5 * (1 - q) * p_minus
        s21, s22 = 0.5 * (1 - q) * p_plus, 0.5 * (1 + q) * p_minus
        m11, m12, m21, m22 = (
            s11 * m11 + s12 * m21,
            s11 * m12 + s12 * m22,
            s21 * m11 + s22 * m21,
            s21 * m12 + s22 * m22,
        )

    r = -m21 / m22
    # det M = kappa_0 / kappa_last = 1, so the transmitted coefficient is 1/M22
    t_scaled = 1.0 / m22
    t_log = -scale

    coeffs = [None] * (len(edges) + 1)
    coeffs[-1] = (t_scaled * np.exp(t_log), zero)
    A, B, log = t_scaled, zero, t_log
    for j in range(len(edges) - 1, -1, -1):
        k1, k2, d = kappas[j], kappas[j + 1], widths[j]
        q = k2 / k1
        # coefficients of region j evaluated at its right edge
        Ar = 0.5 * ((1 + q) * A + (1 - q) * B)
        Br = 0.5 * ((1 - q) * A + (1 + q) * B)
        grow = np.real(k1) * d
        A = Ar * np.exp(-k1 * d - grow)
        B = Br * np.exp(k1 * d - grow)
        log = log + grow
        coeffs[j] = (A * np.exp(log), B * np.exp(log))

    t_global = coeffs[-1][0] * np.exp(-1j * k * edges[-1])
    return r, t_global, coeffs


def transfer_matrix_amplitudes(
    state: KinematicState,
    config: PhysicalConfig,
    max_exponent: float = DEFAULT_MAX_EXPONENT,
) -> ScatteringSolution:
    """Independent transfer-matrix evaluation of the outgoing amplitudes.

    The denominator is recovered physically as ``t1 * t2 / T``, with ``t1``
    and ``t2`` the single-barrier transmissions from the same solver.
    """
    _check_exponents(state, config, max_exponent)
    k = np.asarray(state.k, dtype=float)
    a, L, b, V0 = config.a, config.L, config.b, config.V0
    m, hbar = config.m, config.hbar

    r, t, coeffs = _transfer_solve(k, [0.0, a, L, L + b], [0.0, V0, 0.0, V0, 0.0], m, hbar)
    A3, B3 = coeffs[2]
    a1t = A3 * np.exp(-1j * k * a)
    a1t_a2r = B3 * np.exp(1j * k * a)

    _, t1, _ = _transfer_solve(k, [0.0, a], [0.0, V0, 0.0], m, hbar)
    _, t2, _ = _transfer_solve(k, [L, L + b], [0.0, V0, 0.0], m, hbar)
    return ScatteringSolution(
        a1r=_squeeze(r),
        a1t=_squeeze(a1t),
        a1t_a2r=_squeeze(a1t_a2r),
        a1t_a2t=_squeeze(t),
        denom=_squeeze(t1 * t2 / t),
    )


def single_barrier_transmittance(state: KinematicState, width: float):
    """Closed-form ``|T|^2`` of one barrier of the given width."""
    k, chi = np.asarray(state.k), np.asarray(state.chi)
    return 1.0 / (1.0 + (state.w2**2 / (4 * k**2 * chi**2)) * np.sinh(chi * width) ** 2)
