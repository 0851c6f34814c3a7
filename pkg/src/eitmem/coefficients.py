"""Closed-form coefficient algebra for the adiabatic polariton evolution.

The polariton spectral law multiplies each k-mode by exp(-I_s - i k I_w) with

    I_s = integral of s_part dt,   s_part = (i*delta_p + gamma_bc) sin^2(theta) + A0
    I_w = integral of w_part dt,   w_part = c (cos^2(theta) + B0)

A0 and B0 carry the non-ideal corrections (decay and detunings). The real and
imaginary parts of (s_part, w_part) are the damping alpha1, phase rate beta,
k-linear gain alpha2, and group velocity v_g. This module holds the exact
forms, the high-density first-order forms, and the resonance special cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SingularParametersError
from .model import MediumParams

# a0_b0 denominator guard, as a fraction of g^2 N; unreachable whenever the
# high-density condition holds.
SINGULAR_DENOMINATOR_FRACTION = 1e-30


@dataclass(frozen=True)
class CoefficientSample:
    """The complex pair (s_part, w_part) at one instant.

    The named coefficients are fixed projections of the pair, so the
    decomposition s_part + i k w_part = alpha1 + i beta + k alpha2 + i k v_g
    holds for every real k by construction.
    """

    t: float  # s
    s_part: complex  # 1/s
    w_part: complex  # m/s

    @property
    def alpha1(self) -> float:
        """Uniform damping rate, 1/s."""
        return self.s_part.real

    @property
    def beta(self) -> float:
        """Uniform phase rotation rate, rad/s."""
        return self.s_part.imag

    @property
    def alpha2(self) -> float:
        """k-linear gain/loss coefficient, m/s. Zero only at two-photon resonance."""
        return -self.w_part.imag

    @property
    def v_g(self) -> float:
        """Group velocity, m/s."""
        return self.w_part.real


def a0_b0(theta: float, theta_dot: float, params: MediumParams) -> tuple[complex, complex]:
    """Exact correction pair (A0, B0) at one control-field instant.

    A0 has units 1/s and enters s_part; B0 is dimensionless and enters
    w_part. Both vanish in the ideal lossless resonant limit.
    """
    d_ba, d_bc = params.coherence_factors()
    sin_t = math.sin(theta)
    s2 = sin_t * sin_t
    dg = d_ba * d_bc
    den = params.g2n + dg * s2
    if abs(den) < SINGULAR_DENOMINATOR_FRACTION * params.g2n:
        raise SingularParametersError(
            f"coefficient denominator {den} vanished relative to g^2 N; "
            f"parameters sit outside the high-density regime"
        )
    if theta_dot != 0.0:
        switch = dg * math.tan(theta) * s2 * theta_dot
    else:
        switch = 0.0 + 0.0j
    a0 = (switch - d_ba * d_bc * d_bc * s2 * s2) / den
    b0 = dg * s2 * s2 / den
    return a0, b0


def bright_ratio(theta: float, params: MediumParams) -> complex:
    """Adiabatic bright/dark amplitude ratio Phi/Psi, dimensionless."""
    d_ba, d_bc = params.coherence_factors()
    sin_t = math.sin(theta)
    s2 = sin_t * sin_t
    dg = d_ba * d_bc
    den = params.g2n + dg * s2
    if abs(den) < SINGULAR_DENOMINATOR_FRACTION * params.g2n:
        raise SingularParametersError(
            f"bright-ratio denominator {den} vanished relative to g^2 N"
        )
    return dg * math.tan(theta) * s2 / den


def exponent_integrand(
    theta: float, theta_dot: float, params: MediumParams, t: float = 0.0
) -> CoefficientSample:
    """Exact (s_part, w_part) built from a0_b0. The general code path."""
    a0, b0 = a0_b0(theta, theta_dot, params)
    _, d_bc = params.coherence_factors()
    s2 = math.sin(theta) ** 2
    s_part = d_bc * s2 + a0
    w_part = params.c * ((1.0 - s2) + b0)
    return CoefficientSample(t=t, s_part=s_part, w_part=w_part)


def coeffs_high_density(
    theta: float, theta_dot: float, params: MediumParams, t: float = 0.0
) -> CoefficientSample:
    """First order in |D G|/g^2 N: the four closed-form coefficients.

    Valid when the high-density ratio is large; agrees with
    exponent_integrand to first order and is cheaper to reason about.
    """
    g2n = params.g2n
    gbc = params.gamma_bc
    dp = params.delta_p
    dsum = params.delta + params.delta_p
    re_dg = params.gamma_ba * gbc - dp * dsum
    im_dg = dsum * gbc + dp * params.gamma_ba
    sin_t = math.sin(theta)
    s2 = sin_t * sin_t
    c2 = 1.0 - s2
    if theta_dot != 0.0:
        switch = math.tan(theta) * theta_dot
    else:
        switch = 0.0
    common = switch - gbc * s2
    alpha1 = gbc * s2 + (s2 / g2n) * (re_dg * common + im_dg * dp * s2)
    beta = dp * s2 + (s2 / g2n) * (im_dg * common - re_dg * dp * s2)
    alpha2 = -params.c * im_dg * s2 * s2 / g2n
    v_g = params.c * (c2 + re_dg * s2 * s2 / g2n)
    return CoefficientSample(t=t, s_part=complex(alpha1, beta), w_part=complex(v_g, -alpha2))


def v_g_min(params: MediumParams) -> float:
    """Residual group velocity c gamma_bc gamma_ba / g^2 N at resonance, m/s.

    This is the floor the group velocity approaches as theta -> pi/2; it is
    nonzero whenever gamma_bc is, which is what bounds the storage time.
    """
    return params.c * params.gamma_bc * params.gamma_ba / params.g2n


def max_transit_time(params: MediumParams, remaining_length: float | None = None) -> float:
    """Time for the residual drift to traverse the remaining cell, s."""
    floor = v_g_min(params)
    length = params.length if remaining_length is None else remaining_length
    if floor == 0.0:
        return math.inf
    return length / floor


def alpha1_slow_light(
    theta: float, theta_dot: float, params: MediumParams, assume_sin_one: bool = False
) -> float:
    """Resonant damping rate with the switching correction, 1/s.

    The full form carries a sin^2(theta) factor; with assume_sin_one the
    deep slow-light simplification drops it and the rate is gamma_bc plus a
    small term active only while theta moves.
    """
    if theta_dot != 0.0:
        switch = math.tan(theta) * theta_dot
    else:
        switch = 0.0
    rate = params.gamma_bc + (params.gamma_bc * params.gamma_ba / params.g2n) * switch
    if assume_sin_one:
        return rate
    return rate * math.sin(theta) ** 2
