"""Weak + vacuum decoy-state bounds on the single-photon yield and error
rate, and their loosening when signal and decoy states are distinguishable."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ChannelParams, Observables
from .exceptions import DegenerateDecoyError, DomainError

__all__ = [
    "SinglePhotonBounds",
    "EPS_GUARD",
    "y1_lower_bound",
    "e1_upper_bound_no_tha",
    "coherent_trace_distance",
    "apply_distinguishability",
    "decoy_bounds",
]

# Denominator guard for the loosened error bound.
EPS_GUARD = 1e-15


@dataclass(frozen=True)
class SinglePhotonBounds:
    y1_lower: float
    e1_upper: float
    distinguishability: float = 0.0
    vacuous: bool = False

    def __post_init__(self):
        if not 0 <= self.y1_lower <= 1:
            raise DomainError(f"y1_lower must lie in [0, 1], got {self.y1_lower!r}")
        if not 0 <= self.e1_upper <= 0.5:
            raise DomainError(f"e1_upper must lie in [0, 0.5], got {self.e1_upper!r}")
        if not 0 <= self.distinguishability <= 1:
            raise DomainError(f"distinguishability must lie in [0, 1], got {self.distinguishability!r}")


def _clamp(x, lo, hi):
    return min(max(x, lo), hi)


def y1_lower_bound(obs_signal: Observables, obs_decoy: Observables, params: ChannelParams) -> float:
    """Lower bound on the single-photon yield, clamped to [0, 1].

    Standard weak + vacuum form, with the multi-photon term of the signal
    scaled by ``nu**2 / mu**2``.
    """
    mu, nu, y0 = params.mu, params.nu, params.y0
    denom = mu * nu - nu * nu
    if not denom > 0:
        raise DegenerateDecoyError(f"mu*nu - nu**2 = {denom!r} must be > 0")
    bracket = (
        obs_decoy.gain * math.exp(nu)
        - obs_signal.gain * math.exp(mu) * (nu * nu) / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y0
    )
    return _clamp(mu / denom * bracket, 0.0, 1.0)


def e1_upper_bound_no_tha(obs_decoy: Observables, y1_lower: float, params: ChannelParams) -> float:
    """Upper bound on the single-photon error rate without side channels.

    A zero yield bound leaves the error rate unconstrained; 0.5 is returned.
    """
    if not 0 <= y1_lower <= 1:
        raise DomainError(f"y1_lower must lie in [0, 1], got {y1_lower!r}")
    if y1_lower == 0:
        return 0.5
    nu = params.nu
    numer = obs_decoy.qber * obs_decoy.gain * math.exp(nu) - params.e0 * params.y0
    return _clamp(numer / (y1_lower * nu), 0.0, 0.5)


def coherent_trace_distance(mu_out_signal: float, mu_out_decoy: float) -> float:
    """Trace distance between two in-phase coherent states.

    ``sqrt(1 - exp(-(sqrt(m1) - sqrt(m2))**2))``; evaluated through
    ``expm1`` so that intensities around 1e-12 keep full precision.
    """
    if mu_out_signal < 0 or mu_out_decoy < 0:
        raise DomainError("coherent-state intensities must be >= 0")
    gap = (math.sqrt(mu_out_signal) - math.sqrt(mu_out_decoy)) ** 2
    return math.sqrt(-math.expm1(-gap))


def apply_distinguishability(bounds: SinglePhotonBounds, d: float) -> SinglePhotonBounds:
    """Loosen decoy bounds by an additive trace-distance slack ``d``.

    The yield bound drops by ``d`` and the error bound becomes
    ``(y1*e1 + d) / (y1 - d)``. Once ``d`` reaches the yield bound nothing
    is left to certify and the vacuous pair (0, 0.5) is returned.
    """
    if not 0 <= d <= 1:
        raise DomainError(f"trace distance must lie in [0, 1], got {d!r}")
    if d == 0:
        return bounds
    y1, e1 = bounds.y1_lower, bounds.e1_upper
    if d >= y1:
        return SinglePhotonBounds(0.0, 0.5, d, vacuous=True)
    e1_new = min(0.5, (y1 * e1 + d) / max(y1 - d, EPS_GUARD))
    return SinglePhotonBounds(max(0.0, y1 - d), e1_new, d, vacuous=bounds.vacuous)


def decoy_bounds(obs_signal: Observables, obs_decoy: Observables, params: ChannelParams) -> SinglePhotonBounds:
    """Both side-channel-free bounds bundled together."""
    y1 = y1_lower_bound(obs_signal, obs_decoy, params)
    e1 = e1_upper_bound_no_tha(obs_decoy, y1, params)
    return SinglePhotonBounds(y1, e1, 0.0, vacuous=(y1 == 0))
