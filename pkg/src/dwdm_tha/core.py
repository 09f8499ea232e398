"""Channel parameters, elementary entropy/photon statistics, the forward
observable model and the GLLP key-rate formula for weak coherent sources."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .exceptions import DomainError, ParameterError

__all__ = [
    "ChannelParams",
    "Observables",
    "FIG6_PARAMS",
    "binary_entropy",
    "poisson_single_photon_prob",
    "transmittance",
    "forward_observables",
    "glp_key_rate",
]


@dataclass(frozen=True)
class ChannelParams:
    """Fiber, detector and protocol constants.

    Defaults are the fiber/detector values used for the key-rate curves
    (0.2 dB/km, 42 % detection efficiency, 1 % misalignment, 8e-8 dark
    counts per gate, f = 1.16, e0 = 0.5) plus q = 0.5 for BB84. The signal
    and decoy intensities ``mu = 0.5`` and ``nu = 0.1`` are configuration
    choices, not published values.
    """

    alpha_db_per_km: float = 0.2
    eta_det: float = 0.42
    e_det: float = 0.01
    y0: float = 8e-8
    e0: float = 0.5
    f_ec: float = 1.16
    q: float = 0.5
    mu: float = 0.5
    nu: float = 0.1

    def __post_init__(self):
        bad = []
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                bad.append(f.name)
        if bad:
            raise ParameterError(f"non-finite or non-numeric value for {', '.join(bad)}", bad)
        checks = [
            (("alpha_db_per_km",), self.alpha_db_per_km >= 0, "alpha_db_per_km must be >= 0"),
            (("eta_det",), 0 < self.eta_det <= 1, "eta_det must lie in (0, 1]"),
            (("e_det",), 0 <= self.e_det <= 1, "e_det must lie in [0, 1]"),
            (("y0",), 0 <= self.y0 <= 1, "y0 must lie in [0, 1]"),
            (("e0",), 0 <= self.e0 <= 1, "e0 must lie in [0, 1]"),
            (("f_ec",), self.f_ec >= 1, "f_ec must be >= 1"),
            (("q",), 0 < self.q <= 1, "q must lie in (0, 1]"),
            (("mu",), self.mu > 0, "mu must be > 0"),
            (("nu", "mu"), 0 < self.nu < self.mu, "need 0 < nu < mu"),
        ]
        failed = [(k, msg) for k, ok, msg in checks if not ok]
        if failed:
            keys = sorted({k for ks, _ in failed for k in ks})
            raise ParameterError("; ".join(msg for _, msg in failed), keys)

    def replace(self, **changes) -> "ChannelParams":
        return replace(self, **changes)


FIG6_PARAMS = ChannelParams()


@dataclass(frozen=True)
class Observables:
    """Gain Q and error rate E of one intensity setting."""

    gain: float
    qber: float

    def __post_init__(self):
        if not 0 <= self.gain <= 1:
            raise DomainError(f"gain must lie in [0, 1], got {self.gain!r}")
        if not 0 <= self.qber <= 0.5:
            raise DomainError(f"qber must lie in [0, 0.5], got {self.qber!r}")


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, with H(0) = H(1) = 0."""
    if not 0 <= x <= 1:
        raise DomainError(f"binary_entropy needs 0 <= x <= 1, got {x!r}")
    if x == 0 or x == 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def poisson_single_photon_prob(mu: float) -> float:
    """Probability that a Poissonian pulse of mean ``mu`` holds one photon."""
    if not mu > 0:
        raise DomainError(f"mean photon number must be > 0, got {mu!r}")
    return mu * math.exp(-mu)


def transmittance(distance_km: float, params: ChannelParams) -> float:
    """Overall transmittance: fiber loss times detector efficiency."""
    if not distance_km >= 0:
        raise DomainError(f"distance must be >= 0 km, got {distance_km!r}")
    return params.eta_det * 10 ** (-params.alpha_db_per_km * distance_km / 10)


def forward_observables(intensity: float, distance_km: float, params: ChannelParams) -> Observables:
    """Expected gain and QBER for a Poissonian source through a lossy channel.

    Threshold detection with additive dark counts:
    ``Q = y0 + 1 - exp(-eta*I)`` and ``E*Q = e0*y0 + e_det*(1 - exp(-eta*I))``.
    """
    if not intensity >= 0:
        raise DomainError(f"intensity must be >= 0, got {intensity!r}")
    eta = transmittance(distance_km, params)
    clicks = -math.expm1(-eta * intensity)
    gain = params.y0 + clicks
    if gain == 0:
        return Observables(0.0, 0.0)
    qber = (params.e0 * params.y0 + params.e_det * clicks) / gain
    return Observables(min(gain, 1.0), qber)


def glp_key_rate(
    obs_signal: Observables,
    y1: float,
    e1: float,
    p1: float,
    params: ChannelParams,
) -> float:
    """Secret key rate per pulse, unclamped (negative means no key).

    ``R = q * (-Q * H(E) * f + P1 * Y1 * (1 - H(e1)))``; the error-correction
    efficiency is treated as the constant ``params.f_ec``.
    """
    for name, v in (("y1", y1), ("e1", e1), ("p1", p1)):
        if not 0 <= v <= 1:
            raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
    leak = obs_signal.gain * binary_entropy(obs_signal.qber) * params.f_ec
    privacy = p1 * y1 * (1 - binary_entropy(e1))
    return params.q * (privacy - leak)
