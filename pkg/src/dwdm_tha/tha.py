"""Trojan-horse attack model: quantum-coin imbalance, phase-error inflation
and the photon budget returned to the eavesdropper per wavelength."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import DomainError

__all__ = [
    "ThaBudget",
    "quantum_coin_delta",
    "phase_error_with_tha",
    "budget_from_fraction",
    "compute_budget",
]


@dataclass(frozen=True)
class ThaBudget:
    """Trojan photons returned to Eve at one wavelength.

    ``mu_out = injected_photons * conversion_fraction * reflectivity *
    10**(-roundtrip_isolation_db / 10)``. Use :func:`budget_from_fraction`
    rather than filling ``mu_out`` by hand.
    """

    wavelength_nm: float
    injected_photons: float
    conversion_fraction: float
    roundtrip_isolation_db: float
    reflectivity: float
    mu_out: float

    def __post_init__(self):
        for name in ("wavelength_nm", "injected_photons", "conversion_fraction",
                     "roundtrip_isolation_db", "reflectivity", "mu_out"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
        if self.conversion_fraction > 1:
            raise DomainError(f"conversion_fraction must be <= 1, got {self.conversion_fraction!r}")
        if self.reflectivity > 1:
            raise DomainError(f"reflectivity must be <= 1, got {self.reflectivity!r}")


def quantum_coin_delta(mu_out: float) -> float:
    """Quantum-coin imbalance ``(1 - exp(-m) cos m) / 2`` for ``m = mu_out``.

    Rewritten as ``-expm1(-m) cos m + 2 sin(m/2)**2`` to avoid cancellation
    for the tiny intensities of interest (1e-12 and below).
    """
    if not mu_out >= 0:
        raise DomainError(f"mu_out must be >= 0, got {mu_out!r}")
    one_minus = -math.expm1(-mu_out) * math.cos(mu_out) + 2.0 * math.sin(mu_out / 2) ** 2
    return 0.5 * one_minus


def phase_error_with_tha(e1_bar: float, mu_out: float, y1: float) -> float:
    """Single-photon phase error inflated by Trojan-horse leakage.

    ``e1 = e + 4D(1-D)(1-2e) + 4(1-2D) sqrt(D(1-D) e(1-e))`` with
    ``D = delta / y1``; the whole product sits under the radical.

    The expression equals ``sin(asin(sqrt(e)) + 2 asin(sqrt(D)))**2``, which
    reaches 0.5 no later than ``D = 0.5`` and turns back down afterwards, so
    any ``D >= 0.5`` is reported as the vacuous bound 0.5. A zero yield is
    vacuous as well.
    """
    if not 0 <= e1_bar <= 0.5:
        raise DomainError(f"e1_bar must lie in [0, 0.5], got {e1_bar!r}")
    if not 0 <= y1 <= 1:
        raise DomainError(f"y1 must lie in [0, 1], got {y1!r}")
    delta = quantum_coin_delta(mu_out)
    if delta == 0:
        return e1_bar
    if y1 == 0:
        return 0.5
    dp = delta / y1
    if dp >= 0.5:
        return 0.5
    e = e1_bar
    value = (
        e
        + 4 * dp * (1 - dp) * (1 - 2 * e)
        + 4 * (1 - 2 * dp) * math.sqrt(dp * (1 - dp) * e * (1 - e))
    )
    return min(max(value, 0.0), 0.5)


def budget_from_fraction(
    injected_photons: float,
    wavelength_nm: float,
    conversion_fraction: float,
    isolation,
    reflectivity: float = 1.0,
    isolation_passes: int = 2,
) -> ThaBudget:
    """Photon budget for light converted to ``wavelength_nm``.

    ``isolation`` is an :class:`~dwdm_tha.spectra.IsolationProfile` (or any
    object with ``attenuation_at``); its one-way value is counted
    ``isolation_passes`` times, inbound and outbound at the shifted
    wavelength.
    """
    if isolation_passes < 0:
        raise DomainError(f"isolation_passes must be >= 0, got {isolation_passes!r}")
    if injected_photons < 0 or reflectivity < 0:
        raise DomainError("injected_photons and reflectivity must be >= 0")
    roundtrip = isolation_passes * float(isolation.attenuation_at(wavelength_nm))
    mu_out = injected_photons * conversion_fraction * reflectivity * 10 ** (-roundtrip / 10)
    return ThaBudget(
        wavelength_nm=float(wavelength_nm),
        injected_photons=float(injected_photons),
        conversion_fraction=float(conversion_fraction),
        roundtrip_isolation_db=roundtrip,
        reflectivity=float(reflectivity),
        mu_out=mu_out,
    )


def compute_budget(
    injected_photons: float,
    peak,
    isolation,
    reflectivity: float,
    input_total_mw: float,
    isolation_passes: int = 2,
) -> ThaBudget:
    """Budget for a detected output ``peak``.

    The conversion fraction is the peak's integrated power over the total
    integrated power of the injected (input-port) spectrum.
    """
    if not input_total_mw > 0:
        raise DomainError(f"input_total_mw must be > 0, got {input_total_mw!r}")
    fraction = min(peak.integrated_mw / input_total_mw, 1.0)
    return budget_from_fraction(
        injected_photons, peak.center_nm, fraction, isolation, reflectivity, isolation_passes
    )
