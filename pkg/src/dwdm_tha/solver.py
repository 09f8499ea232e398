"""Key rate under Trojan-horse leakage, maximum secure distance searches,
per-wavelength distance maps and rate-versus-distance tables."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import ChannelParams, FIG6_PARAMS, forward_observables, glp_key_rate, poisson_single_photon_prob
from .decoy import apply_distinguishability, coherent_trace_distance, decoy_bounds
from .exceptions import DomainError
from .tha import ThaBudget, phase_error_with_tha

log = logging.getLogger(__name__)

DStrategy = Callable[[float, ChannelParams], float]

DEFAULT_GRID_KM = 1.0
DEFAULT_TOL_KM = 0.01
DEFAULT_SEARCH_LIMIT_KM = 600.0


def coherent_distinguishability(mu_out: float, params: ChannelParams) -> float:
    """Signal/decoy trace distance with the decoy back-reflection scaled by nu/mu."""
    return coherent_trace_distance(mu_out, mu_out * params.nu / params.mu)


def no_distinguishability(mu_out: float, params: ChannelParams) -> float:
    return 0.0


def constant_distinguishability(d: float) -> DStrategy:
    if not 0 <= d <= 1:
        raise DomainError(f"trace distance must lie in [0, 1], got {d!r}")

    def strategy(mu_out, params):
        return d

    strategy.__name__ = f"constant_distinguishability({d!r})"
    return strategy


D_STRATEGIES = {
    "coherent": coherent_distinguishability,
    "none": no_distinguishability,
}


def resolve_d_strategy(spec) -> DStrategy:
    """Accept a callable, ``"coherent"``, ``"none"`` or ``"constant:<value>"``."""
    if callable(spec):
        return spec
    if spec is None:
        return coherent_distinguishability
    name = str(spec).strip()
    if name in D_STRATEGIES:
        return D_STRATEGIES[name]
    if name.startswith("constant:"):
        try:
            value = float(name.split(":", 1)[1])
        except ValueError:
            raise DomainError(f"bad constant trace distance in {spec!r}") from None
        return constant_distinguishability(value)
    raise DomainError(f"unknown distinguishability strategy {spec!r}")


def key_rate_at(
    distance_km: float,
    mu_out: float,
    d: float | None = None,
    params: ChannelParams = FIG6_PARAMS,
) -> float:
    """Unclamped key rate per pulse at ``distance_km``.

    ``d`` is the signal/decoy trace distance; ``None`` derives it from
    ``mu_out`` with :func:`coherent_distinguishability`.
    """
    if d is None:
        d = coherent_distinguishability(mu_out, params)
    obs_mu = forward_observables(params.mu, distance_km, params)
    obs_nu = forward_observables(params.nu, distance_km, params)
    bounds = apply_distinguishability(decoy_bounds(obs_mu, obs_nu, params), d)
    e1 = phase_error_with_tha(bounds.e1_upper, mu_out, bounds.y1_lower)
    p1 = poisson_single_photon_prob(params.mu)
    return glp_key_rate(obs_mu, bounds.y1_lower, e1, p1, params)


def max_secure_distance(
    mu_out: float,
    d: float | None = None,
    params: ChannelParams = FIG6_PARAMS,
    grid_km: float = DEFAULT_GRID_KM,
    tol_km: float = DEFAULT_TOL_KM,
    search_limit_km: float = DEFAULT_SEARCH_LIMIT_KM,
) -> float:
    """Largest distance (within ``tol_km``) with a positive key rate.

    Scans ``[0, search_limit_km]`` every ``grid_km``, brackets the last
    positive-to-non-positive transition and bisects it. The returned value
    is the positive side of the final bracket. Returns 0 when no key is
    possible at 0 km.
    """
    if not grid_km > 0 or not tol_km > 0:
        raise DomainError("grid_km and tol_km must be > 0")

    def rate(L):
        return key_rate_at(L, mu_out, d, params)

    if rate(0.0) <= 0:
        return 0.0
    n = int(np.ceil(search_limit_km / grid_km))
    grid = [min(i * grid_km, search_limit_km) for i in range(n + 1)]
    rates = [rate(L) for L in grid]
    last_pos = None
    for i in range(n):
        if rates[i] > 0 >= rates[i + 1]:
            last_pos = (grid[i], grid[i + 1])
    if last_pos is None:
        log.warning("key rate still positive at search limit %.1f km", search_limit_km)
        return float(search_limit_km)
    lo, hi = last_pos
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0:
            lo = mid
        else:
            hi = mid
    if not (rate(lo) > 0 >= rate(hi)):
        raise ArithmeticError(f"bisection lost the sign change in [{lo}, {hi}] km")
    return lo


@dataclass(frozen=True)
class DistanceScan:
    points: tuple[tuple[float, float], ...]
    max_secure_km: float
    baseline_max_km: float

    @property
    def ratio(self) -> float:
        if self.baseline_max_km == 0:
            return 0.0
        return min(self.max_secure_km / self.baseline_max_km, 1.0)


def scan_distance(
    mu_out: float,
    d: float | None = None,
    params: ChannelParams = FIG6_PARAMS,
    l_max_km: float = 300.0,
    step_km: float = 1.0,
    grid_km: float = DEFAULT_GRID_KM,
    tol_km: float = DEFAULT_TOL_KM,
) -> DistanceScan:
    """Rate curve plus maximum distance with and without the attack."""
    distances = _distance_grid(l_max_km, step_km)
    points = tuple((L, key_rate_at(L, mu_out, d, params)) for L in distances)
    return DistanceScan(
        points=points,
        max_secure_km=max_secure_distance(mu_out, d, params, grid_km, tol_km),
        baseline_max_km=max_secure_distance(0.0, 0.0, params, grid_km, tol_km),
    )


@dataclass(frozen=True)
class DistanceMapRow:
    wavelength_nm: float
    mu_out: float
    max_km: float


@dataclass(frozen=True)
class DistanceMap:
    rows: tuple[DistanceMapRow, ...]
    baseline_max_km: float

    @property
    def min_max_km(self) -> float:
        return min(r.max_km for r in self.rows)

    @property
    def worst_wavelength_nm(self) -> float:
        return min(self.rows, key=lambda r: r.max_km).wavelength_nm

    @property
    def ratio(self) -> float:
        if self.baseline_max_km == 0:
            return 0.0
        return min(self.min_max_km / self.baseline_max_km, 1.0)


def distance_map_over_wavelengths(
    budgets: Sequence[ThaBudget],
    d_strategy=coherent_distinguishability,
    params: ChannelParams = FIG6_PARAMS,
    grid_km: float = DEFAULT_GRID_KM,
    tol_km: float = DEFAULT_TOL_KM,
) -> DistanceMap:
    """Maximum secure distance for each wavelength's Trojan photon number."""
    if not budgets:
        raise DomainError("no budgets given")
    strategy = resolve_d_strategy(d_strategy)
    cache: dict[float, float] = {}
    rows = []
    for b in budgets:
        if b.mu_out not in cache:
            d = strategy(b.mu_out, params)
            cache[b.mu_out] = max_secure_distance(b.mu_out, d, params, grid_km, tol_km)
        rows.append(DistanceMapRow(b.wavelength_nm, b.mu_out, cache[b.mu_out]))
    baseline = max_secure_distance(0.0, 0.0, params, grid_km, tol_km)
    return DistanceMap(tuple(rows), baseline)


def _distance_grid(l_max_km: float, step_km: float):
    if not step_km > 0:
        raise DomainError(f"step_km must be > 0, got {step_km!r}")
    if not l_max_km >= 0:
        raise DomainError(f"l_max_km must be >= 0, got {l_max_km!r}")
    n = int(np.floor(l_max_km / step_km + 1e-9))
    return [i * step_km for i in range(n + 1)]


def rate_curves_sweep(
    mu_out_values: Sequence[float],
    params: ChannelParams = FIG6_PARAMS,
    l_max_km: float = 300.0,
    step_km: float = 1.0,
    d_strategy=coherent_distinguishability,
) -> np.ndarray:
    """Plot-ready table with columns ``(mu_out, distance_km, rate)``.

    Rates are clamped at 0.
    """
    strategy = resolve_d_strategy(d_strategy)
    distances = _distance_grid(l_max_km, step_km)
    rows = []
    for m in mu_out_values:
        d = strategy(m, params)
        rows.extend((m, L, max(key_rate_at(L, m, d, params), 0.0)) for L in distances)
    return np.array(rows, dtype=float).reshape(-1, 3)
