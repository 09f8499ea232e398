import numpy as np
import pytest

import oracles
from dwdm_tha.core import FIG6_PARAMS, forward_observables, glp_key_rate, poisson_single_photon_prob
from dwdm_tha.decoy import decoy_bounds
from dwdm_tha.exceptions import DomainError
from dwdm_tha.solver import (
    coherent_distinguishability,
    constant_distinguishability,
    distance_map_over_wavelengths,
    key_rate_at,
    max_secure_distance,
    no_distinguishability,
    rate_curves_sweep,
    resolve_d_strategy,
    scan_distance,
)
from dwdm_tha.spectra import IsolationProfile
from dwdm_tha.tha import budget_from_fraction

P = FIG6_PARAMS

# dense 0.1 km scan with the independent float oracle: last positive grid point
BASELINE_DENSE_KM = 276.8


def plain_rate(L):
    obs_mu = forward_observables(P.mu, L, P)
    obs_nu = forward_observables(P.nu, L, P)
    b = decoy_bounds(obs_mu, obs_nu, P)
    return glp_key_rate(obs_mu, b.y1_lower, b.e1_upper, poisson_single_photon_prob(P.mu), P)


def test_no_attack_equals_plain_rate():
    assert key_rate_at(50.0, 0.0, 0.0, P) == plain_rate(50.0)
    assert key_rate_at(50.0, 0.0, None, P) == plain_rate(50.0)


def test_rate_at_50km_positive():
    assert key_rate_at(50.0, 0.0, 0.0, P) > 0
    assert key_rate_at(50.0, 0.0, 0.0, P) == pytest.approx(float(oracles.gllp_rate_no_tha(50.0)), rel=1e-12)


def test_attack_reduces_rate():
    assert key_rate_at(50.0, 1e-6, 0.0, P) < key_rate_at(50.0, 0.0, 0.0, P)


@pytest.mark.parametrize("mu_out", [0.0, 1e-12, 1e-6, 0.1])
def test_beyond_cutoff_non_positive(mu_out):
    assert key_rate_at(300.0, mu_out, None, P) <= 0


def test_dense_scan_oracle():
    grid = np.arange(0, 3501) * 0.1
    positive = [L for L in grid if oracles.float_rate_no_tha(L) > 0]
    assert positive[-1] == pytest.approx(BASELINE_DENSE_KM)
    assert oracles.float_rate_no_tha(BASELINE_DENSE_KM + 0.1) <= 0


def test_baseline_distance():
    base = max_secure_distance(0.0, 0.0, P)
    assert base > 100
    assert BASELINE_DENSE_KM <= base < BASELINE_DENSE_KM + 0.1


@pytest.mark.parametrize("mu_out", [0.0, 1e-12, 1e-9, 1e-6])
def test_bisection_brackets_sign_change(mu_out):
    tol = 0.01
    L = max_secure_distance(mu_out, None, P, tol_km=tol)
    assert key_rate_at(L, mu_out, None, P) > 0
    assert key_rate_at(L + tol, mu_out, None, P) <= 0


def test_huge_leak_gives_zero():
    assert max_secure_distance(1.0, None, P) == 0.0


def test_max_distance_monotone_in_mu_out():
    values = [max_secure_distance(m, None, P) for m in (0.0, 1e-12, 1e-9, 1e-6, 1e-3)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_search_limit_returned_when_never_negative():
    assert max_secure_distance(0.0, 0.0, P, search_limit_km=50.0) == 50.0


def test_bad_grid():
    with pytest.raises(DomainError):
        max_secure_distance(0.0, 0.0, P, grid_km=0.0)


def test_scan_distance():
    scan = scan_distance(1e-9, None, P, l_max_km=100.0, step_km=10.0)
    assert [L for L, _ in scan.points] == [10.0 * i for i in range(11)]
    assert scan.max_secure_km <= scan.baseline_max_km
    assert 0 <= scan.ratio <= 1


def test_deterministic():
    a = rate_curves_sweep([0.0, 1e-9], P, 280.0, 2.0)
    b = rate_curves_sweep([0.0, 1e-9], P, 280.0, 2.0)
    assert a.tobytes() == b.tobytes()


def test_rate_curves_single_baseline():
    t = rate_curves_sweep([0.0], P, 10.0, 1.0)
    assert t.shape == (11, 3)
    assert np.all(t[:, 0] == 0.0)
    assert np.all(t[:, 2] >= 0)


def test_rate_curves_dominated_by_baseline():
    mus = [0.0, 1e-12, 1e-9, 1e-6]
    t = rate_curves_sweep(mus, P, 300.0, 1.0)
    curves = [t[t[:, 0] == m][:, 2] for m in mus]
    for lo, hi in zip(curves, curves[1:]):
        assert np.all(hi <= lo)


def test_distance_map_basics():
    iso = IsolationProfile([1540.0, 1560.0], [95.0, 95.0])
    zero = budget_from_fraction(1e8, 1550.0, 0.0, iso)
    dmap = distance_map_over_wavelengths([zero], "coherent", P)
    assert dmap.rows[0].max_km == dmap.baseline_max_km
    assert dmap.ratio == 1.0

    a = budget_from_fraction(1e8, 1549.7, 0.01, iso)
    b = budget_from_fraction(1e8, 1550.7, 0.2, iso)
    assert a.mu_out < b.mu_out
    dmap = distance_map_over_wavelengths([a, b], "coherent", P)
    assert dmap.rows[0].max_km >= dmap.rows[1].max_km
    assert dmap.worst_wavelength_nm == 1550.7
    assert dmap.min_max_km == dmap.rows[1].max_km


def test_distance_map_worst_at_largest_budget():
    iso = IsolationProfile([1540.0, 1560.0], [90.0, 100.0])
    fractions = {1548.7: 0.01, 1549.7: 0.2, 1550.7: 0.3, 1551.7: 0.05}
    budgets = [budget_from_fraction(1e8, wl, f, iso) for wl, f in fractions.items()]
    dmap = distance_map_over_wavelengths(budgets, "coherent", P)
    worst = max(budgets, key=lambda b: b.mu_out).wavelength_nm
    assert dmap.worst_wavelength_nm == worst


def test_distance_map_empty():
    with pytest.raises(DomainError):
        distance_map_over_wavelengths([], "coherent", P)


def test_strategies():
    assert resolve_d_strategy("coherent") is coherent_distinguishability
    assert resolve_d_strategy("none") is no_distinguishability
    assert resolve_d_strategy("constant:0.25")(1e-3, P) == 0.25
    assert resolve_d_strategy(constant_distinguishability(0.1))(0, P) == 0.1
    assert coherent_distinguishability(1e-12, P) == pytest.approx(1e-6 * (1 - np.sqrt(0.2)), rel=1e-6)
    for bad in ("bogus", "constant:x", "constant:2"):
        with pytest.raises(DomainError):
            resolve_d_strategy(bad)
