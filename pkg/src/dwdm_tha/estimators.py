"""scikit-learn style wrappers around the functional pipeline.

The three estimators chain like an ordinary ``Pipeline``::

    fractions = ConversionFractionEstimator().fit(com).transform(passed)
    pipe = make_pipeline(ThaBudgetTransformer(injected_photons=1e8),
                         SecureDistanceRegressor())
    max_km = pipe.fit(fractions).predict(fractions)

Spectra may be given as :class:`~dwdm_tha.spectra.Spectrum` objects or as
``(n, 2)`` arrays of ``(wavelength_nm, power_dbm)``.
"""

from __future__ import annotations

from dataclasses import fields

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import spectra as sp
from .core import ChannelParams, FIG6_PARAMS
from .solver import max_secure_distance, resolve_d_strategy
from .tha import budget_from_fraction

__all__ = [
    "check_spectrum",
    "check_mu_out",
    "ConversionFractionEstimator",
    "ThaBudgetTransformer",
    "SecureDistanceRegressor",
]


def check_spectrum(X, resolution_pm=None) -> sp.Spectrum:
    """Coerce ``X`` into a validated :class:`Spectrum`."""
    if isinstance(X, sp.Spectrum):
        return X
    arr = check_array(X, ensure_min_samples=2, dtype=float)
    if arr.shape[1] != 2:
        raise ValueError(f"spectrum array must have 2 columns, got {arr.shape[1]}")
    if resolution_pm is None:
        resolution_pm = float(np.median(np.diff(arr[:, 0]))) * 1000.0
    return sp.Spectrum(arr[:, 0], arr[:, 1], resolution_pm)


def check_mu_out(X) -> np.ndarray:
    """Trojan photon numbers from a 1-D array or the last column of a 2-D one."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr = check_array(arr, dtype=float)
    mu_out = arr[:, -1]
    if np.any(mu_out < 0):
        raise ValueError("mu_out values must be >= 0")
    return mu_out


class ConversionFractionEstimator(TransformerMixin, BaseEstimator):
    """Fit on the injected (COM-port) spectrum; transform output-port spectra
    into ``(wavelength_nm, fraction)`` rows, one per detected line."""

    def __init__(self, noise_floor_dbm=sp.DEFAULT_NOISE_FLOOR_DBM, min_separation_nm=0.5,
                 window_nm=sp.DEFAULT_WINDOW_NM, threshold_db=3.0):
        self.noise_floor_dbm = noise_floor_dbm
        self.min_separation_nm = min_separation_nm
        self.window_nm = window_nm
        self.threshold_db = threshold_db

    def fit(self, X, y=None):
        self.input_spectrum_ = check_spectrum(X)
        self.input_total_mw_ = self.input_spectrum_.integrate_mw()
        return self

    def detect(self, X) -> sp.PeakSet:
        return sp.detect_peaks(check_spectrum(X), self.noise_floor_dbm, self.min_separation_nm,
                               self.window_nm, self.threshold_db)

    def transform(self, X):
        check_is_fitted(self, "input_total_mw_")
        out = check_spectrum(X)
        self.peaks_ = self.detect(out)
        rows = sp.conversion_fractions(self.input_spectrum_, out, self.peaks_)
        return np.array(rows, dtype=float).reshape(-1, 2)


class ThaBudgetTransformer(TransformerMixin, BaseEstimator):
    """``(wavelength_nm, fraction)`` rows to budget rows
    ``(wavelength_nm, fraction, roundtrip_isolation_db, mu_out)``.

    ``isolation`` is an :class:`IsolationProfile`, a CSV path, or ``None``
    for the bundled example profile.
    """

    def __init__(self, injected_photons=1e8, reflectivity=1.0, isolation=None, isolation_passes=2):
        self.injected_photons = injected_photons
        self.reflectivity = reflectivity
        self.isolation = isolation
        self.isolation_passes = isolation_passes

    def _profile(self):
        if isinstance(self.isolation, sp.IsolationProfile):
            return self.isolation
        from .config import EXAMPLE_ISOLATION

        return sp.read_isolation(self.isolation if self.isolation is not None else EXAMPLE_ISOLATION)

    def fit(self, X, y=None):
        check_array(X, dtype=float, ensure_min_samples=0)
        self.isolation_profile_ = self._profile()
        return self

    def transform(self, X):
        check_is_fitted(self, "isolation_profile_")
        arr = check_array(X, dtype=float, ensure_min_samples=0)
        self.budgets_ = [
            budget_from_fraction(self.injected_photons, wl, frac, self.isolation_profile_,
                                 self.reflectivity, self.isolation_passes)
            for wl, frac in arr[:, :2]
        ]
        return np.array(
            [(b.wavelength_nm, b.conversion_fraction, b.roundtrip_isolation_db, b.mu_out) for b in self.budgets_],
            dtype=float,
        ).reshape(-1, 4)


class SecureDistanceRegressor(RegressorMixin, BaseEstimator):
    """Predict the maximum secure distance (km) from Trojan photon numbers.

    Hyper-parameters are the channel constants plus the distinguishability
    strategy and search resolution. ``fit`` ignores its data apart from
    validation and computes the attack-free ``baseline_max_km_``.
    """

    def __init__(self, alpha_db_per_km=FIG6_PARAMS.alpha_db_per_km, eta_det=FIG6_PARAMS.eta_det,
                 e_det=FIG6_PARAMS.e_det, y0=FIG6_PARAMS.y0, e0=FIG6_PARAMS.e0, f_ec=FIG6_PARAMS.f_ec,
                 q=FIG6_PARAMS.q, mu=FIG6_PARAMS.mu, nu=FIG6_PARAMS.nu, d_strategy="coherent",
                 grid_km=1.0, tol_km=0.01):
        self.alpha_db_per_km = alpha_db_per_km
        self.eta_det = eta_det
        self.e_det = e_det
        self.y0 = y0
        self.e0 = e0
        self.f_ec = f_ec
        self.q = q
        self.mu = mu
        self.nu = nu
        self.d_strategy = d_strategy
        self.grid_km = grid_km
        self.tol_km = tol_km

    @classmethod
    def from_params(cls, params: ChannelParams, **kwargs):
        return cls(**{f.name: getattr(params, f.name) for f in fields(ChannelParams)}, **kwargs)

    def fit(self, X=None, y=None):
        if X is not None:
            check_mu_out(X)
        self.params_ = ChannelParams(**{f.name: getattr(self, f.name) for f in fields(ChannelParams)})
        self.d_strategy_ = resolve_d_strategy(self.d_strategy)
        self.baseline_max_km_ = max_secure_distance(0.0, 0.0, self.params_, self.grid_km, self.tol_km)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        out = []
        for m in check_mu_out(X):
            d = self.d_strategy_(m, self.params_)
            out.append(max_secure_distance(m, d, self.params_, self.grid_km, self.tol_km))
        return np.array(out)

    def predict_ratio(self, X):
        """Predicted distance relative to the attack-free baseline."""
        km = self.predict(X)
        if self.baseline_max_km_ == 0:
            return np.zeros_like(km)
        return np.minimum(km / self.baseline_max_km_, 1.0)
