"""Optical spectrum handling: CSV traces, comb peak detection, conversion
fractions, with/without-DUT isolation profiles and synthetic comb spectra.

Powers are carried in dBm. Each sample is read as the power collected in
one resolution bin, so the integrated power of a window is the trapezoidal
integral of linear power divided by the sampling step (a bin-count sum that
is independent of the step size for smooth lines).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np
from scipy.signal import find_peaks

from .exceptions import (
    CoverageError,
    DomainError,
    NoOverlapError,
    OrderingError,
    SpectrumParseError,
)

log = logging.getLogger(__name__)

SPECTRUM_HEADER = ("wavelength_nm", "power_dbm")
ISOLATION_HEADER = ("wavelength_nm", "attenuation_db")

DEFAULT_NOISE_FLOOR_DBM = -65.0
DEFAULT_WINDOW_NM = 0.4
DEFAULT_RESOLUTION_PM = 2.0


def dbm_to_mw(p_dbm):
    return np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)


def mw_to_dbm(p_mw):
    return 10.0 * np.log10(np.asarray(p_mw, dtype=float))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Spectrum:
    wavelength_nm: np.ndarray
    power_dbm: np.ndarray
    resolution_pm: float = DEFAULT_RESOLUTION_PM

    def __post_init__(self):
        wl = _frozen(self.wavelength_nm)
        p = _frozen(self.power_dbm)
        if wl.ndim != 1 or wl.shape != p.shape:
            raise DomainError("wavelength and power must be 1-D arrays of equal length")
        if wl.size < 2:
            raise DomainError("a spectrum needs at least 2 samples")
        if not (np.all(np.isfinite(wl)) and np.all(np.isfinite(p))):
            raise DomainError("spectrum samples must be finite")
        if np.any(np.diff(wl) <= 0):
            raise OrderingError("wavelengths must be strictly increasing")
        if not self.resolution_pm > 0:
            raise DomainError(f"resolution_pm must be > 0, got {self.resolution_pm!r}")
        object.__setattr__(self, "wavelength_nm", wl)
        object.__setattr__(self, "power_dbm", p)
        object.__setattr__(self, "resolution_pm", float(self.resolution_pm))

    def __len__(self):
        return self.wavelength_nm.size

    @property
    def power_mw(self):
        return dbm_to_mw(self.power_dbm)

    @property
    def step_nm(self) -> float:
        return float(np.median(np.diff(self.wavelength_nm)))

    def covers(self, lo: float, hi: float) -> bool:
        return self.wavelength_nm[0] <= lo and hi <= self.wavelength_nm[-1]

    def integrate_mw(self, lo: float | None = None, hi: float | None = None) -> float:
        """Integrated linear power over ``[lo, hi]`` (whole trace by default)."""
        wl, p = self.wavelength_nm, self.power_mw
        lo = wl[0] if lo is None else lo
        hi = wl[-1] if hi is None else hi
        if not self.covers(lo, hi):
            raise CoverageError(
                f"window [{lo:.4f}, {hi:.4f}] nm outside spectrum "
                f"[{wl[0]:.4f}, {wl[-1]:.4f}] nm"
            )
        inner = (wl > lo) & (wl < hi)
        x = np.concatenate(([lo], wl[inner], [hi]))
        y = np.concatenate(([np.interp(lo, wl, p)], p[inner], [np.interp(hi, wl, p)]))
        return float(np.trapezoid(y, x) / self.step_nm)


@dataclass(frozen=True)
class Peak:
    center_nm: float
    height_dbm: float
    integrated_mw: float
    window_nm: float


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[Peak, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "peaks", tuple(self.peaks))
        centers = [p.center_nm for p in self.peaks]
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise OrderingError("peak centers must be strictly increasing")

    def __len__(self):
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i):
        return self.peaks[i]

    @property
    def centers_nm(self):
        return np.array([p.center_nm for p in self.peaks])


@dataclass(frozen=True, eq=False)
class IsolationProfile:
    """One-way attenuation versus wavelength, linearly interpolated."""

    wavelength_nm: np.ndarray
    attenuation_db: np.ndarray
    clamped_count: int = 0

    def __post_init__(self):
        wl = _frozen(self.wavelength_nm)
        att = _frozen(self.attenuation_db)
        if wl.ndim != 1 or wl.shape != att.shape or wl.size < 1:
            raise DomainError("isolation profile needs matching non-empty 1-D arrays")
        if np.any(np.diff(wl) <= 0):
            raise OrderingError("isolation wavelengths must be strictly increasing")
        if not np.all(np.isfinite(att)) or np.any(att < 0):
            raise DomainError("attenuation must be finite and >= 0 dB")
        object.__setattr__(self, "wavelength_nm", wl)
        object.__setattr__(self, "attenuation_db", att)

    def attenuation_at(self, wavelength_nm):
        w = np.asarray(wavelength_nm, dtype=float)
        if np.any(w < self.wavelength_nm[0]) or np.any(w > self.wavelength_nm[-1]):
            raise CoverageError(
                f"wavelength {wavelength_nm} nm outside isolation profile "
                f"[{self.wavelength_nm[0]}, {self.wavelength_nm[-1]}] nm"
            )
        out = np.interp(w, self.wavelength_nm, self.attenuation_db)
        return float(out) if out.ndim == 0 else out


# --- CSV I/O ---------------------------------------------------------------

def _read_two_columns(source: TextIO | str, header: Sequence[str]):
    if isinstance(source, str):
        source = io.StringIO(source)
    text = source.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()
    if not lines:
        raise SpectrumParseError("empty input", line=1)
    got = tuple(c.strip() for c in lines[0].lstrip("﻿").split(","))
    if got != tuple(header):
        raise SpectrumParseError(f"expected header {','.join(header)!r}, got {lines[0]!r}", line=1)
    xs, ys = [], []
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise SpectrumParseError(f"expected 2 fields, got {len(row)}", line=lineno)
        try:
            x, y = float(row[0]), float(row[1])
        except ValueError:
            raise SpectrumParseError(f"non-numeric field in {','.join(row)!r}", line=lineno) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise SpectrumParseError("non-finite value", line=lineno)
        if xs and x <= xs[-1]:
            raise OrderingError(
                f"wavelength {x} not greater than previous {xs[-1]}", line=lineno
            )
        xs.append(x)
        ys.append(y)
    if not xs:
        raise SpectrumParseError("no data rows", line=2)
    return np.array(xs), np.array(ys)


def parse_spectrum(source: TextIO | str, resolution_pm: float | None = None) -> Spectrum:
    """Read a ``wavelength_nm,power_dbm`` CSV trace.

    The resolution defaults to the median sample spacing.
    """
    wl, p = _read_two_columns(source, SPECTRUM_HEADER)
    if wl.size < 2:
        raise SpectrumParseError("a spectrum needs at least 2 samples")
    if resolution_pm is None:
        resolution_pm = float(np.median(np.diff(wl))) * 1000.0
    return Spectrum(wl, p, resolution_pm)


def parse_isolation(source: TextIO | str) -> IsolationProfile:
    wl, att = _read_two_columns(source, ISOLATION_HEADER)
    if np.any(att < 0):
        bad = int(np.argmax(att < 0))
        raise SpectrumParseError(f"negative attenuation {att[bad]} dB", line=bad + 2)
    return IsolationProfile(wl, att)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _write_rows(header, rows) -> str:
    out = [",".join(header)]
    out.extend(",".join(_fmt(v) for v in r) for r in rows)
    return "\n".join(out) + "\n"


def format_spectrum(s: Spectrum) -> str:
    return _write_rows(SPECTRUM_HEADER, zip(s.wavelength_nm, s.power_dbm))


def format_isolation(profile: IsolationProfile) -> str:
    return _write_rows(ISOLATION_HEADER, zip(profile.wavelength_nm, profile.attenuation_db))


def read_spectrum(path, resolution_pm=None) -> Spectrum:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_spectrum(fh, resolution_pm)


def read_isolation(path) -> IsolationProfile:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_isolation(fh)


def write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --- analysis --------------------------------------------------------------

def _refine_center(wl, p_dbm, i):
    # A Gaussian line is a parabola in dB, so the 3-point vertex is exact
    # for noise-free Gaussian samples.
    if i == 0 or i == wl.size - 1:
        return float(wl[i])
    y0, y1, y2 = p_dbm[i - 1], p_dbm[i], p_dbm[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(wl[i])
    shift = 0.5 * (y0 - y2) / denom
    h_left, h_right = wl[i] - wl[i - 1], wl[i + 1] - wl[i]
    return float(wl[i] + shift * (h_right if shift > 0 else h_left))


def detect_peaks(
    s: Spectrum,
    noise_floor_dbm: float = DEFAULT_NOISE_FLOOR_DBM,
    min_separation_nm: float = 0.5,
    window_nm: float = DEFAULT_WINDOW_NM,
    threshold_db: float = 3.0,
) -> PeakSet:
    """Find spectral lines standing above the noise floor.

    A line must rise at least ``threshold_db`` above ``noise_floor_dbm``.
    Maxima closer than ``min_separation_nm`` are merged into the higher one.
    Integration windows are clipped to the trace edges.
    """
    if not min_separation_nm > 0:
        raise DomainError(f"min_separation_nm must be > 0, got {min_separation_nm!r}")
    if not window_nm > 0:
        raise DomainError(f"window_nm must be > 0, got {window_nm!r}")
    wl, p = s.wavelength_nm, s.power_dbm
    distance = max(1, int(math.ceil(min_separation_nm / s.step_nm)))
    idx, _ = find_peaks(p, height=noise_floor_dbm + threshold_db, distance=distance)
    half = window_nm / 2
    peaks = []
    for i in idx:
        center = _refine_center(wl, p, i)
        lo, hi = max(center - half, wl[0]), min(center + half, wl[-1])
        peaks.append(Peak(center, float(p[i]), s.integrate_mw(lo, hi), hi - lo))
    return PeakSet(peaks)


def conversion_fractions(input_com: Spectrum, output_pass: Spectrum, peaks: PeakSet):
    """Fraction of the injected power found in each output peak window.

    Returns ``[(wavelength_nm, fraction), ...]``; fractions are re-integrated
    on ``output_pass`` and capped at 1.
    """
    total_in = input_com.integrate_mw()
    if not total_in > 0:
        raise DomainError("input spectrum carries no power")
    result = []
    for pk in peaks:
        lo, hi = pk.center_nm - pk.window_nm / 2, pk.center_nm + pk.window_nm / 2
        if not input_com.covers(lo, hi):
            raise CoverageError(f"peak window at {pk.center_nm:.4f} nm not covered by input spectrum")
        if not output_pass.covers(lo, hi):
            raise CoverageError(f"peak window at {pk.center_nm:.4f} nm not covered by output spectrum")
        result.append((pk.center_nm, min(output_pass.integrate_mw(lo, hi) / total_in, 1.0)))
    return result


def attenuation_difference(without_dut: Spectrum, with_dut: Spectrum):
    """Raw ``P_without - P_with`` in dB on the overlap of both traces.

    The grid is that of ``without_dut`` inside the overlap; ``with_dut`` is
    linearly interpolated onto it. No clamping.
    """
    lo = max(without_dut.wavelength_nm[0], with_dut.wavelength_nm[0])
    hi = min(without_dut.wavelength_nm[-1], with_dut.wavelength_nm[-1])
    wl = without_dut.wavelength_nm
    mask = (wl >= lo) & (wl <= hi)
    if lo > hi or not mask.any():
        raise NoOverlapError("spectra do not overlap in wavelength")
    grid = wl[mask]
    other = np.interp(grid, with_dut.wavelength_nm, with_dut.power_dbm)
    return grid, without_dut.power_dbm[mask] - other


def isolation_from_pair(without_dut: Spectrum, with_dut: Spectrum) -> IsolationProfile:
    """Insertion isolation of a device from traces taken without and with it."""
    grid, att = attenuation_difference(without_dut, with_dut)
    negative = int(np.count_nonzero(att < 0))
    if negative:
        log.warning("clamped %d negative attenuation values to 0 dB", negative)
    return IsolationProfile(grid, np.maximum(att, 0.0), clamped_count=negative)


def max_combine(spectra: Iterable[Spectrum]) -> Spectrum:
    """Pointwise maximum of traces sharing one wavelength grid (hold-max)."""
    spectra = list(spectra)
    if not spectra:
        raise DomainError("nothing to combine")
    ref = spectra[0]
    for s in spectra[1:]:
        if s.wavelength_nm.shape != ref.wavelength_nm.shape or not np.array_equal(
            s.wavelength_nm, ref.wavelength_nm
        ):
            raise DomainError("max_combine needs identical wavelength grids")
    return Spectrum(ref.wavelength_nm, np.max([s.power_dbm for s in spectra], axis=0), ref.resolution_pm)


# --- synthesis -------------------------------------------------------------

def synthesize_lines(
    centers_nm: Sequence[float],
    powers_dbm: Sequence[float],
    linewidth_nm: float,
    noise_floor_dbm: float = DEFAULT_NOISE_FLOOR_DBM,
    resolution_pm: float = DEFAULT_RESOLUTION_PM,
    start_nm: float | None = None,
    stop_nm: float | None = None,
) -> Spectrum:
    """Gaussian lines (FWHM ``linewidth_nm``) on a flat noise floor.

    Peak powers are per sample; the trace spans ``start_nm``..``stop_nm``,
    by default the outer lines padded by 1 nm.
    """
    centers = np.asarray(centers_nm, dtype=float)
    powers = np.asarray(powers_dbm, dtype=float)
    if centers.shape != powers.shape or centers.ndim != 1:
        raise DomainError("centers and powers must be matching 1-D sequences")
    if not linewidth_nm > 0:
        raise DomainError(f"linewidth_nm must be > 0, got {linewidth_nm!r}")
    if not resolution_pm > 0:
        raise DomainError(f"resolution_pm must be > 0, got {resolution_pm!r}")
    if start_nm is None:
        start_nm = (centers.min() if centers.size else 1550.0) - 1.0
    if stop_nm is None:
        stop_nm = (centers.max() if centers.size else 1550.0) + 1.0
    step = resolution_pm / 1000.0
    n = int(round((stop_nm - start_nm) / step)) + 1
    if n < 2:
        raise DomainError("synthesis span shorter than two samples")
    wl = start_nm + step * np.arange(n)
    sigma = linewidth_nm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    p_mw = np.full(n, float(dbm_to_mw(noise_floor_dbm)))
    for c, pw in zip(centers, powers):
        p_mw += dbm_to_mw(pw) * np.exp(-0.5 * ((wl - c) / sigma) ** 2)
    return Spectrum(wl, mw_to_dbm(p_mw), resolution_pm)


def synthesize_comb(
    center_nm: float = 1550.7,
    spacing_nm: float = 1.0,
    n_side: int = 2,
    center_power_dbm: float = 0.0,
    decay_db_per_line: float = 10.0,
    linewidth_nm: float = 0.05,
    noise_floor_dbm: float = DEFAULT_NOISE_FLOOR_DBM,
    resolution_pm: float = DEFAULT_RESOLUTION_PM,
) -> Spectrum:
    """Symmetric comb: lines at ``center +- k*spacing`` with powers falling by
    ``decay_db_per_line`` per step away from the center."""
    if not spacing_nm > 0:
        raise DomainError(f"spacing_nm must be > 0, got {spacing_nm!r}")
    if n_side < 0 or int(n_side) != n_side:
        raise DomainError(f"n_side must be a non-negative integer, got {n_side!r}")
    ks = np.arange(-int(n_side), int(n_side) + 1)
    centers = center_nm + ks * spacing_nm
    powers = center_power_dbm - np.abs(ks) * decay_db_per_line
    pad = max(1.0, spacing_nm)
    return synthesize_lines(
        centers, powers, linewidth_nm, noise_floor_dbm, resolution_pm,
        start_nm=centers[0] - pad, stop_nm=centers[-1] + pad,
    )
