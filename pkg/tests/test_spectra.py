import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwdm_tha.exceptions import CoverageError, NoOverlapError, OrderingError, SpectrumParseError
from dwdm_tha.spectra import (
    IsolationProfile,
    Spectrum,
    attenuation_difference,
    conversion_fractions,
    dbm_to_mw,
    detect_peaks,
    format_isolation,
    format_spectrum,
    isolation_from_pair,
    max_combine,
    mw_to_dbm,
    parse_isolation,
    parse_spectrum,
    synthesize_comb,
    synthesize_lines,
)

FIG3F = [1548.7, 1549.7, 1550.7, 1551.7]


def test_parse_three_rows():
    s = parse_spectrum("wavelength_nm,power_dbm\n1550.0,-10\n1550.002,-9.5\n1550.004,-11\n")
    assert len(s) == 3
    assert s.resolution_pm == pytest.approx(2.0)
    np.testing.assert_allclose(s.power_dbm, [-10, -9.5, -11])


def test_parse_crlf_and_stream():
    src = io.StringIO("wavelength_nm,power_dbm\r\n1.0,2.0\r\n3.0,4.0\r\n")
    s = parse_spectrum(src)
    assert list(s.wavelength_nm) == [1.0, 3.0]


def test_parse_rejects_decreasing():
    with pytest.raises(OrderingError) as err:
        parse_spectrum("wavelength_nm,power_dbm\n1550.1,-10\n1550.0,-10\n")
    assert err.value.line == 3


@pytest.mark.parametrize(
    "text, line",
    [
        ("wavelength_nm,power_dbm\n", 2),
        ("", 1),
        ("wl,p\n1,2\n2,3\n", 1),
        ("wavelength_nm,power_dbm\n1550.0,abc\n1551,2\n", 2),
        ("wavelength_nm,power_dbm\n1550.0,1,2\n", 2),
        ("wavelength_nm,power_dbm\n1,550.0,-3\n", 2),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(SpectrumParseError) as err:
        parse_spectrum(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_spectrum_round_trip_text():
    s = synthesize_comb(n_side=1)
    back = parse_spectrum(format_spectrum(s))
    np.testing.assert_allclose(back.wavelength_nm, s.wavelength_nm, rtol=1e-12)
    np.testing.assert_allclose(back.power_dbm, s.power_dbm, rtol=1e-8)


def test_spectrum_is_immutable():
    s = synthesize_comb(n_side=0)
    with pytest.raises(ValueError):
        s.power_dbm[0] = 3.0


@given(st.floats(-100, 40))
def test_dbm_mw_inverse(p):
    assert abs(float(mw_to_dbm(dbm_to_mw(p))) - p) <= 1e-12 * max(1.0, abs(p))


def test_synth_single_line():
    s = synthesize_comb(center_nm=1550.0, n_side=0, center_power_dbm=-3.0)
    peaks = detect_peaks(s)
    assert len(peaks) == 1
    assert peaks[0].center_nm == pytest.approx(1550.0, abs=1e-6)
    assert peaks[0].height_dbm == pytest.approx(-3.0, abs=0.01)


def test_synth_three_lines_symmetric():
    s = synthesize_comb(center_nm=1550.0, n_side=1, decay_db_per_line=10.0, center_power_dbm=0.0)
    peaks = detect_peaks(s)
    assert len(peaks) == 3
    heights = [p.height_dbm for p in peaks]
    assert heights[0] == pytest.approx(-10.0, abs=0.05)
    assert heights[2] == pytest.approx(-10.0, abs=0.05)
    assert heights[1] == pytest.approx(0.0, abs=0.05)
    assert peaks[1].center_nm - peaks[0].center_nm == pytest.approx(peaks[2].center_nm - peaks[1].center_nm, abs=1e-6)


def test_fig3f_comb_peak_positions():
    s = synthesize_lines(FIG3F, [-30.0, -12.0, -8.0, -24.0], linewidth_nm=0.05)
    peaks = detect_peaks(s)
    assert len(peaks) == 4
    np.testing.assert_allclose(peaks.centers_nm, FIG3F, atol=0.02)
    assert np.diff(peaks.centers_nm) == pytest.approx([1.0, 1.0, 1.0], abs=0.02)


def test_flat_spectrum_has_no_peaks():
    wl = 1550 + 0.002 * np.arange(500)
    assert len(detect_peaks(Spectrum(wl, np.full(500, -65.0)))) == 0


def test_gaussian_integral_matches_analytic():
    fwhm, window = 0.05, 0.4
    s = synthesize_lines([1550.0], [0.0], fwhm, noise_floor_dbm=-120.0)
    (peak,) = detect_peaks(s, noise_floor_dbm=-120.0, window_nm=window)
    sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
    analytic = sigma * math.sqrt(2 * math.pi) * math.erf(window / 2 / (sigma * math.sqrt(2))) / 0.002
    assert peak.integrated_mw == pytest.approx(analytic, rel=0.01)
    assert peak.integrated_mw >= dbm_to_mw(peak.height_dbm)


def test_close_maxima_merge():
    s = synthesize_lines([1550.0, 1550.2], [0.0, -3.0], 0.02)
    assert len(detect_peaks(s, min_separation_nm=0.5)) == 1
    assert len(detect_peaks(s, min_separation_nm=0.1)) == 2


@pytest.mark.parametrize("linewidth", [0.02, 0.05, 0.1])
@pytest.mark.parametrize("n_side", [0, 1, 3])
def test_comb_round_trip(linewidth, n_side):
    spacing = 10 * linewidth * 1.5
    s = synthesize_comb(center_nm=1550.3, spacing_nm=spacing, n_side=n_side, linewidth_nm=linewidth,
                        decay_db_per_line=6.0)
    peaks = detect_peaks(s, min_separation_nm=spacing / 2)
    expected = 1550.3 + spacing * np.arange(-n_side, n_side + 1)
    assert len(peaks) == expected.size
    assert np.max(np.abs(peaks.centers_nm - expected)) <= s.resolution_pm / 1000


def test_conversion_fraction_identity():
    s = synthesize_lines([1550.7], [0.0], 0.05, start_nm=1550.0, stop_nm=1551.4)
    fr = conversion_fractions(s, s, detect_peaks(s))
    assert fr[0][1] == pytest.approx(1.0, abs=0.01)


def test_conversion_fraction_known_partition():
    com = synthesize_lines([1550.7], [0.0], 0.05, start_nm=1547.7, stop_nm=1552.7)
    out = synthesize_lines([1549.7, 1550.7], [10 * math.log10(0.1), 10 * math.log10(0.5)], 0.05,
                           start_nm=1547.7, stop_nm=1552.7)
    fr = dict(conversion_fractions(com, out, detect_peaks(out)))
    got = {round(k, 1): v for k, v in fr.items()}
    assert got[1549.7] == pytest.approx(0.10, abs=0.005)
    assert got[1550.7] == pytest.approx(0.50, abs=0.005)
    assert sum(fr.values()) <= 1.01


def test_conversion_fraction_noise_only():
    com = synthesize_lines([1550.7], [0.0], 0.05, start_nm=1548.0, stop_nm=1552.0)
    out = synthesize_lines([], [], 0.05, start_nm=1548.0, stop_nm=1552.0)
    peaks = detect_peaks(com)
    assert conversion_fractions(com, out, peaks)[0][1] == pytest.approx(0.0, abs=1e-5)


def test_conversion_fraction_coverage():
    com = synthesize_lines([1550.7], [0.0], 0.05, start_nm=1550.0, stop_nm=1551.5)
    out = synthesize_lines([1549.0], [0.0], 0.05, start_nm=1548.0, stop_nm=1551.5)
    with pytest.raises(CoverageError):
        conversion_fractions(com, out, detect_peaks(out))


def _flat(offset=0.0, slope=0.0, start=1540.0, n=2001, step=0.01):
    wl = start + step * np.arange(n)
    return Spectrum(wl, -10.0 - offset - slope * (wl - 1550.0), step * 1000)


def test_isolation_identical_is_zero():
    s = _flat()
    prof = isolation_from_pair(s, s)
    assert np.all(prof.attenuation_db == 0.0)
    assert prof.clamped_count == 0


def test_isolation_constant_offset():
    prof = isolation_from_pair(_flat(), _flat(offset=30.0))
    np.testing.assert_allclose(prof.attenuation_db, 30.0, atol=0.01)


def test_isolation_sloped():
    without = _flat()
    wl = without.wavelength_nm
    with_dut = Spectrum(wl, without.power_dbm - (20 + 0.1 * (wl - 1550.0)), 10.0)
    prof = isolation_from_pair(without, with_dut)
    np.testing.assert_allclose(prof.attenuation_db, 20 + 0.1 * (wl - 1550.0), atol=0.01)


def test_isolation_clamps_and_counts(caplog):
    prof = isolation_from_pair(_flat(offset=5.0), _flat())
    assert np.all(prof.attenuation_db == 0.0)
    assert prof.clamped_count == 2001


def test_isolation_antisymmetric():
    a, b = _flat(slope=0.3), _flat(offset=4.0)
    _, ab = attenuation_difference(a, b)
    _, ba = attenuation_difference(b, a)
    np.testing.assert_allclose(ab, -ba, atol=1e-12)


def test_isolation_overlap_grid_and_no_overlap():
    a = _flat(start=1540.0, n=1001)
    b = _flat(start=1545.0, n=1001, offset=3.0)
    prof = isolation_from_pair(a, b)
    assert prof.wavelength_nm[0] >= 1545.0 and prof.wavelength_nm[-1] <= 1550.0 + 1e-9
    np.testing.assert_allclose(prof.attenuation_db, 3.0, atol=1e-9)
    with pytest.raises(NoOverlapError):
        isolation_from_pair(_flat(start=1500.0, n=10), _flat(start=1600.0, n=10))


def test_isolation_profile_csv_round_trip():
    prof = IsolationProfile([1549.0, 1550.0, 1551.0], [80.0, 85.5, 90.0])
    back = parse_isolation(format_isolation(prof))
    np.testing.assert_array_equal(back.wavelength_nm, prof.wavelength_nm)
    np.testing.assert_array_equal(back.attenuation_db, prof.attenuation_db)
    assert back.attenuation_at(1549.5) == pytest.approx(82.75)
    with pytest.raises(CoverageError):
        back.attenuation_at(1560.0)


def test_isolation_csv_rejects_negative():
    with pytest.raises(SpectrumParseError):
        parse_isolation("wavelength_nm,attenuation_db\n1550,-1\n1551,2\n")


def test_max_combine():
    a = _flat()
    b = Spectrum(a.wavelength_nm, a.power_dbm[::-1], a.resolution_pm)
    m = max_combine([a, b])
    np.testing.assert_array_equal(m.power_dbm, np.maximum(a.power_dbm, b.power_dbm))
