"""Command-line entry point: ``dwdm-tha {keyrate,budget,maxdist,spectra}``.

Exit codes: 0 success, 2 usage error, 3 input-data error, 4 numeric-domain
error. Failures print one diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import spectra as sp
from .config import EXAMPLE_ISOLATION, RunConfig, load_config
from .exceptions import CoverageError, DomainError, DwdmThaError, SpectrumParseError
from .solver import distance_map_over_wavelengths, max_secure_distance, rate_curves_sweep, resolve_d_strategy
from .tha import ThaBudget, budget_from_fraction

PROG = "dwdm-tha"

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_DOMAIN = 0, 2, 3, 4

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["baseline_max_km", "results", "ratio"],
    "additionalProperties": False,
    "properties": {
        "baseline_max_km": {"type": "number", "minimum": 0},
        "ratio": {"type": "number", "minimum": 0, "maximum": 1},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["mu_out", "max_secure_km", "ratio"],
                "additionalProperties": False,
                "properties": {
                    "mu_out": {"type": "number", "minimum": 0},
                    "max_secure_km": {"type": "number", "minimum": 0},
                    "ratio": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}

BUDGET_HEADER = ("wavelength_nm", "conversion_fraction", "roundtrip_isolation_db", "mu_out")
DISTMAP_HEADER = ("wavelength_nm", "mu_out", "max_km")
CURVES_HEADER = ("mu_out", "distance_km", "key_rate")
PEAKS_HEADER = ("center_nm", "height_dbm", "integrated_mw", "window_nm")


def _fmt(x) -> str:
    return format(float(x), ".9g")


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _round(x):
    return float(_fmt(x))


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    sp.write_text(path, text)
    return path


def _ratio(value, baseline):
    return 0.0 if baseline == 0 else min(value / baseline, 1.0)


def _isolation_path(cfg: RunConfig, override=None) -> Path:
    path = override if override is not None else cfg.isolation_file
    if path is None:
        raise CoverageError("no isolation_file configured")
    # "example" selects the bundled profile
    if Path(path).name == "example":
        return EXAMPLE_ISOLATION
    return Path(path)


def cmd_keyrate(cfg: RunConfig, mu_out_list, out_dir=None) -> dict:
    """Write ``curves.csv`` and ``summary.json``; return the summary."""
    out_dir = Path(out_dir if out_dir is not None else cfg.out_dir)
    mu_out_list = list(mu_out_list) or [0.0]
    for m in mu_out_list:
        if not (math.isfinite(m) and m >= 0):
            raise DomainError(f"--mu-out must be finite and >= 0, got {m!r}")
    strategy = resolve_d_strategy(cfg.d_strategy)
    params = cfg.channel
    table = rate_curves_sweep(mu_out_list, params, cfg.l_max_km, cfg.step_km, strategy)
    baseline = max_secure_distance(0.0, 0.0, params, cfg.grid_km, cfg.tol_km)
    results = []
    for m in mu_out_list:
        dist = max_secure_distance(m, strategy(m, params), params, cfg.grid_km, cfg.tol_km)
        results.append({"mu_out": m, "max_secure_km": _round(dist), "ratio": _round(_ratio(dist, baseline))})
    summary = {
        "baseline_max_km": _round(baseline),
        "results": results,
        "ratio": min(r["ratio"] for r in results),
    }
    _write(out_dir / "curves.csv", _csv_text(CURVES_HEADER, table))
    _write(out_dir / "summary.json", json.dumps(summary, indent=2) + "\n")
    return summary


def cmd_budget(cfg: RunConfig, com_spectrum_path, pass_spectrum_path, out_dir=None,
               isolation_path=None, noise_floor_dbm=sp.DEFAULT_NOISE_FLOOR_DBM,
               min_separation_nm=0.5, window_nm=sp.DEFAULT_WINDOW_NM) -> list[ThaBudget]:
    """Detect output peaks, convert them to photon budgets, write ``budget.csv``."""
    out_dir = Path(out_dir if out_dir is not None else cfg.out_dir)
    isolation = sp.read_isolation(_isolation_path(cfg, isolation_path))
    com = sp.read_spectrum(com_spectrum_path)
    passed = sp.read_spectrum(pass_spectrum_path)
    peaks = sp.detect_peaks(passed, noise_floor_dbm, min_separation_nm, window_nm)
    budgets = [
        budget_from_fraction(cfg.injected_photons, wl, frac, isolation, cfg.reflectivity, cfg.isolation_passes)
        for wl, frac in sp.conversion_fractions(com, passed, peaks)
    ]
    rows = [(b.wavelength_nm, b.conversion_fraction, b.roundtrip_isolation_db, b.mu_out) for b in budgets]
    _write(out_dir / "budget.csv", _csv_text(BUDGET_HEADER, rows))
    return budgets


def read_budget_csv(path) -> list[ThaBudget]:
    """Read ``budget.csv``; only wavelength and ``mu_out`` feed the solver."""
    budgets = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != BUDGET_HEADER:
            raise SpectrumParseError(f"expected header {','.join(BUDGET_HEADER)!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(BUDGET_HEADER):
                raise SpectrumParseError(f"expected {len(BUDGET_HEADER)} fields", line=lineno)
            try:
                wl, frac, iso, mu_out = (float(v) for v in row)
            except ValueError:
                raise SpectrumParseError("non-numeric field", line=lineno) from None
            try:
                budgets.append(ThaBudget(wl, 0.0, frac, iso, 0.0, mu_out))
            except DomainError as exc:
                raise SpectrumParseError(str(exc), line=lineno) from None
    if not budgets:
        raise SpectrumParseError("budget file has no rows", line=2)
    return budgets


def cmd_maxdist(cfg: RunConfig, budget_csv_path, out_dir=None) -> dict:
    """Write ``distmap.csv`` (baseline row first, wavelength ``nan``) and ``distmap.json``."""
    out_dir = Path(out_dir if out_dir is not None else cfg.out_dir)
    budgets = read_budget_csv(budget_csv_path)
    dmap = distance_map_over_wavelengths(budgets, cfg.d_strategy, cfg.channel, cfg.grid_km, cfg.tol_km)
    rows = [(math.nan, 0.0, dmap.baseline_max_km)]
    rows += [(r.wavelength_nm, r.mu_out, r.max_km) for r in dmap.rows]
    _write(out_dir / "distmap.csv", _csv_text(DISTMAP_HEADER, rows))
    summary = {
        "baseline_max_km": _round(dmap.baseline_max_km),
        "min_max_km": _round(dmap.min_max_km),
        "worst_wavelength_nm": _round(dmap.worst_wavelength_nm),
        "ratio": _round(dmap.ratio),
    }
    _write(out_dir / "distmap.json", json.dumps(summary, indent=2) + "\n")
    return summary


def cmd_spectra_synth(out_path, **kwargs) -> sp.Spectrum:
    s = sp.synthesize_comb(**kwargs)
    _write(Path(out_path), sp.format_spectrum(s))
    return s


def cmd_spectra_peaks(in_path, out_path, noise_floor_dbm=sp.DEFAULT_NOISE_FLOOR_DBM,
                      min_separation_nm=0.5, window_nm=sp.DEFAULT_WINDOW_NM) -> sp.PeakSet:
    peaks = sp.detect_peaks(sp.read_spectrum(in_path), noise_floor_dbm, min_separation_nm, window_nm)
    rows = [(p.center_nm, p.height_dbm, p.integrated_mw, p.window_nm) for p in peaks]
    _write(Path(out_path), _csv_text(PEAKS_HEADER, rows))
    return peaks


def cmd_spectra_isolation(without_path, with_path, out_path) -> sp.IsolationProfile:
    profile = sp.isolation_from_pair(sp.read_spectrum(without_path), sp.read_spectrum(with_path))
    _write(Path(out_path), sp.format_isolation(profile))
    return profile


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=PROG, description="Trojan-horse key-rate analysis for DWDM spectral side channels.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp_, config=True):
        if config:
            sp_.add_argument("--config", help="key=value run configuration")
        sp_.add_argument("--out-dir", help="output directory (overrides config out_dir)")

    k = sub.add_parser("keyrate", help="key-rate curves and maximum distances")
    common(k)
    k.add_argument("--mu-out", type=float, action="append", default=[], metavar="N",
                   help="Trojan photon number per pulse (repeatable, default 0)")

    b = sub.add_parser("budget", help="per-wavelength Trojan photon budget from a spectrum pair")
    common(b)
    b.add_argument("--com", required=True, help="input-port (COM) spectrum CSV")
    b.add_argument("--pass", dest="pass_", required=True, help="output-port spectrum CSV")
    b.add_argument("--isolation", help="isolation profile CSV (overrides config isolation_file)")
    b.add_argument("--noise-floor-dbm", type=float, default=sp.DEFAULT_NOISE_FLOOR_DBM)
    b.add_argument("--min-separation-nm", type=float, default=0.5)
    b.add_argument("--window-nm", type=float, default=sp.DEFAULT_WINDOW_NM)

    m = sub.add_parser("maxdist", help="maximum secure distance per wavelength")
    common(m)
    m.add_argument("--budget", required=True, help="budget.csv from the budget command")

    s = sub.add_parser("spectra", help="spectrum utilities")
    ssub = s.add_subparsers(dest="spectra_cmd", required=True)
    syn = ssub.add_parser("synth", help="write a synthetic comb spectrum")
    common(syn, config=False)
    syn.add_argument("--out", help="output file (default <out-dir>/spectrum.csv)")
    syn.add_argument("--center-nm", type=float, default=1550.7)
    syn.add_argument("--spacing-nm", type=float, default=1.0)
    syn.add_argument("--n-side", type=int, default=2)
    syn.add_argument("--center-power-dbm", type=float, default=0.0)
    syn.add_argument("--decay-db-per-line", type=float, default=10.0)
    syn.add_argument("--linewidth-nm", type=float, default=0.05)
    syn.add_argument("--noise-floor-dbm", type=float, default=sp.DEFAULT_NOISE_FLOOR_DBM)
    syn.add_argument("--resolution-pm", type=float, default=sp.DEFAULT_RESOLUTION_PM)

    pk = ssub.add_parser("peaks", help="detect peaks in a spectrum CSV")
    common(pk, config=False)
    pk.add_argument("--input", required=True)
    pk.add_argument("--out", help="output file (default <out-dir>/peaks.csv)")
    pk.add_argument("--noise-floor-dbm", type=float, default=sp.DEFAULT_NOISE_FLOOR_DBM)
    pk.add_argument("--min-separation-nm", type=float, default=0.5)
    pk.add_argument("--window-nm", type=float, default=sp.DEFAULT_WINDOW_NM)

    iso = ssub.add_parser("isolation", help="isolation profile from without/with-DUT spectra")
    common(iso, config=False)
    iso.add_argument("--without", required=True)
    iso.add_argument("--with", dest="with_", required=True)
    iso.add_argument("--out", help="output file (default <out-dir>/isolation.csv)")
    return p


def _run(args) -> None:
    if args.cmd == "spectra":
        out_dir = Path(args.out_dir or ".")
        if args.spectra_cmd == "synth":
            cmd_spectra_synth(
                args.out or out_dir / "spectrum.csv",
                center_nm=args.center_nm, spacing_nm=args.spacing_nm, n_side=args.n_side,
                center_power_dbm=args.center_power_dbm, decay_db_per_line=args.decay_db_per_line,
                linewidth_nm=args.linewidth_nm, noise_floor_dbm=args.noise_floor_dbm,
                resolution_pm=args.resolution_pm,
            )
        elif args.spectra_cmd == "peaks":
            cmd_spectra_peaks(args.input, args.out or out_dir / "peaks.csv",
                              args.noise_floor_dbm, args.min_separation_nm, args.window_nm)
        else:
            cmd_spectra_isolation(args.without, args.with_, args.out or out_dir / "isolation.csv")
        return

    cfg = load_config(args.config) if args.config else RunConfig()
    out_dir = args.out_dir
    if args.cmd == "keyrate":
        cmd_keyrate(cfg, args.mu_out, out_dir)
    elif args.cmd == "budget":
        cmd_budget(cfg, args.com, args.pass_, out_dir, args.isolation,
                   args.noise_floor_dbm, args.min_separation_nm, args.window_nm)
    elif args.cmd == "maxdist":
        cmd_maxdist(cfg, args.budget, out_dir)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format=f"{PROG}: %(levelname)s: %(message)s")
    try:
        _run(args)
    except (SpectrumParseError, CoverageError, OSError) as exc:
        print(f"{PROG}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DomainError, ArithmeticError) as exc:
        keys = getattr(exc, "keys", ())
        where = f" [keys: {', '.join(keys)}]" if keys else ""
        print(f"{PROG}: domain error: {exc}{where}", file=sys.stderr)
        return EXIT_DOMAIN
    except DwdmThaError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
