"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Every key is optional; missing
channel keys fall back to :data:`~dwdm_tha.core.FIG6_PARAMS`.

Keys
----
channel: alpha_db_per_km, eta_det, e_det, y0, e0, f_ec, q, mu, nu
tha:     injected_photons, reflectivity, isolation_file, isolation_passes,
         d_strategy (coherent | none | constant:<D>)
scan:    l_max_km, step_km, grid_km, tol_km
io:      out_dir
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .core import ChannelParams
from .exceptions import ParameterError
from .solver import resolve_d_strategy

CHANNEL_KEYS = tuple(f.name for f in fields(ChannelParams))

EXAMPLE_ISOLATION = Path(__file__).with_name("data") / "example_isolation.csv"


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelParams = field(default_factory=ChannelParams)
    injected_photons: float = 1e8
    reflectivity: float = 1.0
    isolation_file: Path | None = None
    isolation_passes: int = 2
    d_strategy: str = "coherent"
    l_max_km: float = 300.0
    step_km: float = 1.0
    grid_km: float = 1.0
    tol_km: float = 0.01
    out_dir: Path = Path(".")

    def __post_init__(self):
        bad = []
        if not self.injected_photons >= 0:
            bad.append("injected_photons")
        if not 0 <= self.reflectivity <= 1:
            bad.append("reflectivity")
        if self.isolation_passes < 0:
            bad.append("isolation_passes")
        for k in ("step_km", "grid_km", "tol_km"):
            if not getattr(self, k) > 0:
                bad.append(k)
        if not self.l_max_km >= 0:
            bad.append("l_max_km")
        if bad:
            raise ParameterError(f"invalid value for {', '.join(bad)}", bad)
        try:
            resolve_d_strategy(self.d_strategy)
        except ValueError as exc:
            raise ParameterError(str(exc), ["d_strategy"]) from None


_CASTS = {
    "injected_photons": float,
    "reflectivity": float,
    "isolation_file": Path,
    "isolation_passes": int,
    "d_strategy": str,
    "l_max_km": float,
    "step_km": float,
    "grid_km": float,
    "tol_km": float,
    "out_dir": Path,
}


def parse_config(text: str, base_dir: str | os.PathLike | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from ``key = value`` text.

    Relative ``isolation_file`` / ``out_dir`` paths resolve against
    ``base_dir`` when given.
    """
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                   comment_prefixes=("#",), inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ParameterError(f"malformed config: {exc}".splitlines()[0]) from None
    raw = dict(cp["run"])
    unknown = sorted(set(raw) - set(CHANNEL_KEYS) - set(_CASTS))
    if unknown:
        raise ParameterError(f"unknown config key(s): {', '.join(unknown)}", unknown)

    channel, other, bad = {}, {}, []
    for key, value in raw.items():
        cast = float if key in CHANNEL_KEYS else _CASTS[key]
        try:
            parsed = cast(value.strip())
        except ValueError:
            bad.append(key)
            continue
        (channel if key in CHANNEL_KEYS else other)[key] = parsed
    if bad:
        raise ParameterError(f"unparseable value for {', '.join(bad)}", bad)
    if base_dir is not None:
        for key in ("isolation_file", "out_dir"):
            if key in other and not other[key].is_absolute():
                other[key] = Path(base_dir) / other[key]
    return RunConfig(channel=ChannelParams(**channel), **other)


def load_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def format_config(cfg: RunConfig) -> str:
    lines = [f"{k} = {getattr(cfg.channel, k)!r}" for k in CHANNEL_KEYS]
    for k in _CASTS:
        v = getattr(cfg, k)
        if v is not None:
            lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
