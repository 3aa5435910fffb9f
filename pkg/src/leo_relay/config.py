"""Experiment configuration: flat key=value files with unit-suffixed keys.

Every physical key carries its unit in the name (``sphere_radius_km``,
``tx_power_dbw``, ``noise_power_dbm``, ...) and is converted to SI when
the config is built.  An empty file (or empty mapping) yields the full
default parameter set.  Unknown keys, duplicate keys, malformed lines,
and out-of-range values are all reported as ConfigError with the
offending key and, for parse problems, the line and column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from .channel import ChannelParams
from .sphere import ConstellationGeometry

__all__ = ["ConfigError", "ExperimentConfig", "parse_config_text", "from_mapping", "load_config"]


class ConfigError(ValueError):
    """Bad configuration input; `kind` is 'parse' or 'invariant'."""

    def __init__(self, message: str, kind: str = "parse"):
        super().__init__(message)
        self.kind = kind


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_float(raw: str) -> float:
    value = float(raw)
    if not math.isfinite(value):
        raise ValueError("non-finite value")
    return value


def _parse_str(raw: str) -> str:
    return raw


def _parse_int_list(raw: str) -> tuple[int, ...]:
    if not raw.strip():
        return ()
    return tuple(int(part.strip(), 10) for part in raw.split(","))


def _parse_float_list(raw: str) -> tuple[float, ...]:
    if not raw.strip():
        return ()
    return tuple(float(part.strip()) for part in raw.split(","))


def _parse_str_list(raw: str) -> tuple[str, ...]:
    if not raw.strip():
        return ()
    return tuple(part.strip() for part in raw.split(","))


# key -> (parser, default).  Defaults are the reference parameter set:
# a 1000-satellite shell 1000 km up, quarter-circle route, 15 dBW optical
# transmitter at 1550 nm, 20 MHz bandwidth, -100 dBm noise, 0 dB SNR
# threshold, 10 Mbit packets.
_KEY_TABLE = {
    "num_satellites": (_parse_int, 1000),
    "earth_radius_km": (_parse_float, 6371.0),
    "sphere_radius_km": (_parse_float, 7371.0),
    "theta_total_rad": (_parse_float, math.pi / 2.0),
    "epsilon": (_parse_float, 0.1),
    "eta_s": (_parse_float, 1.00526),          # fading shape
    "a0": (_parse_float, 0.01979),             # max collected-power fraction
    "jitter_sigma_mrad": (_parse_float, 15.0),
    "tx_power_dbw": (_parse_float, 15.0),
    "antenna_gain_dbi": (_parse_float, 160.0),
    "wavelength_nm": (_parse_float, 1550.0),
    "bandwidth_mhz": (_parse_float, 20.0),
    "noise_power_dbm": (_parse_float, -100.0),
    "coverage_threshold_db": (_parse_float, 0.0),
    "packet_size_mbit": (_parse_float, 10.0),
    "speed_of_light_km_s": (_parse_float, 3.0e5),
    "alpha2_mode": (_parse_str, "additive"),
    "method": (_parse_int, 1),
    "strategy": (_parse_str, "proposed"),
    "strategies": (_parse_str_list, ("proposed", "min_deflection", "max_stepsize", "min_stepsize")),
    "num_realizations": (_parse_int, 1000),
    "base_seed": (_parse_int, 12345),
    "num_hops": (_parse_int, 0),               # 0 = choose via `method`
    "min_stepsize_cone_rad": (_parse_float, math.pi / 6.0),
    "sweep_num_satellites": (_parse_int_list, (250, 500, 1000, 2000, 4000, 8000)),
    "sweep_altitudes_km": (_parse_float_list, (500.0, 1000.0, 1500.0)),
    "sweep_theta_rad": (_parse_float_list, (math.pi / 8.0, math.pi / 4.0, math.pi / 2.0)),
}

_STRATEGIES = ("proposed", "min_deflection", "max_stepsize", "min_stepsize")
_ALPHA2_MODES = ("additive", "multiplicative")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment parameters, converted to SI."""

    num_satellites: int
    earth_radius_m: float
    sphere_radius_m: float
    theta_total_rad: float
    epsilon: float
    fading_shape: float
    max_fading_gain: float
    jitter_sigma_rad: float
    tx_power_w: float
    antenna_gain: float
    wavelength_m: float
    bandwidth_hz: float
    noise_power_w: float
    coverage_threshold: float
    packet_bits: float
    speed_of_light_m_s: float
    alpha2_mode: str
    method: int
    strategy: str
    strategies: tuple[str, ...]
    num_realizations: int
    base_seed: int
    num_hops: int
    min_stepsize_cone_rad: float
    sweep_num_satellites: tuple[int, ...]
    sweep_altitudes_km: tuple[float, ...]
    sweep_theta_rad: tuple[float, ...]

    def geometry(self, num_satellites: Optional[int] = None, altitude_km: Optional[float] = None) -> ConstellationGeometry:
        radius = self.sphere_radius_m if altitude_km is None else self.earth_radius_m + altitude_km * 1e3
        try:
            return ConstellationGeometry(
                sphere_radius_m=radius,
                earth_radius_m=self.earth_radius_m,
                num_satellites=self.num_satellites if num_satellites is None else num_satellites,
            )
        except ValueError as exc:
            raise ConfigError(str(exc), kind="invariant") from exc

    def channel(self) -> ChannelParams:
        try:
            return ChannelParams(
                tx_power_w=self.tx_power_w,
                antenna_gain=self.antenna_gain,
                wavelength_m=self.wavelength_m,
                bandwidth_hz=self.bandwidth_hz,
                noise_power_w=self.noise_power_w,
                packet_bits=self.packet_bits,
                fading_shape=self.fading_shape,
                max_fading_gain=self.max_fading_gain,
                jitter_sigma_rad=self.jitter_sigma_rad,
                coverage_threshold=self.coverage_threshold,
            )
        except ValueError as exc:
            raise ConfigError(str(exc), kind="invariant") from exc

    @property
    def planned_hops(self) -> Optional[int]:
        return self.num_hops if self.num_hops > 0 else None


def parse_config_text(text: str) -> dict[str, object]:
    """Parse key=value lines into typed raw values (pre-conversion).

    Blank lines and ``#`` comments are skipped.  Raises ConfigError with
    line/column positions for malformed input.
    """
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}, column 1: expected key=value, got {stripped!r}")
        key_part, _, value_part = line.partition("=")
        key = key_part.strip()
        raw = value_part.split("#", 1)[0].strip()
        if key not in _KEY_TABLE:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser, _default = _KEY_TABLE[key]
        try:
            values[key] = parser(raw)
        except ValueError as exc:
            column = line.index("=") + 2
            raise ConfigError(
                f"line {lineno}, column {column}: bad value {raw!r} for {key!r} ({exc})"
            ) from exc
    return values


def _db(value: float) -> float:
    return 10.0 ** (value / 10.0)


def from_mapping(values: Mapping[str, object]) -> ExperimentConfig:
    """Build a validated config from raw (possibly string-typed) values."""
    merged: dict[str, object] = {}
    for key, (parser, default) in _KEY_TABLE.items():
        merged[key] = default
    for key, value in values.items():
        if key not in _KEY_TABLE:
            raise ConfigError(f"unknown key {key!r}")
        parser, _default = _KEY_TABLE[key]
        if isinstance(value, str):
            try:
                merged[key] = parser(value)
            except ValueError as exc:
                raise ConfigError(f"bad value {value!r} for {key!r} ({exc})") from exc
        elif isinstance(value, (list, tuple)):
            merged[key] = tuple(value)
        elif isinstance(value, bool):
            raise ConfigError(f"bad value {value!r} for {key!r}")
        else:
            merged[key] = value

    # Normalize numerics that may arrive as numbers rather than strings.
    def fnum(key: str) -> float:
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"bad value {v!r} for {key!r}")
        return float(v)

    def inum(key: str) -> int:
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, int):
            if isinstance(v, float) and v.is_integer():
                return int(v)
            raise ConfigError(f"bad value {v!r} for {key!r} (integer required)")
        return v

    def flist(key: str) -> tuple[float, ...]:
        v = merged[key]
        if isinstance(v, tuple):
            return tuple(float(x) for x in v)
        raise ConfigError(f"bad value {v!r} for {key!r}")

    def slist(key: str) -> tuple[str, ...]:
        v = merged[key]
        if not isinstance(v, tuple):
            raise ConfigError(f"bad value {v!r} for {key!r}")
        return tuple(str(x) for x in v)

    def ilist(key: str) -> tuple[int, ...]:
        v = merged[key]
        if not isinstance(v, tuple):
            raise ConfigError(f"bad value {v!r} for {key!r}")
        out = []
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ConfigError(f"bad value {v!r} for {key!r} (integers required)")
            if isinstance(x, float) and not x.is_integer():
                raise ConfigError(f"bad value {v!r} for {key!r} (integers required)")
            out.append(int(x))
        return tuple(out)

    cfg = ExperimentConfig(
        num_satellites=inum("num_satellites"),
        earth_radius_m=fnum("earth_radius_km") * 1e3,
        sphere_radius_m=fnum("sphere_radius_km") * 1e3,
        theta_total_rad=fnum("theta_total_rad"),
        epsilon=fnum("epsilon"),
        fading_shape=fnum("eta_s"),
        max_fading_gain=fnum("a0"),
        jitter_sigma_rad=fnum("jitter_sigma_mrad") * 1e-3,
        tx_power_w=_db(fnum("tx_power_dbw")),
        antenna_gain=_db(fnum("antenna_gain_dbi")),
        wavelength_m=fnum("wavelength_nm") * 1e-9,
        bandwidth_hz=fnum("bandwidth_mhz") * 1e6,
        noise_power_w=_db(fnum("noise_power_dbm") - 30.0),
        coverage_threshold=_db(fnum("coverage_threshold_db")),
        packet_bits=fnum("packet_size_mbit") * 1e6,
        speed_of_light_m_s=fnum("speed_of_light_km_s") * 1e3,
        alpha2_mode=str(merged["alpha2_mode"]),
        method=inum("method"),
        strategy=str(merged["strategy"]),
        strategies=slist("strategies"),
        num_realizations=inum("num_realizations"),
        base_seed=inum("base_seed"),
        num_hops=inum("num_hops"),
        min_stepsize_cone_rad=fnum("min_stepsize_cone_rad"),
        sweep_num_satellites=ilist("sweep_num_satellites"),
        sweep_altitudes_km=flist("sweep_altitudes_km"),
        sweep_theta_rad=flist("sweep_theta_rad"),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    checks = [
        (cfg.num_satellites >= 1, "num_satellites must be >= 1"),
        (cfg.earth_radius_m > 0.0, "earth_radius_km must be positive"),
        (cfg.sphere_radius_m > cfg.earth_radius_m, "sphere_radius_km must exceed earth_radius_km"),
        (0.0 < cfg.theta_total_rad <= math.pi, "theta_total_rad must lie in (0, pi]"),
        (0.0 < cfg.epsilon < 1.0, "epsilon must lie in (0, 1)"),
        (cfg.fading_shape > 0.0, "eta_s must be positive"),
        (0.0 < cfg.max_fading_gain <= 1.0, "a0 must lie in (0, 1]"),
        (0.0 <= cfg.jitter_sigma_rad < 1.0, "jitter_sigma_mrad must lie in [0, 1000)"),
        (cfg.bandwidth_hz > 0.0, "bandwidth_mhz must be positive"),
        (cfg.wavelength_m > 0.0, "wavelength_nm must be positive"),
        (cfg.packet_bits > 0.0, "packet_size_mbit must be positive"),
        (cfg.speed_of_light_m_s > 0.0, "speed_of_light_km_s must be positive"),
        (cfg.alpha2_mode in _ALPHA2_MODES, f"alpha2_mode must be one of {_ALPHA2_MODES}"),
        (cfg.method in (1, 2), "method must be 1 or 2"),
        (cfg.strategy in _STRATEGIES, f"strategy must be one of {_STRATEGIES}"),
        (len(cfg.strategies) > 0, "strategies must name at least one routing strategy"),
        (all(s in _STRATEGIES for s in cfg.strategies), f"strategies entries must be one of {_STRATEGIES}"),
        (cfg.num_realizations >= 0, "num_realizations must be >= 0"),
        (cfg.num_hops >= 0, "num_hops must be >= 0 (0 selects automatically)"),
        (
            0.0 < cfg.min_stepsize_cone_rad <= math.pi / 2.0,
            "min_stepsize_cone_rad must lie in (0, pi/2]",
        ),
        (cfg.base_seed >= 0, "base_seed must be >= 0"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message, kind="invariant")
    for alt in cfg.sweep_altitudes_km:
        if cfg.earth_radius_m + alt * 1e3 <= cfg.earth_radius_m:
            raise ConfigError("sweep_altitudes_km entries must be positive", kind="invariant")
    for th in cfg.sweep_theta_rad:
        if not (0.0 < th <= math.pi):
            raise ConfigError("sweep_theta_rad entries must lie in (0, pi]", kind="invariant")
    for n in cfg.sweep_num_satellites:
        if n < 1:
            raise ConfigError("sweep_num_satellites entries must be >= 1", kind="invariant")


def load_config(path: str, overrides: Optional[Mapping[str, object]] = None) -> ExperimentConfig:
    """Read a config file (missing path -> defaults) and apply overrides."""
    values: dict[str, object] = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            values = parse_config_text(fh.read())
    if overrides:
        for key, value in overrides.items():
            if key not in _KEY_TABLE:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = value
    return from_mapping(values)
