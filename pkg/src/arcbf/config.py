"""INI-style configuration for the benchmark CLI.

Sections: [acc] plant and preset constants, [scenario] lead-car schedule,
[sim] integration horizon and options, [controller] variant and
infeasibility policy, [bounds] uncertainty-bound knobs, [sweep] sampling
times for sweep-T. An empty file yields the full default preset. Unknown
sections or keys are rejected with the offending name; speed-valued keys
accept an explicit "kmh" suffix (stored in m/s).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from typing import Optional

from .acc import AccParams, LeadScenario, default_scenario, stress_scenario
from .controllers import InfeasibilityPolicy, Variant
from .errors import ConfigurationError
from .simulator import SimConfig


@dataclass(frozen=True)
class BoundsConfig:
    grid_density: int = 8
    calibrated: bool = True
    theta: Optional[float] = None
    phi: Optional[float] = None
    eta: Optional[float] = None

    def __post_init__(self):
        if self.grid_density < 2:
            raise ConfigurationError("bounds.grid_density must be >= 2")


@dataclass(frozen=True)
class RunConfig:
    params: AccParams = field(default_factory=AccParams)
    scenario: LeadScenario = field(default_factory=default_scenario)
    sim: SimConfig = field(default_factory=lambda: SimConfig(
        t_end=40.0, T=1.0e-3, substeps=2))
    variant: Variant = Variant.ADAPTIVE_ROBUST
    infeasibility: InfeasibilityPolicy = InfeasibilityPolicy.HOLD
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    sweep_T: tuple = (1.0e-2, 1.0e-3, 1.0e-4, 1.0e-5)
    sweep_t_end: float = 0.2

    def __post_init__(self):
        if abs(self.sim.T - self.params.T) > 1e-15 * self.params.T:
            raise ConfigurationError("sim cadence must equal acc.T")
        _check_multiple(self.params.T_qp, self.params.T, "acc.T_qp", "acc.T")
        _check_multiple(self.sim.t_end, self.params.T_qp, "sim.t_end", "acc.T_qp")
        if any(T <= 0 for T in self.sweep_T):
            raise ConfigurationError("sweep.T_values must be positive")
        if self.sweep_t_end <= 0:
            raise ConfigurationError("sweep.t_end must be positive")


def _check_multiple(big: float, small: float, big_key: str, small_key: str):
    q = round(big / small)
    if q < 1 or abs(big - q * small) > 1e-9 * small:
        raise ConfigurationError(
            f"{big_key} ({big:g}) must be a positive integer multiple of "
            f"{small_key} ({small:g})")


_SPEED_KEYS = {"v_d", "v_max", "v_floor", "v_ceiling"}

_SCHEMA = {
    "acc": {"mass", "f0", "f1", "f2", "tau_d", "v_d", "gravity", "c_alpha",
            "c_beta", "slack_penalty", "x0", "T", "T_qp", "a", "xi", "v_max",
            "d_max", "dist_amp", "dist_freq"},
    "scenario": {"preset", "segments", "v_floor", "v_ceiling"},
    "sim": {"t_end", "substeps", "seed", "assertions"},
    "controller": {"variant", "infeasibility"},
    "bounds": {"grid_density", "calibrated", "theta", "phi", "eta"},
    "sweep": {"T_values", "t_end"},
}


def _err(section: str, key: str, msg: str) -> ConfigurationError:
    return ConfigurationError(f"[{section}] {key}: {msg}")


def _parse_float(section, key, raw):
    try:
        return float(raw)
    except ValueError:
        raise _err(section, key, f"not a number: {raw!r}") from None


def _parse_speed(section, key, raw):
    """Plain number = m/s; 'NUMBER kmh' converts from km/h."""
    parts = raw.split()
    if len(parts) == 2 and parts[1].lower() in ("kmh", "km/h"):
        return _parse_float(section, key, parts[0]) / 3.6
    if len(parts) == 1:
        return _parse_float(section, key, parts[0])
    raise _err(section, key, f"expected NUMBER or 'NUMBER kmh', got {raw!r}")


def _parse_int(section, key, raw):
    try:
        return int(raw)
    except ValueError:
        raise _err(section, key, f"not an integer: {raw!r}") from None


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(section, key, raw):
    low = raw.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise _err(section, key, f"not a boolean: {raw!r}")


def _parse_segments(raw: str):
    """One 'duration accel' pair per line (or semicolon-separated)."""
    segs = []
    for chunk in raw.replace(";", "\n").splitlines():
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != 2:
            raise _err("scenario", "segments",
                       f"each entry needs 'duration accel', got {chunk!r}")
        segs.append((_parse_float("scenario", "segments", parts[0]),
                     _parse_float("scenario", "segments", parts[1])))
    if not segs:
        raise _err("scenario", "segments", "no entries")
    return tuple(segs)


def parse_config(source) -> RunConfig:
    """Build a RunConfig from an INI file path or a raw string."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str   # case-sensitive keys (T vs t matters)
    try:
        if isinstance(source, str) and ("\n" in source or source.strip() == ""):
            cp.read_string(source)
        elif hasattr(source, "read"):
            cp.read_file(source)
        else:
            with open(source) as fh:
                cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}") from None

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"unknown key [{section}] {key}")

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key)
        return default

    acc_kwargs = {}
    for key in _SCHEMA["acc"]:
        raw = get("acc", key)
        if raw is None:
            continue
        if key == "x0":
            vals = [v for v in raw.replace(",", " ").split() if v]
            if len(vals) != 3:
                raise _err("acc", "x0", f"need 3 numbers, got {raw!r}")
            acc_kwargs["x0"] = tuple(_parse_float("acc", "x0", v) for v in vals)
        elif key in _SPEED_KEYS:
            acc_kwargs[key] = _parse_speed("acc", key, raw)
        else:
            acc_kwargs[key] = _parse_float("acc", key, raw)
    params = AccParams(**acc_kwargs)

    preset = get("scenario", "preset")
    has_custom = cp.has_option("scenario", "segments")
    if preset is not None and has_custom:
        raise _err("scenario", "preset", "give either preset or segments, not both")
    if preset is not None:
        presets = {"default": default_scenario, "stress": stress_scenario}
        if preset not in presets:
            raise _err("scenario", "preset",
                       f"unknown preset {preset!r} (default, stress)")
        scenario = presets[preset]()
    else:
        scen_kwargs = {}
        if has_custom:
            scen_kwargs["segments"] = _parse_segments(cp.get("scenario", "segments"))
        for key in ("v_floor", "v_ceiling"):
            raw = get("scenario", key)
            if raw is not None:
                scen_kwargs[key] = _parse_speed("scenario", key, raw)
        scenario = LeadScenario(**scen_kwargs) if scen_kwargs else default_scenario()

    sim = SimConfig(
        t_end=_parse_float("sim", "t_end", get("sim", "t_end", "40")),
        T=params.T,
        substeps=_parse_int("sim", "substeps", get("sim", "substeps", "2")),
        seed=_parse_int("sim", "seed", get("sim", "seed", "0")),
        assertions_on=_parse_bool("sim", "assertions",
                                  get("sim", "assertions", "false")))

    raw = get("controller", "variant", Variant.ADAPTIVE_ROBUST.value)
    try:
        variant = Variant(raw)
    except ValueError:
        raise _err("controller", "variant",
                   f"unknown variant {raw!r} "
                   f"({', '.join(v.value for v in Variant)})") from None
    raw = get("controller", "infeasibility", InfeasibilityPolicy.HOLD.value)
    try:
        policy = InfeasibilityPolicy(raw)
    except ValueError:
        raise _err("controller", "infeasibility",
                   f"unknown policy {raw!r} (error, hold)") from None

    def opt_float(section, key):
        raw = get(section, key)
        return None if raw is None else _parse_float(section, key, raw)

    bounds = BoundsConfig(
        grid_density=_parse_int("bounds", "grid_density",
                                get("bounds", "grid_density", "8")),
        calibrated=_parse_bool("bounds", "calibrated",
                               get("bounds", "calibrated", "true")),
        theta=opt_float("bounds", "theta"),
        phi=opt_float("bounds", "phi"),
        eta=opt_float("bounds", "eta"))

    raw = get("sweep", "T_values")
    if raw is None:
        sweep_T = (1.0e-2, 1.0e-3, 1.0e-4, 1.0e-5)
    else:
        vals = [v for v in raw.replace(",", " ").split() if v]
        if not vals:
            raise _err("sweep", "T_values", "no entries")
        sweep_T = tuple(_parse_float("sweep", "T_values", v) for v in vals)
    sweep_t_end = _parse_float("sweep", "t_end", get("sweep", "t_end", "0.2"))

    return RunConfig(params=params, scenario=scenario, sim=sim,
                     variant=variant, infeasibility=policy, bounds=bounds,
                     sweep_T=sweep_T, sweep_t_end=sweep_t_end)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def serialize_config(cfg: RunConfig) -> str:
    """Canonical INI text; parse_config(serialize_config(c)) == c."""
    p = cfg.params
    out = io.StringIO()
    w = out.write
    w("[acc]\n")
    for key in ("mass", "f0", "f1", "f2", "tau_d", "v_d", "gravity",
                "c_alpha", "c_beta", "slack_penalty"):
        w(f"{key} = {_fmt(getattr(p, key))}\n")
    w(f"x0 = {_fmt(p.x0[0])} {_fmt(p.x0[1])} {_fmt(p.x0[2])}\n")
    for key in ("T", "T_qp", "a", "xi", "v_max", "d_max", "dist_amp",
                "dist_freq"):
        w(f"{key} = {_fmt(getattr(p, key))}\n")
    w("\n[scenario]\nsegments =\n")
    for dur, acc in cfg.scenario.segments:
        w(f"    {_fmt(dur)} {_fmt(acc)}\n")
    if cfg.scenario.v_floor is not None:
        w(f"v_floor = {_fmt(cfg.scenario.v_floor)}\n")
    if cfg.scenario.v_ceiling is not None:
        w(f"v_ceiling = {_fmt(cfg.scenario.v_ceiling)}\n")
    w("\n[sim]\n")
    w(f"t_end = {_fmt(cfg.sim.t_end)}\n")
    w(f"substeps = {cfg.sim.substeps}\n")
    w(f"seed = {cfg.sim.seed}\n")
    w(f"assertions = {'true' if cfg.sim.assertions_on else 'false'}\n")
    w("\n[controller]\n")
    w(f"variant = {cfg.variant.value}\n")
    w(f"infeasibility = {cfg.infeasibility.value}\n")
    w("\n[bounds]\n")
    w(f"grid_density = {cfg.bounds.grid_density}\n")
    w(f"calibrated = {'true' if cfg.bounds.calibrated else 'false'}\n")
    for key in ("theta", "phi", "eta"):
        v = getattr(cfg.bounds, key)
        if v is not None:
            w(f"{key} = {_fmt(v)}\n")
    w("\n[sweep]\n")
    w("T_values = " + " ".join(_fmt(T) for T in cfg.sweep_T) + "\n")
    w(f"t_end = {_fmt(cfg.sweep_t_end)}\n")
    return out.getvalue()


def with_variant(cfg: RunConfig, variant: Variant) -> RunConfig:
    return replace(cfg, variant=variant)
