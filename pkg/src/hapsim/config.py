"""Run configuration: strict plain-text key/value files with sections.

Unknown sections or keys are errors; every run embeds its fully resolved
configuration in the session-log header, so a log is always reproducible
from its own first line.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .feedback import FeedbackConfig
from .observer import PerceptualModel
from .retarget import DeviceProfile, MotionProfile, leader_to_follower_displacement
from .samples import GeometryConfig, SensorRange, default_counts_per_newton

DELTA_MODES = ("instantaneous", "windowed")
TRANSPORTS = ("inproc", "udp")


class ConfigError(ValueError):
    pass


def auto_counts_per_newton(
    geometry: GeometryConfig,
    devices: DeviceProfile,
    squeeze_fraction: float,
    f_max: float,
) -> float:
    """Calibration driving the hardest sample's peak channel to ~f_max."""
    depth = max(
        leader_to_follower_displacement(
            squeeze_fraction * devices.leader_max(f), f, devices
        )
        for f, _ in devices.leader_range_mm
    )
    return default_counts_per_newton(depth, geometry, f_max=f_max)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    method: int = 1
    tick_hz: float = 100.0
    squeeze_seconds: float = 10.0
    squeeze_fraction: float = 0.8
    rest_seconds: float = 60.0
    log_messages: bool = True
    delta_mode: str = "instantaneous"
    transport: str = "inproc"
    udp_port: int = 0
    stale_timeout_ms: float = 50.0
    noise_sigma: float = 0.02
    observer_model: PerceptualModel = field(default_factory=PerceptualModel)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    sensor: SensorRange | None = None  # None resolves to auto calibration
    devices: DeviceProfile = field(default_factory=DeviceProfile)
    f_leader_max: float = 5.0
    clamp_output: bool = True
    eps_mm: float = 0.05

    def __post_init__(self) -> None:
        if self.method not in (1, 2):
            raise ConfigError(f"method must be 1 or 2, got {self.method}")
        if self.delta_mode not in DELTA_MODES:
            raise ConfigError(f"delta_mode must be one of {DELTA_MODES}")
        if self.transport not in TRANSPORTS:
            raise ConfigError(f"transport must be one of {TRANSPORTS}")
        if self.tick_hz <= 0 or self.squeeze_seconds <= 0:
            raise ConfigError("tick_hz and squeeze_seconds must be positive")
        if not 0.0 < self.squeeze_fraction <= 1.0:
            raise ConfigError("squeeze_fraction must lie in (0, 1]")
        if self.sensor is None:
            cpn = auto_counts_per_newton(
                self.geometry, self.devices, self.squeeze_fraction, 1000.0
            )
            object.__setattr__(self, "sensor", SensorRange(counts_per_newton=cpn))

    @property
    def feedback(self) -> FeedbackConfig:
        return FeedbackConfig(
            f_leader_max=self.f_leader_max,
            sensor=self.sensor,
            clamp_output=self.clamp_output,
            eps_mm=self.eps_mm,
        )

    @property
    def ticks_per_squeeze(self) -> int:
        return max(5, round(self.tick_hz * self.squeeze_seconds))

    @property
    def stale_timeout_ticks(self) -> int:
        return max(1, round(self.stale_timeout_ms / 1000.0 * self.tick_hz))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "method": self.method,
            "tick_hz": self.tick_hz,
            "squeeze_seconds": self.squeeze_seconds,
            "squeeze_fraction": self.squeeze_fraction,
            "rest_seconds": self.rest_seconds,
            "log_messages": self.log_messages,
            "delta_mode": self.delta_mode,
            "transport": self.transport,
            "udp_port": self.udp_port,
            "stale_timeout_ms": self.stale_timeout_ms,
            "noise_sigma": self.noise_sigma,
            "observer": self.observer_model.to_dict(),
            "geometry": self.geometry.to_dict(),
            "sensor": self.sensor.to_dict(),
            "devices": self.devices.to_dict(),
            "f_leader_max": self.f_leader_max,
            "clamp_output": self.clamp_output,
            "eps_mm": self.eps_mm,
        }


def default_config() -> RunConfig:
    return RunConfig()


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(raw: str, where: str) -> bool:
    try:
        return _BOOL[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}") from None


def _parse_float(raw: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{where}: value must be finite")
    return value


def _parse_int(raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None


# section -> key -> parser kind
_SCHEMA: dict[str, dict[str, str]] = {
    "session": {
        "seed": "int",
        "method": "int",
        "tick_hz": "float",
        "squeeze_seconds": "float",
        "squeeze_fraction": "float",
        "rest_seconds": "float",
        "log_messages": "bool",
        "delta_mode": "str",
        "transport": "str",
        "udp_port": "int",
        "stale_timeout_ms": "float",
    },
    "observer": {"weber_fraction": "float", "lapse_rate": "float", "pure_noise": "bool"},
    "sensor": {
        "f_min": "float",
        "f_max": "float",
        "counts_per_newton": "str",  # number or "auto"
        "noise_sigma": "float",
    },
    "samples": {
        "contact_radius_mm": "float",
        "poisson_ratio": "float",
        "base_modulus_kpa": "float",
        "hardness_rate": "float",
    },
    "feedback": {"f_leader_max": "float", "clamp_output": "bool", "eps_mm": "float"},
    "leader_range_mm": {"thumb": "float", "index": "float", "middle": "float"},
    "follower_range_mm": {"thumb": "float", "index": "float", "ring": "float"},
    "mapping": {"kind": "str", "breakpoint": "float", "knee": "float"},
}


def _parse_sections(path: str | Path) -> dict[str, dict[str, object]]:
    parser = configparser.ConfigParser(interpolation=None)
    text = Path(path).read_text(encoding="utf-8")
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    values: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            where = f"{path} [{section}] {key}"
            kind = _SCHEMA[section][key]
            if kind == "int":
                values[section][key] = _parse_int(raw, where)
            elif kind == "float":
                values[section][key] = _parse_float(raw, where)
            elif kind == "bool":
                values[section][key] = _parse_bool(raw, where)
            else:
                values[section][key] = raw.strip()
    return values


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a config file; every key must be in the schema."""
    values = _parse_sections(path)
    base = RunConfig()
    sess = values.get("session", {})
    obs = values.get("observer", {})
    sens = values.get("sensor", {})
    samp = values.get("samples", {})
    fb = values.get("feedback", {})
    mapping = values.get("mapping", {})

    try:
        geometry = GeometryConfig(
            contact_radius_mm=samp.get("contact_radius_mm", base.geometry.contact_radius_mm),
            poisson_ratio=samp.get("poisson_ratio", base.geometry.poisson_ratio),
            base_modulus_kpa=samp.get("base_modulus_kpa", base.geometry.base_modulus_kpa),
            hardness_rate=samp.get("hardness_rate", base.geometry.hardness_rate),
        )
        leader = dict(base.devices.leader_range_mm) | values.get("leader_range_mm", {})
        follower = dict(base.devices.follower_range_mm) | values.get("follower_range_mm", {})
        devices = DeviceProfile(
            leader_range_mm=tuple(leader.items()),
            follower_range_mm=tuple(follower.items()),
            motion=MotionProfile(
                kind=mapping.get("kind", base.devices.motion.kind),
                breakpoint=mapping.get("breakpoint", base.devices.motion.breakpoint),
                knee=mapping.get("knee", base.devices.motion.knee),
            ),
        )
        model = PerceptualModel(
            weber_fraction=obs.get("weber_fraction", base.observer_model.weber_fraction),
            lapse_rate=obs.get("lapse_rate", base.observer_model.lapse_rate),
            pure_noise=obs.get("pure_noise", base.observer_model.pure_noise),
        )

        f_min = sens.get("f_min", base.sensor.f_min)
        f_max = sens.get("f_max", base.sensor.f_max)
        squeeze_fraction = sess.get("squeeze_fraction", base.squeeze_fraction)
        cpn_raw = str(sens.get("counts_per_newton", "auto"))
        if cpn_raw.lower() == "auto":
            cpn = auto_counts_per_newton(geometry, devices, squeeze_fraction, f_max)
        else:
            cpn = _parse_float(cpn_raw, f"{path} [sensor] counts_per_newton")

        return RunConfig(
            seed=sess.get("seed", base.seed),
            method=sess.get("method", base.method),
            tick_hz=sess.get("tick_hz", base.tick_hz),
            squeeze_seconds=sess.get("squeeze_seconds", base.squeeze_seconds),
            squeeze_fraction=squeeze_fraction,
            rest_seconds=sess.get("rest_seconds", base.rest_seconds),
            log_messages=sess.get("log_messages", base.log_messages),
            delta_mode=sess.get("delta_mode", base.delta_mode),
            transport=sess.get("transport", base.transport),
            udp_port=sess.get("udp_port", base.udp_port),
            stale_timeout_ms=sess.get("stale_timeout_ms", base.stale_timeout_ms),
            noise_sigma=sens.get("noise_sigma", base.noise_sigma),
            observer_model=model,
            geometry=geometry,
            sensor=SensorRange(f_min=f_min, f_max=f_max, counts_per_newton=cpn),
            devices=devices,
            f_leader_max=fb.get("f_leader_max", base.f_leader_max),
            clamp_output=fb.get("clamp_output", base.clamp_output),
            eps_mm=fb.get("eps_mm", base.eps_mm),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


DEFAULT_CONFIG_TEXT = """\
# hapsim run configuration. Unknown sections or keys are rejected.

[session]
seed = 0
# haptic rendering law: 1 = force only, 2 = displacement scaled
method = 1
tick_hz = 100
squeeze_seconds = 10.0
# fraction of the leader finger range reached at the top of a squeeze
squeeze_fraction = 0.8
rest_seconds = 60.0
# log every pose/force/feedback frame (large files); trial records are
# always logged
log_messages = true
# displacement ratio per tick: instantaneous or windowed (cumulative)
delta_mode = instantaneous
# inproc (deterministic, default) or udp (lossy datagrams, loopback)
transport = inproc
udp_port = 0
stale_timeout_ms = 50.0

[observer]
weber_fraction = 0.17
lapse_rate = 0.02
pure_noise = false

[sensor]
f_min = 30
f_max = 1000
# "auto" calibrates so the hardest sample peaks near f_max at full squeeze
counts_per_newton = auto
noise_sigma = 0.02

[samples]
contact_radius_mm = 4.0
poisson_ratio = 0.49
base_modulus_kpa = 30.0
# modulus growth per hardness point (scale A sits 100 points above scale OO)
hardness_rate = 0.006988097118757931

[feedback]
f_leader_max = 5.0
clamp_output = true
eps_mm = 0.05

[leader_range_mm]
thumb = 35.0
index = 45.0
middle = 45.0

[follower_range_mm]
thumb = 30.0
index = 40.0
ring = 40.0

[mapping]
# linear-ratio makes both rendering laws identical; piecewise makes the
# instantaneous displacement ratio vary over a squeeze
kind = piecewise
breakpoint = 0.5
knee = 0.65
"""


def write_default_config(path: str | Path) -> None:
    Path(path).write_text(DEFAULT_CONFIG_TEXT, encoding="utf-8")
