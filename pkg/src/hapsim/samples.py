"""Soft sample catalog, contact physics, and the simulated tactile fingertip.

The five soft samples are characterized by Shore hardness (scale 00 for the
gel-like ones, scale A for the stiffer rubbers).  Hardness is mapped to an
elastic modulus through a documented monotone fit, and modulus to a linear
contact stiffness through a flat-punch model with a configured contact
radius.  A squeeze of depth d then produces a contact force k * d, which the
simulated four-channel fingertip reports as raw sensor counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SHORE_SCALES = ("OO", "A")

# Default split of the total contact force across the four sensor channels.
# The permutation applied per contact keeps the channel-max aggregation
# nontrivial without changing the channel sum.
CHANNEL_WEIGHTS = (0.4, 0.3, 0.2, 0.1)

DEFAULT_NOISE_SIGMA = 0.02

# label, shore scale, shore value, stiffness level
_CATALOG_ROWS = (
    ("1-US", "OO", 10.0, 1),
    ("2-S", "OO", 30.0, 2),
    ("3-M", "OO", 50.0, 3),
    ("4-LH", "A", 20.0, 4),
    ("5-H", "A", 30.0, 5),
)


@dataclass(frozen=True)
class GeometryConfig:
    """Parameters of the hardness-to-stiffness mapping and the contact model.

    ``hardness_rate`` controls how fast the modulus grows per hardness point;
    the default keeps adjacent catalog samples close enough in stiffness that
    a noisy observer stays off the ceiling.
    """

    contact_radius_mm: float = 4.0
    poisson_ratio: float = 0.49
    base_modulus_kpa: float = 30.0
    hardness_rate: float = math.log(1.15) / 20.0

    def to_dict(self) -> dict:
        return {
            "contact_radius_mm": self.contact_radius_mm,
            "poisson_ratio": self.poisson_ratio,
            "base_modulus_kpa": self.base_modulus_kpa,
            "hardness_rate": self.hardness_rate,
        }


DEFAULT_GEOMETRY = GeometryConfig()


@dataclass(frozen=True)
class SampleSpec:
    """One soft sample: label, Shore hardness, and derived linear stiffness."""

    label: str
    shore_scale: str
    shore_value: float
    stiffness: float  # N/mm
    stiffness_level: int


@dataclass(frozen=True)
class SensorRange:
    """Valid raw-count range of a fingertip channel plus force calibration."""

    f_min: float = 30.0
    f_max: float = 1000.0
    counts_per_newton: float = 90.0

    def __post_init__(self) -> None:
        if not 0 < self.f_min < self.f_max:
            raise ValueError(f"need 0 < f_min < f_max, got {self.f_min}, {self.f_max}")
        if self.counts_per_newton <= 0:
            raise ValueError("counts_per_newton must be positive")

    def to_dict(self) -> dict:
        return {
            "f_min": self.f_min,
            "f_max": self.f_max,
            "counts_per_newton": self.counts_per_newton,
        }


@dataclass(frozen=True)
class FingertipReading:
    """One frame from a follower fingertip.

    ``z_forces`` are the four raw z-channel counts used downstream; the x/y
    channels are carried for completeness but never interpreted.
    """

    finger: "FingerId"  # noqa: F821 - imported by callers from retarget
    z_forces: tuple[float, float, float, float]
    xy_forces: tuple[tuple[float, float], ...]
    timestamp: int = 0


def hardness_index(scale: str, value: float) -> float:
    """Collapse (scale, value) onto one monotone axis, scale A above scale OO."""
    if scale not in SHORE_SCALES:
        raise ValueError(f"unknown Shore scale {scale!r}")
    if not 0.0 <= value <= 100.0:
        raise ValueError(f"Shore value {value} outside [0, 100]")
    return float(value) + (100.0 if scale == "A" else 0.0)


def shore_to_modulus_kpa(scale: str, value: float, geometry: GeometryConfig = DEFAULT_GEOMETRY) -> float:
    """Elastic modulus in kPa from a Shore hardness reading (monotone fit)."""
    h = hardness_index(scale, value)
    return geometry.base_modulus_kpa * math.exp(geometry.hardness_rate * h)


def shore_to_stiffness(scale: str, value: float, geometry: GeometryConfig = DEFAULT_GEOMETRY) -> float:
    """Linear contact stiffness in N/mm for a flat circular punch.

    k = 2 * E/(1 - nu^2) * a, with a the configured contact radius.
    """
    e_star_n_mm2 = shore_to_modulus_kpa(scale, value, geometry) * 1e-3 / (1.0 - geometry.poisson_ratio**2)
    return 2.0 * e_star_n_mm2 * geometry.contact_radius_mm


def catalog(geometry: GeometryConfig = DEFAULT_GEOMETRY) -> list[SampleSpec]:
    """The five samples, ordered softest to hardest."""
    return [
        SampleSpec(
            label=label,
            shore_scale=scale,
            shore_value=value,
            stiffness=shore_to_stiffness(scale, value, geometry),
            stiffness_level=level,
        )
        for label, scale, value, level in _CATALOG_ROWS
    ]


def sample_by_level(level: int, geometry: GeometryConfig = DEFAULT_GEOMETRY) -> SampleSpec:
    for spec in catalog(geometry):
        if spec.stiffness_level == level:
            return spec
    raise ValueError(f"no sample with stiffness level {level}")


def default_counts_per_newton(
    max_depth_mm: float,
    geometry: GeometryConfig = DEFAULT_GEOMETRY,
    f_max: float = 1000.0,
    weights: tuple[float, ...] = CHANNEL_WEIGHTS,
) -> float:
    """Calibration that drives the hardest sample's peak channel to ~f_max.

    At a full squeeze of the stiffest catalog sample the largest of the four
    channels reaches the top of the valid range, so the whole range carries
    signal.
    """
    k_max = max(spec.stiffness for spec in catalog(geometry))
    return f_max / (max(weights) * k_max * max_depth_mm)


def _as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def squeeze_counts(
    sample: SampleSpec,
    depths_mm: np.ndarray,
    sensor: SensorRange,
    rng: np.random.Generator | int | None,
    *,
    weights: tuple[float, ...] = CHANNEL_WEIGHTS,
    perm: np.ndarray | None = None,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
) -> np.ndarray:
    """Raw z-channel counts for a whole squeeze, shape (len(depths), 4).

    The channel permutation is drawn once per contact; per-tick noise is
    multiplicative so zero depth stays exactly zero.
    """
    depths = np.asarray(depths_mm, dtype=float)
    if np.any(depths < 0):
        raise ValueError("compression depth must be >= 0")
    gen = _as_rng(rng)
    if perm is None:
        perm = gen.permutation(len(weights))
    w = np.asarray(weights, dtype=float)[perm]
    total = sample.stiffness * depths * sensor.counts_per_newton
    z = np.outer(total, w)
    if noise_sigma > 0:
        z = z * (1.0 + noise_sigma * gen.standard_normal(z.shape))
    return np.maximum(z, 0.0)


def compress(
    sample: SampleSpec,
    depth_mm: float,
    sensor: SensorRange,
    rng: np.random.Generator | int | None = None,
    *,
    finger=None,
    timestamp: int = 0,
    weights: tuple[float, ...] = CHANNEL_WEIGHTS,
    perm: np.ndarray | None = None,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
) -> FingertipReading:
    """Forward model of one fingertip frame at the given compression depth."""
    gen = _as_rng(rng)
    z = squeeze_counts(
        sample,
        np.asarray([depth_mm]),
        sensor,
        gen,
        weights=weights,
        perm=perm,
        noise_sigma=noise_sigma,
    )[0]
    # x/y channels scale with the local z channel; their semantics are not
    # modeled, they are carried so frames look like real fingertip frames.
    xy = np.stack([0.06 * z, 0.03 * z], axis=1)
    if noise_sigma > 0:
        xy = xy * (1.0 + noise_sigma * gen.standard_normal(xy.shape))
    return FingertipReading(
        finger=finger,
        z_forces=tuple(float(v) for v in z),
        xy_forces=tuple((float(a), float(b)) for a, b in xy),
        timestamp=timestamp,
    )


def aggregate_max(reading: FingertipReading) -> float:
    """Largest of the four z channels, the per-finger contact force signal."""
    return max(reading.z_forces)


def clip_to_range(f: float, sensor: SensorRange):
    """Cap counts at the top of the valid range.

    Values below f_min pass through unchanged; the below-threshold case is a
    rendering decision (gating), not a measurement one.
    """
    return np.minimum(f, sensor.f_max)
