"""The two haptic rendering laws, their shared gating rule, and the online
stiffness estimate.

Both laws start from the clipped per-finger contact force F (raw counts).
The force-only law renders alpha * F, with alpha sized so a full-range
contact maps to the glove's force ceiling.  The displacement-scaled law
additionally multiplies by the instantaneous leader/follower displacement
ratio and by the range ratio of the two devices, which cancels the motion
mismatch between them.  Below the sensor's minimum meaningful count both
laws render exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .retarget import (
    NEAR_ZERO_MM,
    DeviceProfile,
    DisplacementPair,
    NearZeroFollowerDisplacement,
    beta,
    delta_ratio,
)
from .samples import SensorRange, clip_to_range


@dataclass(frozen=True)
class FeedbackConfig:
    """Rendering constants: glove force ceiling, sensor range, clamping."""

    f_leader_max: float = 5.0  # N
    sensor: SensorRange = field(default_factory=SensorRange)
    clamp_output: bool = True
    eps_mm: float = NEAR_ZERO_MM

    def __post_init__(self) -> None:
        if self.f_leader_max <= 0:
            raise ValueError("f_leader_max must be positive")

    @property
    def alpha(self) -> float:
        """N per raw count; ties the sensor ceiling to the glove ceiling."""
        return self.f_leader_max / self.sensor.f_max

    def to_dict(self) -> dict:
        return {
            "f_leader_max": self.f_leader_max,
            "sensor": self.sensor.to_dict(),
            "clamp_output": self.clamp_output,
            "eps_mm": self.eps_mm,
        }


@dataclass(frozen=True)
class FeedbackForce:
    """Force rendered on one leader finger under both laws (N)."""

    finger: str
    method1: float
    method2: float


@dataclass(frozen=True)
class StiffnessEstimate:
    """Contact force over compression depth, in raw counts per mm."""

    finger: str
    k_hat: float


def gate(f_follower: float, config: FeedbackConfig) -> bool:
    """True when the sensed force is below the meaningful range (render zero)."""
    return f_follower < config.sensor.f_min


def method1(f_follower: float, config: FeedbackConfig) -> float:
    """Force-only rendering: alpha times the clipped contact force."""
    if gate(f_follower, config):
        return 0.0
    return config.alpha * float(clip_to_range(f_follower, config.sensor))


def method2(
    f_follower: float,
    pair: DisplacementPair,
    profile: DeviceProfile,
    leader_finger: str,
    config: FeedbackConfig,
) -> float:
    """Displacement-scaled rendering.

    The force-only output is multiplied by the instantaneous displacement
    ratio and the device range ratio.  A near-zero follower displacement is
    treated as a gated (zero) outcome rather than an error: no meaningful
    compression means no feedback.
    """
    if gate(f_follower, config):
        return 0.0
    try:
        dz = delta_ratio(pair, config.eps_mm)
    except NearZeroFollowerDisplacement:
        return 0.0
    out = method1(f_follower, config) * dz * beta(profile, leader_finger)
    if config.clamp_output:
        out = min(out, config.f_leader_max)
    return out


def estimate_stiffness(
    f_follower: float,
    dz_follower: float,
    finger: str = "index",
    eps_mm: float = NEAR_ZERO_MM,
) -> StiffnessEstimate:
    """Per-tick stiffness estimate K = F / dz (counts per mm)."""
    if dz_follower <= eps_mm:
        raise NearZeroFollowerDisplacement(
            f"follower displacement {dz_follower} mm <= {eps_mm} mm"
        )
    return StiffnessEstimate(finger=finger, k_hat=f_follower / dz_follower)


@dataclass(frozen=True)
class SqueezeTrace:
    """Vectorized per-tick rendering results for one finger over one squeeze."""

    f_aggregate: np.ndarray  # clipped counts, shape (T,)
    gated: np.ndarray  # bool, True where both laws render zero
    method1: np.ndarray  # N
    method2: np.ndarray  # N
    k_hat: np.ndarray  # counts/mm, NaN where displacement is near zero


def render_squeeze(
    z_counts: np.ndarray,
    dz_leader: np.ndarray,
    dz_follower: np.ndarray,
    profile: DeviceProfile,
    leader_finger: str,
    config: FeedbackConfig,
    dz_ratio: np.ndarray | None = None,
) -> SqueezeTrace:
    """Apply the full rendering pipeline to a squeeze trace in one pass.

    Equivalent, tick for tick, to composing the scalar operations; kept in
    array form so whole sessions stay cheap.  ``dz_ratio`` overrides the
    per-tick displacement ratio (NaN marks near-zero ticks), which the
    windowed ratio mode uses.
    """
    z = np.asarray(z_counts, dtype=float)
    raw = z.max(axis=1)
    clipped = np.minimum(raw, config.sensor.f_max)
    force_gate = raw < config.sensor.f_min
    inst_near_zero = np.asarray(dz_follower) <= config.eps_mm

    m1 = np.where(force_gate, 0.0, config.alpha * clipped)
    b = beta(profile, leader_finger)
    with np.errstate(divide="ignore", invalid="ignore"):
        if dz_ratio is None:
            dz = np.where(inst_near_zero, np.nan, dz_leader / np.asarray(dz_follower))
        else:
            dz = np.asarray(dz_ratio, dtype=float)
        k_hat = np.where(inst_near_zero, np.nan, clipped / np.asarray(dz_follower))
    near_zero = np.isnan(dz)
    m2 = np.where(force_gate | near_zero, 0.0, m1 * np.nan_to_num(dz, nan=0.0) * b)
    if config.clamp_output:
        m2 = np.minimum(m2, config.f_leader_max)
    return SqueezeTrace(
        f_aggregate=clipped,
        gated=force_gate | near_zero,
        method1=m1,
        method2=m2,
        k_hat=k_hat,
    )
