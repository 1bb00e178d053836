"""Leader/follower finger correspondence and displacement mapping.

The exoskeleton glove drives the robot hand with three fingers; sensed
forces come back along the same correspondence (the glove's middle finger
renders the robot's ring finger).  The two devices have different motion
ranges, so displacements are related by a per-finger profile; the ratio of
instantaneous displacements and the ratio of full ranges are the two
quantities the displacement-scaled rendering law consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

LEADER_FINGERS = ("thumb", "index", "middle")
FOLLOWER_FINGERS = ("thumb", "index", "ring")

_LEADER_TO_FOLLOWER = {"thumb": "thumb", "index": "index", "middle": "ring"}
_FOLLOWER_TO_LEADER = {v: k for k, v in _LEADER_TO_FOLLOWER.items()}

# Below this follower displacement the ratio of displacements is numerically
# meaningless; callers gate feedback instead of dividing.
NEAR_ZERO_MM = 0.05

SIDE_CODES = {"leader": 0, "follower": 1}
NAME_CODES = {"thumb": 0, "index": 1, "middle": 2, "ring": 3}


class NearZeroFollowerDisplacement(ValueError):
    """Follower displacement too small for a meaningful displacement ratio."""


@dataclass(frozen=True)
class FingerId:
    side: str  # "leader" | "follower"
    name: str

    def __post_init__(self) -> None:
        if self.side == "leader":
            valid = LEADER_FINGERS
        elif self.side == "follower":
            valid = FOLLOWER_FINGERS
        else:
            raise ValueError(f"unknown side {self.side!r}")
        if self.name not in valid:
            raise ValueError(f"{self.name!r} is not a {self.side} finger")


@dataclass(frozen=True)
class DisplacementPair:
    """Leader and follower displacement (mm) during one squeeze tick."""

    dz_leader: float
    dz_follower: float


@dataclass(frozen=True)
class MotionProfile:
    """How leader displacement maps onto follower displacement.

    ``linear-ratio`` scales by the range ratio, in which case the rendering
    laws coincide.  ``piecewise`` bends the map at ``breakpoint`` (leader
    fraction) / ``knee`` (follower fraction) so the instantaneous ratio of
    displacements genuinely varies over a squeeze.
    """

    kind: str = "piecewise"
    breakpoint: float = 0.5
    knee: float = 0.65

    def __post_init__(self) -> None:
        if self.kind not in ("linear-ratio", "piecewise"):
            raise ValueError(f"unknown motion profile {self.kind!r}")
        if not (0.0 < self.breakpoint < 1.0 and 0.0 < self.knee < 1.0):
            raise ValueError("breakpoint and knee must lie strictly inside (0, 1)")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "breakpoint": self.breakpoint, "knee": self.knee}


@dataclass(frozen=True)
class DeviceProfile:
    """Per-finger max displacements of both devices plus the motion profile."""

    leader_range_mm: tuple[tuple[str, float], ...] = (("thumb", 35.0), ("index", 45.0), ("middle", 45.0))
    follower_range_mm: tuple[tuple[str, float], ...] = (("thumb", 30.0), ("index", 40.0), ("ring", 40.0))
    motion: MotionProfile = MotionProfile()

    def __post_init__(self) -> None:
        for name, rng in (*self.leader_range_mm, *self.follower_range_mm):
            if rng <= 0:
                raise ValueError(f"displacement range for {name} must be positive")

    def leader_max(self, finger: str) -> float:
        return dict(self.leader_range_mm)[finger]

    def follower_max(self, finger: str) -> float:
        return dict(self.follower_range_mm)[finger]

    def to_dict(self) -> dict:
        return {
            "leader_range_mm": dict(self.leader_range_mm),
            "follower_range_mm": dict(self.follower_range_mm),
            "motion": self.motion.to_dict(),
        }


DEFAULT_DEVICES = DeviceProfile()


def map_finger(leader_finger: str) -> str:
    """Follower finger driven by (and sensed for) a leader finger."""
    try:
        return _LEADER_TO_FOLLOWER[leader_finger]
    except KeyError:
        raise ValueError(f"unknown leader finger {leader_finger!r}") from None


def inverse_map_finger(follower_finger: str) -> str:
    try:
        return _FOLLOWER_TO_LEADER[follower_finger]
    except KeyError:
        raise ValueError(f"unknown follower finger {follower_finger!r}") from None


def leader_to_follower_displacement(
    dz_leader: float,
    finger: str,
    profile: DeviceProfile = DEFAULT_DEVICES,
) -> float:
    """Follower displacement (mm) commanded by a leader displacement.

    Monotone, maps 0 -> 0 and full leader range -> full follower range.
    Accepts scalars or numpy arrays.
    """
    import numpy as np

    z_l = profile.leader_max(finger)
    z_f = profile.follower_max(map_finger(finger))
    u = np.asarray(dz_leader, dtype=float) / z_l
    if np.any(u < 0) or np.any(u > 1.0 + 1e-12):
        raise ValueError("leader displacement outside [0, max range]")
    m = profile.motion
    if m.kind == "linear-ratio":
        v = u
    else:
        lower = m.knee * u / m.breakpoint
        upper = m.knee + (1.0 - m.knee) * (u - m.breakpoint) / (1.0 - m.breakpoint)
        v = np.where(u <= m.breakpoint, lower, upper)
    out = v * z_f
    return float(out) if np.isscalar(dz_leader) or out.ndim == 0 else out


def delta_ratio(pair: DisplacementPair, eps_mm: float = NEAR_ZERO_MM) -> float:
    """Instantaneous leader/follower displacement ratio."""
    if pair.dz_follower <= eps_mm:
        raise NearZeroFollowerDisplacement(
            f"follower displacement {pair.dz_follower} mm <= {eps_mm} mm"
        )
    return pair.dz_leader / pair.dz_follower


def beta(profile: DeviceProfile, leader_finger: str) -> float:
    """Ratio of follower to leader full motion range for a finger pair."""
    z_l = profile.leader_max(leader_finger)
    if z_l <= 0:
        raise ValueError("leader range must be positive")
    return profile.follower_max(map_finger(leader_finger)) / z_l
