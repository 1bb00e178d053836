"""Virtual participant: turns rendered force traces into noisy stiffness
percepts and answers the two discrimination questions.

The percept is what a glove wearer physically has access to: the rendered
force against their own finger displacement.  Its least-squares slope over
the non-gated part of a squeeze is the base percept; multiplicative Gaussian
noise with the configured Weber fraction turns it into a sample.  Decisions
are nearest-percept (match task) or smallest-percept (softer task), with a
fair coin on exact ties and an occasional lapse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NoContactPercept(Exception):
    """The whole squeeze was gated: there is nothing to perceive."""


@dataclass(frozen=True)
class PerceptualModel:
    weber_fraction: float = 0.17
    lapse_rate: float = 0.02
    seed: int = 0
    pure_noise: bool = False

    def __post_init__(self) -> None:
        if self.weber_fraction < 0:
            raise ValueError("weber_fraction must be >= 0")
        if not 0.0 <= self.lapse_rate <= 0.1:
            raise ValueError("lapse_rate must lie in [0, 0.1]")

    @property
    def is_pure_noise(self) -> bool:
        return self.pure_noise or math.isinf(self.weber_fraction)

    def to_dict(self) -> dict:
        return {
            "weber_fraction": self.weber_fraction,
            "lapse_rate": self.lapse_rate,
            "seed": self.seed,
            "pure_noise": self.pure_noise,
        }


def least_squares_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Ordinary least-squares slope of y against x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm = x.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise NoContactPercept("displacement trace has no spread")
    return float(((x - xm) * (y - y.mean())).sum()) / sxx


def perceive_stiffness(
    feedback_trace: np.ndarray,
    leader_displacement_trace: np.ndarray,
    model: PerceptualModel,
    rng: np.random.Generator,
) -> float:
    """One noisy stiffness percept from a squeeze.

    Only non-gated ticks (nonzero rendered force) enter the regression; a
    fully gated squeeze raises :class:`NoContactPercept`.
    """
    f = np.asarray(feedback_trace, dtype=float)
    dz = np.asarray(leader_displacement_trace, dtype=float)
    if f.shape != dz.shape or f.size == 0:
        raise ValueError("traces must be non-empty and time-aligned")
    mask = f > 0.0
    if not mask.any():
        raise NoContactPercept("all ticks gated")
    if model.is_pure_noise:
        return float(rng.lognormal(0.0, 1.0))
    base = least_squares_slope(dz[mask], f[mask])
    if model.weber_fraction == 0.0:
        return base
    return base * (1.0 + model.weber_fraction * float(rng.standard_normal()))


def _coin(rng: np.random.Generator) -> str:
    return "A" if rng.random() < 0.5 else "B"


def answer_abx(
    k_a: float,
    k_b: float,
    k_x: float,
    rng: np.random.Generator,
    lapse_rate: float = 0.0,
) -> str:
    """Which of A/B the comparison percept is nearer to."""
    d_a = abs(k_x - k_a)
    d_b = abs(k_x - k_b)
    if d_a < d_b:
        answer = "A"
    elif d_b < d_a:
        answer = "B"
    else:
        answer = _coin(rng)
    if lapse_rate > 0.0 and rng.random() < lapse_rate:
        answer = _coin(rng)
    return answer


def answer_softer(
    k_a: float,
    k_b: float,
    rng: np.random.Generator,
    lapse_rate: float = 0.0,
) -> str:
    """Which of A/B feels softer (smaller percept)."""
    if k_a < k_b:
        answer = "A"
    elif k_b < k_a:
        answer = "B"
    else:
        answer = _coin(rng)
    if lapse_rate > 0.0 and rng.random() < lapse_rate:
        answer = _coin(rng)
    return answer


class Observer:
    """One virtual participant bound to one session; owns its generator."""

    def __init__(self, model: PerceptualModel | None = None):
        self.model = model or PerceptualModel()
        self.rng = np.random.default_rng(self.model.seed)

    def perceive(self, feedback_trace: np.ndarray, leader_displacement_trace: np.ndarray) -> float:
        return perceive_stiffness(feedback_trace, leader_displacement_trace, self.model, self.rng)

    def answer_abx(self, k_a: float, k_b: float, k_x: float) -> str:
        return answer_abx(k_a, k_b, k_x, self.rng, self.model.lapse_rate)

    def answer_softer(self, k_a: float, k_b: float) -> str:
        return answer_softer(k_a, k_b, self.rng, self.model.lapse_rate)
