"""Trial schedule for the discrimination session: the fixed 24-test sequence,
its balance checks, presentation randomization, and CSV import/export.

The session sequence is organized in three blocks of eight.  Tests 17-24
repeat tests 1-8 verbatim; tests 9-16 are tests 1-8 with the roles of A and
B swapped and X unchanged.  Four stiffness distances each appear six times,
and each of the eight designated (pair | X) combinations appears three
times.  The comparison stimulus X only ever takes levels 1, 3, and 5.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

TASK_ABX = "ABX"
TASK_S = "S"

HARDER = "harder"  # the stimulus that does not match X is harder than X
SOFTER = "softer"

_DIRECTION_ARROWS = {HARDER: "↑", SOFTER: "↓"}
_ARROW_DIRECTIONS = {v: k for k, v in _DIRECTION_ARROWS.items()}

# Blocks 1 and 3 of the session table; block 2 swaps A and B.
_BLOCK_A = (1, 2, 4, 3, 5, 2, 1, 3)
_BLOCK_B = (5, 5, 3, 1, 1, 1, 4, 5)
_BLOCK_X = (1, 5, 3, 3, 5, 1, 1, 5)

X_LEVELS = (1, 3, 5)

# The eight designated (low level, high level, X) combinations, grouped by
# stiffness distance: two per distance, each tested three times.
DESIGNATED_PAIRS = (
    (1, 2, 1),
    (3, 4, 3),
    (1, 3, 3),
    (3, 5, 5),
    (1, 4, 1),
    (2, 5, 5),
    (1, 5, 1),
    (1, 5, 5),
)

PRACTICE_SEQUENCES = ((1, 3, 1), (5, 3, 3))


@dataclass(frozen=True)
class Trial:
    index: int
    a: int
    b: int
    x: int
    distance: int
    direction: str  # HARDER | SOFTER
    task: str = TASK_ABX
    practice: bool = False

    def pair_key(self) -> tuple[int, int, int]:
        lo, hi = sorted((self.a, self.b))
        return (lo, hi, self.x)

    def pair_label(self) -> str:
        lo, hi, x = self.pair_key()
        return f"{lo}-{hi}|X{x}"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass
class ScheduleReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))


@dataclass(frozen=True)
class TrialSchedule:
    """Ordered 24-trial session; rest breaks fall after trials 8 and 16."""

    trials: tuple[Trial, ...]
    block_size: int = 8

    def __iter__(self):
        return iter(self.trials)

    def __len__(self) -> int:
        return len(self.trials)


def _derive_direction(a: int, b: int, x: int) -> str:
    other = b if x == a else a
    return HARDER if other > x else SOFTER


def _make_trial(index: int, a: int, b: int, x: int, task: str = TASK_ABX) -> Trial:
    return Trial(
        index=index,
        a=a,
        b=b,
        x=x,
        distance=abs(a - b),
        direction=_derive_direction(a, b, x),
        task=task,
    )


def schedule_table1() -> TrialSchedule:
    """The canonical 24-test sequence (three blocks of eight)."""
    trials = []
    rows = (
        list(zip(_BLOCK_A, _BLOCK_B, _BLOCK_X))
        + list(zip(_BLOCK_B, _BLOCK_A, _BLOCK_X))
        + list(zip(_BLOCK_A, _BLOCK_B, _BLOCK_X))
    )
    for i, (a, b, x) in enumerate(rows, start=1):
        trials.append(_make_trial(i, a, b, x))
    return TrialSchedule(trials=tuple(trials))


def practice_trials() -> tuple[Trial, ...]:
    """Two unscored warm-up trials emitted before the scored block."""
    out = []
    for i, (a, b, x) in enumerate(PRACTICE_SEQUENCES, start=1):
        out.append(replace(_make_trial(i, a, b, x), practice=True))
    return tuple(out)


def softer_task_trials(schedule: TrialSchedule) -> TrialSchedule:
    """The which-is-softer task over the same 24 A/B pairs."""
    trials = tuple(replace(t, task=TASK_S) for t in schedule.trials)
    return TrialSchedule(trials=trials, block_size=schedule.block_size)


def validate_schedule(schedule: TrialSchedule) -> ScheduleReport:
    """Check every structural invariant; violations are data, not errors."""
    report = ScheduleReport()
    trials = schedule.trials
    if len(trials) != 24:
        report.add("length", f"expected 24 trials, got {len(trials)}")
        return report

    for t in trials:
        if t.x not in X_LEVELS:
            report.add("x-levels", f"trial {t.index}: X={t.x} not in {X_LEVELS}")
        if t.x not in (t.a, t.b):
            report.add("x-membership", f"trial {t.index}: X={t.x} matches neither A nor B")
        if t.distance != abs(t.a - t.b):
            report.add(
                "distance-mismatch",
                f"trial {t.index}: D={t.distance} but |A-B|={abs(t.a - t.b)}",
            )
        if t.x in (t.a, t.b) and t.direction != _derive_direction(t.a, t.b, t.x):
            report.add(
                "direction-mismatch",
                f"trial {t.index}: direction {t.direction} inconsistent with levels",
            )

    for i in range(8):
        first, repeat = trials[i], trials[16 + i]
        if (first.a, first.b, first.x) != (repeat.a, repeat.b, repeat.x):
            report.add("block-repeat", f"trial {17 + i} differs from trial {i + 1}")
        swapped = trials[8 + i]
        if (swapped.a, swapped.b, swapped.x) != (first.b, first.a, first.x):
            report.add(
                "swap-block",
                f"trial {9 + i} is not trial {i + 1} with A and B swapped",
            )

    distance_counts: dict[int, int] = {}
    pair_counts: dict[tuple[int, int, int], int] = {}
    for t in trials:
        distance_counts[t.distance] = distance_counts.get(t.distance, 0) + 1
        pair_counts[t.pair_key()] = pair_counts.get(t.pair_key(), 0) + 1

    for d in (1, 2, 3, 4):
        if distance_counts.get(d, 0) != 6:
            report.add(
                "distance-balance",
                f"distance {d} appears {distance_counts.get(d, 0)} times, expected 6",
            )
    for key, count in pair_counts.items():
        if key not in DESIGNATED_PAIRS:
            report.add("pair-membership", f"pair {key} is not a designated pair")
    for key in DESIGNATED_PAIRS:
        if pair_counts.get(key, 0) != 3:
            report.add(
                "pair-balance",
                f"pair {key} appears {pair_counts.get(key, 0)} times, expected 3",
            )
    return report


@dataclass(frozen=True)
class PresentationPlan:
    """Which of A/B is squeezed first; X (when present) is always last."""

    first: str  # "A" | "B"


def randomize_presentation(schedule: TrialSchedule, seed: int) -> list[PresentationPlan]:
    """Seeded within-trial presentation order.

    Flipping which of A/B comes first also randomizes whether the stimulus
    matching X sits in the first or second slot, without touching trial
    content.
    """
    rng = np.random.default_rng(seed)
    return [PresentationPlan(first="A" if rng.random() < 0.5 else "B") for _ in schedule.trials]


_CSV_ROWS = ("test", "a", "b", "x", "d", "direction")


def export_csv(schedule: TrialSchedule, path: str | Path) -> None:
    """Write the schedule in the transposed session-table layout."""
    trials = schedule.trials
    rows = [
        ["test"] + [str(t.index) for t in trials],
        ["a"] + [str(t.a) for t in trials],
        ["b"] + [str(t.b) for t in trials],
        ["x"] + [str(t.x) for t in trials],
        ["d"] + [str(t.distance) for t in trials],
        ["direction"] + [_DIRECTION_ARROWS[t.direction] for t in trials],
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


def import_csv(path: str | Path) -> TrialSchedule:
    with open(path, newline="", encoding="utf-8") as fh:
        raw = {row[0].strip().lower(): row[1:] for row in csv.reader(fh) if row}
    missing = [name for name in _CSV_ROWS if name not in raw]
    if missing:
        raise ValueError(f"{path}: missing schedule rows {missing}")
    n = len(raw["a"])
    if any(len(raw[name]) != n for name in _CSV_ROWS):
        raise ValueError(f"{path}: schedule rows have unequal lengths")
    trials = []
    for i in range(n):
        direction = raw["direction"][i].strip()
        direction = _ARROW_DIRECTIONS.get(direction, direction.lower())
        if direction not in (HARDER, SOFTER):
            raise ValueError(f"{path}: unknown direction {raw['direction'][i]!r}")
        trials.append(
            Trial(
                index=int(raw["test"][i]),
                a=int(raw["a"][i]),
                b=int(raw["b"][i]),
                x=int(raw["x"][i]),
                distance=int(raw["d"][i]),
                direction=direction,
            )
        )
    return TrialSchedule(trials=tuple(trials))
