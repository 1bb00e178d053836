"""Scored-session records: the bridge from session logs to the statistics.

A ``SuccessRecord`` summarizes one (participant, day, task) block of 24
scored trials: overall correctness plus per-pair and per-distance tallies.
Participant metadata (group assignment, day, method) comes from a CSV that
batch runs emit next to the logs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .sessionlog import SessionLog

TRIALS_PER_TASK = 24


@dataclass(frozen=True)
class SuccessRecord:
    participant: str
    group: int
    day: int
    method: int
    task: str
    outcomes: tuple[bool, ...]
    pair_tallies: dict = field(default_factory=dict)  # label -> (correct, total)
    distance_tallies: dict = field(default_factory=dict)  # D -> (correct, total)

    @property
    def n_trials(self) -> int:
        return len(self.outcomes)

    @property
    def n_correct(self) -> int:
        return sum(self.outcomes)

    @property
    def success_rate(self) -> float:
        return self.n_correct / self.n_trials

    def as_row(self) -> dict:
        return {
            "participant": self.participant,
            "group": self.group,
            "day": self.day,
            "method": self.method,
            "task": self.task,
            "success_rate": self.success_rate * 100.0,
        }


def records_from_log(log: SessionLog) -> list[SuccessRecord]:
    """One record per task found in a session log (practice excluded)."""
    header = log.header
    by_task: dict[str, list[dict]] = {}
    for ans in log.answers():
        by_task.setdefault(ans["task"], []).append(ans)

    out = []
    for task, answers in sorted(by_task.items()):
        if len(answers) != TRIALS_PER_TASK:
            raise ValueError(
                f"{header.get('participant')}: task {task} has {len(answers)} scored trials,"
                f" expected {TRIALS_PER_TASK}"
            )
        pair_tallies: dict[str, tuple[int, int]] = {}
        dist_tallies: dict[int, tuple[int, int]] = {}
        outcomes = []
        for ans in answers:
            ok = bool(ans["correct"])
            outcomes.append(ok)
            c, t = pair_tallies.get(ans["pair"], (0, 0))
            pair_tallies[ans["pair"]] = (c + ok, t + 1)
            c, t = dist_tallies.get(ans["d"], (0, 0))
            dist_tallies[ans["d"]] = (c + ok, t + 1)
        out.append(
            SuccessRecord(
                participant=str(header["participant"]),
                group=int(header["group"]),
                day=int(header["day"]),
                method=int(header["method"]),
                task=task,
                outcomes=tuple(outcomes),
                pair_tallies=pair_tallies,
                distance_tallies=dist_tallies,
            )
        )
    return out


METADATA_FIELDS = ("participant", "group", "day", "method", "file")


def write_metadata(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METADATA_FIELDS)
        writer.writeheader()
        writer.writerows(rows)


def read_metadata(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    missing = [f for f in METADATA_FIELDS if rows and f not in rows[0]]
    if missing:
        raise ValueError(f"{path}: metadata is missing columns {missing}")
    return rows


def load_records(log_paths, metadata_path: str | Path | None = None) -> list[SuccessRecord]:
    """Read all logs, cross-checking against the metadata CSV when given."""
    meta_by_file: dict[str, dict] = {}
    if metadata_path is not None:
        base = Path(metadata_path).parent
        for row in read_metadata(metadata_path):
            meta_by_file[str((base / row["file"]).resolve())] = row

    records: list[SuccessRecord] = []
    for path in sorted(str(p) for p in log_paths):
        log = SessionLog.read(path)
        meta = meta_by_file.get(str(Path(path).resolve()))
        if meta is not None:
            for key in ("participant", "group", "day", "method"):
                have = str(log.header.get(key))
                want = str(meta[key])
                if have != want:
                    raise ValueError(
                        f"{path}: header {key}={have} disagrees with metadata {key}={want}"
                    )
        records.extend(records_from_log(log))
    if not records:
        raise ValueError("no scored records found")
    return records
