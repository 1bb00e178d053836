"""Append-only session log with a deterministic JSONL serialization.

The first line is the header (config snapshot, seed, method, participant);
every following line is one record.  Serialization is canonical (sorted
keys, compact separators, no timestamps), so a session re-run with the same
seed and config produces a byte-identical file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

FORMAT_NAME = "hapsim-session/1"


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass
class SessionLog:
    header: dict
    records: list[dict] = field(default_factory=list)

    def append(self, record: dict) -> int:
        """Add one record; returns its index for cross-referencing."""
        self.records.append(record)
        return len(self.records) - 1

    def dumps(self) -> str:
        lines = [_canonical({"format": FORMAT_NAME, **self.header})]
        lines.extend(_canonical(r) for r in self.records)
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "SessionLog":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines:
            raise ValueError(f"{path}: empty session log")
        header = json.loads(lines[0])
        if header.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} file")
        header.pop("format")
        records = [json.loads(line) for line in lines[1:] if line]
        return cls(header=header, records=records)

    def answers(self, include_practice: bool = False) -> list[dict]:
        out = []
        for r in self.records:
            if r.get("t") != "answer":
                continue
            if r.get("practice") and not include_practice:
                continue
            out.append(r)
        return out
