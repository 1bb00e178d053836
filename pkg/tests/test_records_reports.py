import json
from dataclasses import replace
from pathlib import Path

import pytest

from hapsim.config import RunConfig
from hapsim.engine import SessionEngine
from hapsim.records import load_records, records_from_log, read_metadata, write_metadata
from hapsim.reports import write_all_reports
from hapsim.sessionlog import SessionLog

FAST = RunConfig(seed=2, squeeze_seconds=0.25, log_messages=False)


@pytest.fixture(scope="module")
def small_batch(tmp_path_factory):
    """2 participants x 2 days x 2 methods, written like a batch run."""
    outdir = tmp_path_factory.mktemp("batch")
    meta = []
    for pid, group in ((1, 1), (2, 2)):
        for day in (1, 2):
            for method in (1, 2):
                seed = 1000 + pid * 100 + day * 10 + method
                cfg = replace(FAST, seed=seed, method=method)
                name = f"p{pid:02d}_d{day}_m{method}.jsonl"
                SessionEngine(
                    cfg, participant=f"p{pid:02d}", group=group, day=day
                ).run(out_path=outdir / name)
                meta.append(
                    {"participant": f"p{pid:02d}", "group": group, "day": day,
                     "method": method, "file": name}
                )
    write_metadata(meta, outdir / "metadata.csv")
    return outdir


def test_records_from_log_structure(small_batch):
    log = SessionLog.read(small_batch / "p01_d1_m1.jsonl")
    records = records_from_log(log)
    assert {r.task for r in records} == {"ABX", "S"}
    for r in records:
        assert r.n_trials == 24
        assert sum(t for _, t in r.pair_tallies.values()) == 24
        assert sum(t for _, t in r.distance_tallies.values()) == 24
        assert set(r.distance_tallies) == {1, 2, 3, 4}
        assert len(r.pair_tallies) == 8
        assert all(t == 3 for _, t in r.pair_tallies.values())
        assert all(t == 6 for _, t in r.distance_tallies.values())
        assert 0.0 <= r.success_rate <= 1.0


def test_practice_trials_excluded(small_batch):
    log = SessionLog.read(small_batch / "p01_d1_m1.jsonl")
    practice = [r for r in log.records if r.get("t") == "answer" and r.get("practice")]
    assert len(practice) == 2
    records = records_from_log(log)
    assert all(r.n_trials == 24 for r in records)


def test_load_records_with_metadata(small_batch):
    logs = sorted(small_batch.glob("*.jsonl"))
    records = load_records(logs, metadata_path=small_batch / "metadata.csv")
    assert len(records) == 16  # 8 sessions x 2 tasks
    assert {r.group for r in records} == {1, 2}


def test_metadata_mismatch_detected(small_batch, tmp_path):
    rows = read_metadata(small_batch / "metadata.csv")
    rows[0]["method"] = 2 if rows[0]["method"] == "1" else 1
    bad = tmp_path / "metadata.csv"
    write_metadata(rows, bad)
    import shutil

    for f in small_batch.glob("*.jsonl"):
        shutil.copy(f, tmp_path / f.name)
    with pytest.raises(ValueError, match="disagrees"):
        load_records(sorted(tmp_path.glob("*.jsonl")), metadata_path=bad)


def test_malformed_log_rejected(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"not": "a session"}\n', encoding="utf-8")
    with pytest.raises(ValueError):
        load_records([bad])


def test_reports_written(small_batch, tmp_path):
    records = load_records(sorted(small_batch.glob("*.jsonl")))
    outdir = tmp_path / "reports"
    write_all_reports(records, outdir)
    for name in (
        "summary.csv",
        "summary.json",
        "anova.csv",
        "anova.json",
        "nonparametric.csv",
        "nonparametric.json",
        "spider.csv",
        "spider.json",
        "spider_abx.png",
        "spider_s.png",
        "success_rates.png",
    ):
        path = outdir / name
        assert path.exists() and path.stat().st_size > 0, name


def test_summary_report_shape(small_batch, tmp_path):
    records = load_records(sorted(small_batch.glob("*.jsonl")))
    outdir = tmp_path / "reports"
    write_all_reports(records, outdir, figures=False)
    payload = json.loads((outdir / "summary.json").read_text())
    keys = {(r["task"], r["method"]) for r in payload["rows"]}
    assert keys == {("ABX", 1), ("ABX", 2), ("S", 1), ("S", 2)}
    assert "human_reference" in payload and "note" in payload


def test_anova_report_shape(small_batch, tmp_path):
    records = load_records(sorted(small_batch.glob("*.jsonl")))
    outdir = tmp_path / "reports"
    write_all_reports(records, outdir, figures=False)
    payload = json.loads((outdir / "anova.json").read_text())
    sources = [r["source"] for r in payload["rows"]]
    assert sources == [
        "group", "day", "task", "group:day", "group:task", "day:task", "Residual",
    ]


def test_reports_deterministic(small_batch, tmp_path):
    records = load_records(sorted(small_batch.glob("*.jsonl")))
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    write_all_reports(records, out1)
    write_all_reports(records, out2)
    for f1 in sorted(out1.iterdir()):
        f2 = out2 / f1.name
        assert f1.read_bytes() == f2.read_bytes(), f1.name
