"""Command-line surface: run sessions, batch simulations, and analysis.

Exit codes: 0 success, 1 validation/analysis failure, 2 usage error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .engine import SessionAborted, SessionEngine
from .observer import PerceptualModel
from .records import load_records, write_metadata
from .reports import write_all_reports
from .schedule import export_csv, import_csv, schedule_table1, validate_schedule
from .sessionlog import SessionLog
from .stats import MissingMethodCoverage, UnbalancedDesign

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _load_base_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return RunConfig()


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if getattr(args, "method", None) is not None:
        updates["method"] = args.method
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    obs = cfg.observer_model
    obs_updates = {}
    if getattr(args, "observer_weber", None) is not None:
        obs_updates["weber_fraction"] = args.observer_weber
    if getattr(args, "observer_lapse", None) is not None:
        obs_updates["lapse_rate"] = args.observer_lapse
    if getattr(args, "observer_pure_noise", False):
        obs_updates["pure_noise"] = True
    if obs_updates:
        updates["observer_model"] = replace(obs, **obs_updates)
    return replace(cfg, **updates) if updates else cfg


def _resolve_schedule(name: str):
    if name == "table1":
        return schedule_table1()
    return import_csv(name)


def cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(_load_base_config(args), args)
        sched = _resolve_schedule(args.schedule)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    report = validate_schedule(sched)
    if not report.passed:
        for v in report.violations:
            print(f"schedule violation [{v.code}]: {v.message}", file=sys.stderr)
        return EXIT_VALIDATION

    engine = SessionEngine(
        cfg,
        schedule=sched,
        participant=args.participant,
        group=args.group,
        day=args.day,
    )
    try:
        log, results = engine.run(out_path=args.out)
    except SessionAborted as exc:
        print(f"session aborted: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    scored = [r for r in results if not r.trial.practice]
    correct = sum(r.correct for r in scored)
    print(f"wrote {args.out}: {correct}/{len(scored)} correct (method {cfg.method}, seed {cfg.seed})")
    return EXIT_OK


def batch_seed(base_seed: int, participant: int, day: int, method: int) -> int:
    return int(np.random.SeedSequence((base_seed, participant, day, method)).generate_state(1)[0])


def cmd_batch(args) -> int:
    try:
        cfg = _apply_overrides(_load_base_config(args), args)
        sched = _resolve_schedule(args.schedule)
        outdir = Path(args.out_dir)
        outdir.mkdir(parents=True, exist_ok=True)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO

    base_seed = cfg.seed
    if not args.full_logs:
        cfg = replace(cfg, log_messages=False)
    meta_rows = []
    try:
        for pid in range(1, args.participants + 1):
            group = 1 if pid <= (args.participants + 1) // 2 else 2
            for day in (1, 2):
                for method in (1, 2):
                    seed = batch_seed(base_seed, pid, day, method)
                    run_cfg = replace(cfg, seed=seed, method=method)
                    name = f"p{pid:02d}_d{day}_m{method}.jsonl"
                    engine = SessionEngine(
                        run_cfg,
                        schedule=sched,
                        participant=f"p{pid:02d}",
                        group=group,
                        day=day,
                    )
                    engine.run(out_path=outdir / name)
                    meta_rows.append(
                        {
                            "participant": f"p{pid:02d}",
                            "group": group,
                            "day": day,
                            "method": method,
                            "file": name,
                        }
                    )
        write_metadata(meta_rows, outdir / "metadata.csv")
    except SessionAborted as exc:
        print(f"session aborted: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(meta_rows)} session logs and metadata.csv to {outdir}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    log_paths: list[Path] = []
    try:
        for entry in args.logs:
            p = Path(entry)
            if p.is_dir():
                log_paths.extend(sorted(p.glob("*.jsonl")))
            else:
                log_paths.append(p)
        if not log_paths:
            print("error: no session logs found", file=sys.stderr)
            return EXIT_VALIDATION
        records = load_records(log_paths, metadata_path=args.metadata)
        write_all_reports(records, args.out_dir, figures=not args.no_figures)
    except (MissingMethodCoverage, UnbalancedDesign) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote reports to {args.out_dir}")
    return EXIT_OK


def cmd_validate_schedule(args) -> int:
    path = Path(args.path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not text.strip():
        print(f"usage error: {path} is empty", file=sys.stderr)
        return EXIT_USAGE
    try:
        sched = import_csv(path)
    except ValueError as exc:
        print(f"malformed schedule: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = validate_schedule(sched)
    if report.passed:
        print(f"{path}: schedule valid ({len(sched)} trials)")
        return EXIT_OK
    for v in report.violations:
        print(f"violation [{v.code}]: {v.message}")
    return EXIT_VALIDATION


def cmd_export_schedule(args) -> int:
    try:
        export_csv(schedule_table1(), args.out)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapsim",
        description="Simulate and analyze haptic stiffness-discrimination sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True):
        p.add_argument("--config", help="run configuration file (strict key/value format)")
        p.add_argument("--method", type=int, choices=(1, 2), help="rendering law override")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument("--schedule", default="table1", help='"table1" or a schedule CSV path')
        p.add_argument("--observer-weber", type=float, help="observer Weber fraction")
        p.add_argument("--observer-lapse", type=float, help="observer lapse rate")
        p.add_argument("--observer-pure-noise", action="store_true", help="stimulus-blind observer")

    p_run = sub.add_parser("run", help="run one session and write its log")
    add_common(p_run)
    p_run.add_argument("--participant", default="p00")
    p_run.add_argument("--group", type=int, default=1, choices=(1, 2))
    p_run.add_argument("--day", type=int, default=1, choices=(1, 2))
    p_run.add_argument("--out", required=True, help="session log path (.jsonl)")
    p_run.set_defaults(func=cmd_run)

    p_batch = sub.add_parser("batch", help="simulate participants x days x methods")
    add_common(p_batch)
    p_batch.add_argument("--participants", type=int, required=True)
    p_batch.add_argument("--out-dir", required=True)
    p_batch.add_argument(
        "--full-logs", action="store_true", help="log per-tick frames (large files)"
    )
    p_batch.set_defaults(func=cmd_batch)

    p_an = sub.add_parser("analyze", help="build reports from session logs")
    p_an.add_argument("--logs", nargs="+", required=True, help="log files or directories")
    p_an.add_argument("--metadata", help="participant metadata CSV")
    p_an.add_argument("--out-dir", required=True)
    p_an.add_argument("--no-figures", action="store_true")
    p_an.set_defaults(func=cmd_analyze)

    p_val = sub.add_parser("validate-schedule", help="check a schedule CSV")
    p_val.add_argument("path")
    p_val.set_defaults(func=cmd_validate_schedule)

    p_exp = sub.add_parser("export-schedule", help="write the built-in schedule as CSV")
    p_exp.add_argument("--out", required=True)
    p_exp.set_defaults(func=cmd_export_schedule)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
