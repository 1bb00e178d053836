"""Analysis reports: delimited outputs plus rendered figures.

Every report is written both as CSV and JSON with canonical formatting (no
timestamps, sorted keys), so report files are byte-stable across runs.  The
spider data additionally renders to radar figures, one per task, and the
summary to a bar figure.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import stats
from .records import SuccessRecord
from .reference import HUMAN_SUCCESS_SUMMARY, NON_REPRODUCIBILITY_STATEMENT

TASKS = ("ABX", "S")
METHODS = (1, 2)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _fmt(value, digits: int = 6):
    if value is None:
        return "NA"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return value


def summary_report(records: list[SuccessRecord], outdir: Path) -> list[dict]:
    rows = []
    for task in TASKS:
        for method in METHODS:
            try:
                s = stats.success_summary(records, task, method)
            except ValueError:
                continue
            rows.append(
                {
                    "task": task,
                    "method": method,
                    "n": s.n,
                    "mean_success_pct": round(s.mean_pct, 6),
                    "variance": round(s.variance, 6),
                    "std_deviation": round(s.std, 6),
                }
            )
    _write_csv(
        outdir / "summary.csv",
        ["task", "method", "n", "mean_success_pct", "variance", "std_deviation"],
        rows,
    )
    _write_json(
        outdir / "summary.json",
        {
            "rows": rows,
            "human_reference": {
                f"{t}/{m}": v for (t, m), v in sorted(HUMAN_SUCCESS_SUMMARY.items())
            },
            "note": NON_REPRODUCIBILITY_STATEMENT,
        },
    )
    return rows


def anova_report(records: list[SuccessRecord], outdir: Path) -> stats.AnovaTable:
    table = stats.two_way_anova(
        [r.as_row() for r in records],
        factors=("group", "day", "task"),
        response="success_rate",
    )
    rows = []
    for r in (*table.rows, table.residual):
        rows.append(
            {
                "source": r.source,
                "sum_of_squares": round(r.ss, 6),
                "df": r.df,
                "f_statistic": _fmt(r.f_stat),
                "p_value": _fmt(r.p_value),
            }
        )
    _write_csv(outdir / "anova.csv", ["source", "sum_of_squares", "df", "f_statistic", "p_value"], rows)
    _write_json(outdir / "anova.json", {"rows": rows, "total_ss": round(table.total_ss, 6)})
    return table


def nonparametric_report(records: list[SuccessRecord], outdir: Path) -> list[dict]:
    """Per-pair normality and homogeneity screens for the method comparison."""
    rows = []
    for task in TASKS:
        rates: dict[int, dict[str, list[float]]] = {m: {} for m in METHODS}
        for r in records:
            if r.task != task:
                continue
            for pair, (c, t) in r.pair_tallies.items():
                rates[r.method].setdefault(pair, []).append(c / t)
        pairs = sorted(set(rates[1]) | set(rates[2]))
        for pair in pairs:
            x = rates[1].get(pair, [])
            y = rates[2].get(pair, [])
            row = {"task": task, "pair": pair, "n_method1": len(x), "n_method2": len(y)}
            for label, sample in (("method1", x), ("method2", y)):
                try:
                    sw = stats.shapiro_wilk(sample)
                    row[f"shapiro_w_{label}"] = _fmt(sw.statistic)
                    row[f"shapiro_p_{label}"] = _fmt(sw.p_value)
                except (ValueError, stats.DegenerateSample):
                    row[f"shapiro_w_{label}"] = "NA"
                    row[f"shapiro_p_{label}"] = "NA"
            try:
                lev = stats.levene([x, y])
                row["levene_stat"] = _fmt(lev.statistic)
                row["levene_p"] = _fmt(lev.p_value)
            except (ValueError, stats.DegenerateSample):
                row["levene_stat"] = "NA"
                row["levene_p"] = "NA"
            rows.append(row)
    fieldnames = [
        "task",
        "pair",
        "n_method1",
        "n_method2",
        "shapiro_w_method1",
        "shapiro_p_method1",
        "shapiro_w_method2",
        "shapiro_p_method2",
        "levene_stat",
        "levene_p",
    ]
    _write_csv(outdir / "nonparametric.csv", fieldnames, rows)
    _write_json(outdir / "nonparametric.json", {"rows": rows})
    return rows


def spider_report(records: list[SuccessRecord], outdir: Path, figures: bool = True) -> stats.PairwiseReport:
    report = stats.pairwise_report(records)
    rows = [
        {
            "task": c.task,
            "key": c.key,
            "rate_method1": round(c.rate_method1, 6),
            "rate_method2": round(c.rate_method2, 6),
            "u_statistic": round(c.u_statistic, 6),
            "p_value": round(c.p_value, 6),
            "significant": c.significant,
        }
        for c in (*report.pairs, *report.distances)
    ]
    _write_csv(
        outdir / "spider.csv",
        ["task", "key", "rate_method1", "rate_method2", "u_statistic", "p_value", "significant"],
        rows,
    )
    _write_json(outdir / "spider.json", {"rows": rows})
    if figures:
        for task in TASKS:
            task_pairs = [c for c in report.pairs if c.task == task]
            if task_pairs:
                render_spider_figure(
                    task_pairs, outdir / f"spider_{task.lower()}.png", title=f"Task {task} success rate by pair"
                )
        render_summary_figure(records, outdir / "success_rates.png")
    return report


def render_spider_figure(pairs: list[stats.PairComparison], path: Path, title: str = "") -> None:
    labels = [c.key for c in pairs]
    angles = np.linspace(0.0, 2.0 * math.pi, len(labels), endpoint=False)
    angles_closed = np.concatenate([angles, angles[:1]])
    fig, ax = plt.subplots(subplot_kw={"projection": "polar"}, figsize=(5.5, 5.5))
    for attr, label, color in (
        ("rate_method1", "Method 1", "tab:blue"),
        ("rate_method2", "Method 2", "tab:red"),
    ):
        values = [getattr(c, attr) * 100.0 for c in pairs]
        closed = values + values[:1]
        ax.plot(angles_closed, closed, label=label, color=color)
        ax.fill(angles_closed, closed, alpha=0.12, color=color)
    ax.set_xticks(angles)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0, 100)
    ax.set_title(title, fontsize=10)
    ax.legend(loc="lower right", bbox_to_anchor=(1.15, -0.1), fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata={"Software": "hapsim"})
    plt.close(fig)


def render_summary_figure(records: list[SuccessRecord], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    positions, heights, errors, ticklabels = [], [], [], []
    pos = 0.0
    for task in TASKS:
        for method in METHODS:
            try:
                s = stats.success_summary(records, task, method)
            except ValueError:
                continue
            positions.append(pos)
            heights.append(s.mean_pct)
            errors.append(s.std)
            ticklabels.append(f"{task}\nM{method}")
            pos += 1.0
        pos += 0.5
    colors = ["tab:blue", "tab:red"] * (len(positions) // 2 + 1)
    ax.bar(positions, heights, yerr=errors, capsize=4, color=colors[: len(positions)])
    ax.axhline(50.0, color="gray", linestyle="--", linewidth=1, label="chance")
    ax.set_xticks(positions)
    ax.set_xticklabels(ticklabels, fontsize=9)
    ax.set_ylabel("success rate (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150, bbox_inches="tight", metadata={"Software": "hapsim"})
    plt.close(fig)


def write_all_reports(records: list[SuccessRecord], outdir: str | Path, figures: bool = True) -> None:
    methods = {r.method for r in records}
    if not {1, 2} <= methods:
        raise stats.MissingMethodCoverage(
            f"analysis needs both rendering methods, logs cover {sorted(methods)}"
        )
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    summary_report(records, out)
    anova_report(records, out)
    nonparametric_report(records, out)
    spider_report(records, out, figures=figures)
