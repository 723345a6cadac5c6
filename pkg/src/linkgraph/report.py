"""Delimited tables and figures for the cross-repository report path.

Each table mirrors one of the standard report layouts (descriptive stats,
type shares, whole-graph metrics, per-category metrics). Bold min/max
markings become explicit summary rows; undefined metric values stay blank
in CSV and Markdown, never 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import SweepPoint
from .graph import GraphMetricsReport
from .taxonomy import CATEGORY_ORDER, LinkCategory, Prevalence

GRAPH_COLUMNS = (
    "pct_isolated",
    "pct_2comp",
    "pct_3comp_plus",
    "avg_density",
    "pct_trees",
    "pct_stars",
    "assortativity",
)


@dataclass(frozen=True)
class RepoReport:
    """Everything the table emitter needs for one repository."""

    name: str
    summary: dict
    type_prevalence: Prevalence
    category_prevalence: Prevalence
    whole_graph: GraphMetricsReport
    per_category: dict[LinkCategory, GraphMetricsReport]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.3f}"
    return str(value)


def _summary_rows(rows: list[list], numeric_from: int = 1) -> list[list]:
    """mean/std/min/max rows over the defined numeric cells of each column."""
    out = []
    for label, fn in (("mean", _mean), ("std", _std), ("min", min), ("max", max)):
        summary = [label]
        for col in range(numeric_from, len(rows[0])):
            values = [r[col] for r in rows if isinstance(r[col], (int, float))]
            summary.append(fn(values) if values else None)
        out.append(summary)
    return out


def _mean(values):
    return sum(values) / len(values)


def _std(values):
    if len(values) < 2:
        return 0.0
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_markdown(path: Path, header: list[str], rows: list[list]) -> None:
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(" --- " for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(cell) for cell in row) + " |")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _emit(path_base: Path, header: list[str], rows: list[list], with_summary: bool) -> list[Path]:
    if with_summary and len(rows) >= 2:
        rows = rows + _summary_rows(rows)
    _write_csv(path_base.with_suffix(".csv"), header, rows)
    _write_markdown(path_base.with_suffix(".md"), header, rows)
    return [path_base.with_suffix(".csv"), path_base.with_suffix(".md")]


def emit_tables(reports: list[RepoReport], out_dir: str | Path, figures: bool = True) -> list[Path]:
    """Write the four report tables (CSV + Markdown) and figures; returns paths."""
    if not reports:
        raise ValueError("emit_tables needs at least one repository report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    header = ["repository", "issues", "links", "link_types", "coverage", "cross_project_share"]
    rows = [[r.summary[c] for c in header] for r in reports]
    written += _emit(out_dir / "descriptive_stats", header, rows, with_summary=True)

    all_types = sorted(
        {t for r in reports for t in r.type_prevalence.shares},
        key=lambda t: (-_mean([r.type_prevalence.shares.get(t, 0.0) for r in reports]), t),
    )
    header = ["repository"] + all_types
    rows = [[r.name] + [r.type_prevalence.shares.get(t) for t in all_types] for r in reports]
    written += _emit(out_dir / "type_prevalence", header, rows, with_summary=True)

    header = ["repository"] + [c.value for c in CATEGORY_ORDER]
    rows = [
        [r.name] + [r.category_prevalence.shares.get(c, 0.0) for c in CATEGORY_ORDER]
        for r in reports
    ]
    written += _emit(out_dir / "category_prevalence", header, rows, with_summary=True)

    header = ["repository", *GRAPH_COLUMNS]
    rows = [
        [r.name] + [getattr(r.whole_graph, col) for col in GRAPH_COLUMNS] for r in reports
    ]
    written += _emit(out_dir / "whole_graph_metrics", header, rows, with_summary=True)

    header = ["category", *GRAPH_COLUMNS, "transitivity"]
    rows = []
    for category in CATEGORY_ORDER:
        cells = []
        for col in (*GRAPH_COLUMNS, "transitivity"):
            values = [
                getattr(r.per_category[category], col)
                for r in reports
                if category in r.per_category
                and getattr(r.per_category[category], col) is not None
            ]
            cells.append(_mean(values) if values else None)
        rows.append([category.value] + cells)
    written += _emit(out_dir / "category_metrics", header, rows, with_summary=False)

    if figures:
        written.append(render_category_prevalence(reports, out_dir / "category_prevalence.png"))
    return written


def render_category_prevalence(reports: list[RepoReport], path: Path) -> Path:
    """Stacked horizontal bars of category shares, one bar per repository."""
    names = [r.name for r in reports]
    fig, ax = plt.subplots(figsize=(8, max(2.0, 0.5 * len(names) + 1.5)))
    left = [0.0] * len(names)
    for category in CATEGORY_ORDER:
        shares = [r.category_prevalence.shares.get(category, 0.0) for r in reports]
        ax.barh(names, shares, left=left, label=category.value)
        left = [a + b for a, b in zip(left, shares)]
    ax.set_xlabel("share of links")
    ax.set_xlim(0, 1)
    ax.invert_yaxis()
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def emit_curves(points: list[SweepPoint], csv_path: str | Path, figure: bool = True) -> list[Path]:
    """Sweep curve as CSV plus a per-class precision/recall figure."""
    csv_path = Path(csv_path)
    header = [
        "setting",
        "precision_pos", "recall_pos", "f1_pos",
        "precision_neg", "recall_neg", "f1_neg",
        "macro_f1", "accuracy",
    ]
    rows = []
    for point in points:
        pos, neg = point.report.per_label[1], point.report.per_label[0]
        rows.append([
            point.setting,
            pos.precision, pos.recall, pos.f1,
            neg.precision, neg.recall, neg.f1,
            point.report.macro.f1, point.report.accuracy,
        ])
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{cell:.6f}" for cell in row])
    written = [csv_path]
    if figure:
        png_path = csv_path.with_suffix(".png")
        settings = [p.setting for p in points]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(settings, [p.report.per_label[1].precision for p in points], label="precision (link)")
        ax.plot(settings, [p.report.per_label[1].recall for p in points], label="recall (link)")
        ax.plot(settings, [p.report.per_label[0].precision for p in points], label="precision (non-link)", linestyle="--")
        ax.plot(settings, [p.report.per_label[0].recall for p in points], label="recall (non-link)", linestyle="--")
        ax.set_xlabel("threshold / k")
        ax.set_ylabel("score")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(png_path, dpi=150)
        plt.close(fig)
        written.append(png_path)
    return written
