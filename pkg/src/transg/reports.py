"""Rendering of evaluation, classification, and analysis results as aligned
text tables and comma-separated files."""
from __future__ import annotations

import csv
from pathlib import Path

from .analysis import ClusterAssignment, ComponentCensus
from .datasets import TripleStore
from .evaluation import CATEGORIES, SLOTS, ClassificationThresholds, EvalReport


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    return "-" if value is None else f"{value:.1f}"


def format_eval_report(report: EvalReport) -> str:
    lines = [
        f"{'metric':<14}{'raw':>10}{'filtered':>10}",
        f"{'mean rank':<14}{report.mean_rank_raw:>10.1f}{_fmt(report.mean_rank_filtered):>10}",
        f"{'hits@10 (%)':<14}{report.hits10_raw:>10.1f}{_fmt(report.hits10_filtered):>10}",
    ]
    if report.by_category:
        label = "filtered" if report.hits10_filtered is not None else "raw"
        lines.append("")
        lines.append(f"{label} hits@10 (%) by relation category")
        lines.append(f"{'slot':<6}" + "".join(f"{c:>8}" for c in CATEGORIES))
        for slot in SLOTS:
            cells = []
            for cat in CATEGORIES:
                stats = report.by_category.get((cat, slot))
                cells.append(f"{stats.hits10_filtered:>8.1f}" if stats else f"{'-':>8}")
            lines.append(f"{slot:<6}" + "".join(cells))
    return "\n".join(lines)


def eval_summary_rows(report: EvalReport) -> tuple[list[str], list[list]]:
    header = ["metric", "slot", "category", "value"]
    rows = [
        ["mean_rank_raw", "", "", report.mean_rank_raw],
        ["hits10_raw", "", "", report.hits10_raw],
    ]
    if report.mean_rank_filtered is not None:
        rows.append(["mean_rank_filtered", "", "", report.mean_rank_filtered])
        rows.append(["hits10_filtered", "", "", report.hits10_filtered])
    for (cat, slot), stats in sorted(report.by_category.items()):
        rows.append(["hits10_by_category", slot, cat, stats.hits10_filtered])
        rows.append(["count_by_category", slot, cat, stats.count])
    return header, rows


def eval_relation_rows(
    report: EvalReport, relation_names: list[str]
) -> tuple[list[str], list[list]]:
    header = ["relation", "queries", "mean_rank", "hits10"]
    rows = [
        [relation_names[r], s.count, s.mean_rank_filtered, s.hits10_filtered]
        for r, s in report.by_relation.items()
    ]
    return header, rows


def format_classification(
    accuracy: float,
    per_relation: dict[int, float],
    thresholds: ClassificationThresholds,
    relation_names: list[str],
) -> str:
    width = max((len(relation_names[r]) for r in per_relation), default=8)
    width = max(width, len("relation"))
    lines = [
        f"overall accuracy: {accuracy:.1f}%",
        "",
        f"{'relation':<{width}}{'accuracy':>10}{'threshold':>12}",
    ]
    for r, acc in per_relation.items():
        lines.append(
            f"{relation_names[r]:<{width}}{acc:>9.1f}%{thresholds.threshold(r):>12.4f}"
        )
    return "\n".join(lines)


def classification_rows(
    accuracy: float,
    per_relation: dict[int, float],
    thresholds: ClassificationThresholds,
    relation_names: list[str],
) -> tuple[list[str], list[list]]:
    header = ["relation", "accuracy", "threshold"]
    rows = [["(overall)", accuracy, ""]]
    for r, acc in per_relation.items():
        rows.append([relation_names[r], acc, thresholds.threshold(r)])
    return header, rows


def census_rows(census: ComponentCensus) -> tuple[list[str], list[list]]:
    header = ["relation", "effective_components"]
    rows = [[n, c] for n, c in zip(census.names, census.counts)]
    rows.append(["(average)", census.average])
    return header, rows


def cluster_rows(
    assignments: list[ClusterAssignment], store: TripleStore
) -> tuple[list[str], list[list]]:
    header = ["head", "relation", "tail", "component", "responsibility"]
    rows = [
        [
            store.entities.name(a.triple.head),
            store.relations.name(a.triple.relation),
            store.entities.name(a.triple.tail),
            a.component,
            a.responsibility,
        ]
        for a in assignments
    ]
    return header, rows
