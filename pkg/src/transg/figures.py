"""Figure rendering for CLI reports. Everything draws to files via the Agg
backend; the analysis module itself stays plotting-free."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .analysis import ComponentCensus
from .evaluation import CATEGORIES, SLOTS, EvalReport
from .training import TrainReport


def save_difference_scatter(
    path: str | Path, rows: list[list], title: str = ""
) -> None:
    """Scatter of projected difference vectors, one color per assigned
    component. ``rows`` come from export_difference_vectors(project=True):
    [head, tail, component, pc1, pc2]."""
    fig, ax = plt.subplots(figsize=(6, 5))
    components = sorted({row[2] for row in rows})
    for m in components:
        xs = [row[3] for row in rows if row[2] == m]
        ys = [row[4] for row in rows if row[2] == m]
        ax.scatter(xs, ys, s=12, alpha=0.7, label=f"component {m}")
    ax.set_xlabel("pc1")
    ax.set_ylabel("pc2")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_census_bar(path: str | Path, census: ComponentCensus, max_bars: int = 50) -> None:
    """Bar chart of per-relation effective component counts (largest
    ``max_bars`` shown), with the dataset average drawn as a line."""
    pairs = sorted(zip(census.names, census.counts), key=lambda p: -p[1])[:max_bars]
    names = [p[0] for p in pairs]
    counts = [p[1] for p in pairs]
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(names)), 4))
    ax.bar(range(len(names)), counts)
    ax.axhline(census.average, color="tab:red", linestyle="--", label=f"average {census.average:.2f}")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=7)
    ax.set_ylabel("effective components")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_category_bar(path: str | Path, report: EvalReport) -> None:
    """Grouped bars of hits@10 by relation category, one group per slot."""
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.35
    for i, slot in enumerate(SLOTS):
        values = [
            report.by_category[(cat, slot)].hits10_filtered
            if (cat, slot) in report.by_category
            else 0.0
            for cat in CATEGORIES
        ]
        offset = (i - 0.5) * width
        ax.bar([x + offset for x in range(len(CATEGORIES))], values, width, label=slot)
    ax.set_xticks(range(len(CATEGORIES)))
    ax.set_xticklabels(CATEGORIES)
    ax.set_ylabel("hits@10 (%)")
    ax.set_ylim(0, 100)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_accuracy_bar(
    path: str | Path, per_relation: dict[int, float], relation_names: list[str]
) -> None:
    """Per-relation classification accuracy."""
    names = [relation_names[r] for r in per_relation]
    values = list(per_relation.values())
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(names)), 4))
    ax.bar(range(len(names)), values)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=90, fontsize=7)
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 100)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_loss_curve(path: str | Path, report: TrainReport) -> None:
    """Mean pair loss per epoch."""
    epochs = [e.epoch for e in report.epochs]
    losses = [e.mean_loss for e in report.epochs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(epochs, losses)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean pair loss")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
