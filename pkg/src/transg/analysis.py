"""Semantic-component analysis: census, cluster assignments, and
difference-vector exports with 2-D PCA projection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .datasets import Triple, TripleStore
from .model import TransGModel, primary_component, responsibilities

EFFECTIVE_THRESHOLD_DEFAULT = 0.01


@dataclass
class ComponentCensus:
    names: list[str]
    counts: list[int]
    average: float
    threshold: float

    def table(self) -> str:
        width = max((len(n) for n in self.names), default=8)
        lines = [f"{'relation':<{width}}  effective"]
        for name, count in zip(self.names, self.counts):
            lines.append(f"{name:<{width}}  {count:>9}")
        lines.append(f"{'average':<{width}}  {self.average:>9.2f}")
        return "\n".join(lines)


def component_census(
    model: TransGModel,
    effective_threshold: float = EFFECTIVE_THRESHOLD_DEFAULT,
    relation_names: list[str] | None = None,
) -> ComponentCensus:
    """Count, per relation, the components whose weight reaches
    ``effective_threshold`` (at least 1), and average the counts."""
    if relation_names is None:
        relation_names = [f"r{i}" for i in range(model.n_relations)]
    counts = [
        max(1, int((w >= effective_threshold).sum())) for w in model.rel_weights
    ]
    return ComponentCensus(
        list(relation_names),
        counts,
        float(np.mean(counts)),
        effective_threshold,
    )


class ClusterAssignment(NamedTuple):
    triple: Triple
    component: int
    responsibility: float


def _resolve_relation(store: TripleStore, relation: int | str) -> int:
    if isinstance(relation, str):
        if relation not in store.relations:
            raise KeyError(f"unknown relation {relation!r}")
        return store.relations.id(relation)
    if not 0 <= relation < store.n_relations:
        raise KeyError(f"relation id {relation} out of range")
    return relation


def assign_clusters(
    model: TransGModel, store: TripleStore, relation: int | str
) -> list[ClusterAssignment]:
    """Primary component and its responsibility for every train triple of the
    relation, sorted by component then responsibility descending."""
    r = _resolve_relation(store, relation)
    out = []
    for i in store.by_relation[r]:
        triple = store.train[i]
        m = primary_component(model, triple)
        rho = float(responsibilities(model, triple)[m])
        out.append(ClusterAssignment(triple, m, rho))
    out.sort(key=lambda a: (a.component, -a.responsibility))
    return out


def pca_2d(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project centered ``points`` (n x k) onto their top-2 principal axes.

    Returns (n x 2 projection, k x 2 axes, all eigenvalues descending). Axes
    come from the symmetric eigendecomposition of the sample covariance
    (ddof=1); each axis's sign is fixed so its largest-magnitude coordinate
    is positive.
    """
    if points.shape[0] < 2:
        raise ValueError("PCA needs at least 2 points")
    if points.shape[1] < 2:
        raise ValueError("PCA needs dim >= 2")
    centered = points - points.mean(axis=0)
    cov = centered.T @ centered / (points.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    axes = evecs[:, order[:2]]
    for j in range(2):
        lead = np.argmax(np.abs(axes[:, j]))
        if axes[lead, j] < 0:
            axes[:, j] = -axes[:, j]
    return centered @ axes, axes, evals[order]


def export_difference_vectors(
    model: TransGModel,
    store: TripleStore,
    relation: int | str,
    project: bool = False,
) -> tuple[list[str], list[list]]:
    """One row per train triple of the relation: head name, tail name,
    assigned component, then the tail-minus-head difference vector — raw
    k-dimensional, or its 2-D PCA projection with ``project``."""
    r = _resolve_relation(store, relation)
    triples = [store.train[i] for i in store.by_relation[r]]
    if project and len(triples) < 2:
        raise ValueError("projection needs at least 2 triples")
    diffs = np.array(
        [model.entity[t.tail] - model.entity[t.head] for t in triples]
    ).reshape(len(triples), model.dim)
    if project:
        diffs, _, _ = pca_2d(diffs)
        header = ["head", "tail", "component", "pc1", "pc2"]
    else:
        header = ["head", "tail", "component"] + [f"d{j}" for j in range(model.dim)]
    rows = []
    for triple, vec in zip(triples, diffs):
        rows.append(
            [
                store.entities.name(triple.head),
                store.entities.name(triple.tail),
                primary_component(model, triple),
            ]
            + [float(x) for x in vec]
        )
    return header, rows
