"""Link-prediction ranking and triple-classification evaluation.

Ranking replaces each slot of a test triple with every entity, scores all
candidates in one vectorized pass (so the true triple's self-comparison is
exact), and counts strictly-better candidates. Classification tunes one
energy threshold per relation on validation data.
"""
from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .datasets import HEAD, TAIL, LabeledTriple, Triple, TripleStore, relation_category
from .model import TransGModel, energy, log_score_candidates

CATEGORIES = ("1-1", "1-N", "N-1", "N-N")
SLOTS = (HEAD, TAIL)


class SlotStats(NamedTuple):
    count: int
    hits10_filtered: float


class RelationStats(NamedTuple):
    count: int
    mean_rank_filtered: float
    hits10_filtered: float


@dataclass
class EvalReport:
    mean_rank_raw: float
    hits10_raw: float
    mean_rank_filtered: float | None = None
    hits10_filtered: float | None = None
    by_category: dict[tuple[str, str], SlotStats] = field(default_factory=dict)
    by_relation: dict[int, RelationStats] = field(default_factory=dict)
    n_queries: int = 0


def _check_compatible(model: TransGModel, store: TripleStore) -> None:
    if model.n_entities != store.n_entities or model.n_relations != store.n_relations:
        raise ValueError(
            f"model ({model.n_entities} entities, {model.n_relations} relations) "
            f"does not match store ({store.n_entities}, {store.n_relations})"
        )


def build_filter_index(store: TripleStore):
    """Per-query exclusion lists from every known positive triple: heads that
    complete (?, r, t) and tails that complete (h, r, ?)."""
    heads_of: dict[tuple[int, int], list[int]] = defaultdict(list)
    tails_of: dict[tuple[int, int], list[int]] = defaultdict(list)
    for h, r, t in store.known:
        heads_of[(r, t)].append(h)
        tails_of[(h, r)].append(t)
    return heads_of, tails_of


def _rank_pair(model, triple, slot, filters, ent_sq):
    """(raw rank, filtered rank) for one query; filtered is None when no
    filter index is supplied."""
    h, r, t = triple
    anchor, true_id = (t, h) if slot == HEAD else (h, t)
    logs = log_score_candidates(model, r, anchor, slot, ent_sq)
    true_val = logs[true_id]
    better = logs > true_val
    raw = 1 + int(better.sum())
    if filters is None:
        return raw, None
    heads_of, tails_of = filters
    exclude = heads_of.get((r, t), ()) if slot == HEAD else tails_of.get((h, r), ())
    spared = sum(1 for e in exclude if e != true_id and better[e])
    return raw, raw - spared


def rank_triple(
    model: TransGModel,
    triple: Triple,
    slot: str,
    filtered: bool,
    store: TripleStore,
    _filters=None,
    _ent_sq=None,
) -> int:
    """Rank of the true entity among all substitutions into ``slot``:
    1 + the number of strictly higher-scoring candidates. Filtered mode
    ignores candidates (other than the true entity) that form a known
    positive triple."""
    _check_compatible(model, store)
    if filtered and _filters is None:
        _filters = build_filter_index(store)
    raw, filt = _rank_pair(model, triple, slot, _filters if filtered else None, _ent_sq)
    return filt if filtered else raw


def link_prediction_eval(
    model: TransGModel,
    store: TripleStore,
    threads: int = 1,
    filtered: bool = True,
) -> EvalReport:
    """Rank both slots of every test triple and aggregate Mean Rank and
    HITS@10, raw and (optionally) filtered, with per-category and
    per-relation breakdowns. Deterministic for any thread count."""
    _check_compatible(model, store)
    if not store.test:
        raise ValueError("test split is empty")
    filters = build_filter_index(store) if filtered else None
    ent_sq = np.einsum("ij,ij->i", model.entity, model.entity)

    def task(triple):
        return tuple(
            _rank_pair(model, triple, slot, filters, ent_sq) for slot in SLOTS
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # map() yields in submission order, keeping the reduction
            # deterministic regardless of worker count.
            results = list(pool.map(task, store.test, chunksize=64))
    else:
        results = [task(triple) for triple in store.test]

    raw_ranks, filt_ranks = [], []
    cat_hits: dict[tuple[str, str], list[int]] = {
        (c, s): [] for c in CATEGORIES for s in SLOTS
    }
    rel_ranks: dict[int, list[int]] = defaultdict(list)
    for triple, per_slot in zip(store.test, results):
        cat = relation_category(store, triple.relation)
        for slot, (raw, filt) in zip(SLOTS, per_slot):
            raw_ranks.append(raw)
            rank = filt if filtered else raw
            filt_ranks.append(filt)
            cat_hits[(cat, slot)].append(rank)
            rel_ranks[triple.relation].append(rank)

    def hits10(ranks) -> float:
        return 100.0 * sum(1 for r in ranks if r <= 10) / len(ranks)

    report = EvalReport(
        mean_rank_raw=float(np.mean(raw_ranks)),
        hits10_raw=hits10(raw_ranks),
        n_queries=len(raw_ranks),
    )
    if filtered:
        report.mean_rank_filtered = float(np.mean(filt_ranks))
        report.hits10_filtered = hits10(filt_ranks)
    for key, ranks in cat_hits.items():
        if ranks:
            report.by_category[key] = SlotStats(len(ranks), hits10(ranks))
    for rel, ranks in sorted(rel_ranks.items()):
        report.by_relation[rel] = RelationStats(
            len(ranks), float(np.mean(ranks)), hits10(ranks)
        )
    return report


@dataclass
class ClassificationThresholds:
    per_relation: dict[int, float]
    fallback: float

    def threshold(self, relation: int) -> float:
        return self.per_relation.get(relation, self.fallback)


def _best_threshold(energies: np.ndarray, labels: np.ndarray) -> float:
    """Sweep thresholds in ascending order — below-minimum and above-maximum
    sentinels plus the midpoints of consecutive distinct energies — and keep
    the first accuracy maximizer. Predicted positive iff energy < threshold."""
    order = np.argsort(energies, kind="stable")
    e = energies[order]
    y = labels[order]
    n = len(e)
    correct = n - int(y.sum())  # everything predicted negative
    best_correct, best_sigma = correct, float(e[0] - 1.0)
    i = 0
    while i < n:
        j = i
        while j < n and e[j] == e[i]:
            j += 1
        pos = int(y[i:j].sum())
        correct += pos - (j - i - pos)
        sigma = float((e[j - 1] + e[j]) / 2.0) if j < n else float(e[-1] + 1.0)
        if correct > best_correct:
            best_correct, best_sigma = correct, sigma
        i = j
    return best_sigma


def tune_thresholds(
    model: TransGModel, valid: list[LabeledTriple]
) -> ClassificationThresholds:
    """Per-relation energy thresholds maximizing validation accuracy, plus a
    pooled fallback for relations unseen in validation."""
    if not valid:
        raise ValueError("no labeled validation triples")
    energies = np.array([energy(model, lt.triple) for lt in valid])
    labels = np.array([lt.label for lt in valid])
    relations = np.array([lt.triple.relation for lt in valid])
    per_relation = {
        int(r): _best_threshold(energies[relations == r], labels[relations == r])
        for r in np.unique(relations)
    }
    return ClassificationThresholds(per_relation, _best_threshold(energies, labels))


def classify(
    model: TransGModel,
    thresholds: ClassificationThresholds,
    test: list[LabeledTriple],
) -> tuple[float, dict[int, float]]:
    """(overall accuracy %, per-relation accuracy %). A triple is predicted
    positive iff its energy is below its relation's threshold."""
    if not test:
        raise ValueError("no labeled test triples")
    correct_total = 0
    by_rel: dict[int, list[bool]] = defaultdict(list)
    for lt in test:
        predicted = energy(model, lt.triple) < thresholds.threshold(lt.triple.relation)
        ok = predicted == lt.label
        correct_total += ok
        by_rel[lt.triple.relation].append(ok)
    per_relation = {
        r: 100.0 * sum(oks) / len(oks) for r, oks in sorted(by_rel.items())
    }
    return 100.0 * correct_total / len(test), per_relation
