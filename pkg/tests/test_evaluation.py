import math

import numpy as np
import pytest

from conftest import random_model, random_store
from transg import (
    LabeledTriple,
    TransGModel,
    Triple,
    classify,
    energy,
    link_prediction_eval,
    rank_triple,
    score,
    tune_thresholds,
)
from transg.datasets import HEAD, TAIL, relation_category
from transg.evaluation import _best_threshold


def brute_force_rank(model, store, triple, slot, filtered, transform=None):
    """Independent oracle: score every candidate one by one with the scalar
    path and count strictly better survivors."""
    h, r, t = triple
    true_id = h if slot == HEAD else t
    transform = transform or (lambda s: s)

    def candidate(e):
        return Triple(e, r, t) if slot == HEAD else Triple(h, r, e)

    true_score = transform(score(model, candidate(true_id)))
    better = 0
    for e in range(store.n_entities):
        if e == true_id:
            continue
        if filtered and tuple(candidate(e)) in store.known:
            continue
        if transform(score(model, candidate(e))) > true_score:
            better += 1
    return 1 + better


@pytest.fixture
def store():
    return random_store(seed=20, n_entities=15, n_relations=3, n_train=50, n_test=12)


@pytest.fixture
def model(store):
    return random_model(store, dim=3, seed=20, max_components=3, spread=1.5)


def test_rank_matches_brute_force(store, model):
    for triple in store.test:
        for slot in (HEAD, TAIL):
            for filtered in (False, True):
                assert rank_triple(model, triple, slot, filtered, store) == (
                    brute_force_rank(model, store, triple, slot, filtered)
                )


def test_rank_perfect_and_worst_case():
    # entity embeddings on a line; relation translates 0 exactly onto 1
    entity = np.array([[0.0], [5.0], [40.0], [80.0], [120.0]])
    model = TransGModel(entity, [np.array([1.0])], [np.array([[5.0]])], 2.0)
    store = random_store(seed=21, n_entities=5, n_relations=1, n_train=6, n_test=0)
    assert rank_triple(model, Triple(0, 0, 1), TAIL, False, store) == 1
    # the true tail is scored strictly lowest among the 5 candidates
    worst = Triple(0, 0, 4)
    assert rank_triple(model, worst, TAIL, False, store) == 5


def test_filtered_rank_excludes_known_competitors():
    # tail query for (0, r, 1): candidate order t4 > t2 > t3 > t1 > t0;
    # known competitors 2 and 3 drop out in filtered mode
    entity = np.array([[0.0], [4.5], [4.8], [4.7], [4.9]])
    model = TransGModel(entity, [np.array([1.0])], [np.array([[5.0]])], 2.0)
    store = random_store(seed=22, n_entities=5, n_relations=1, n_train=4, n_test=0)
    store.known = {(0, 0, 1), (0, 0, 2), (0, 0, 3)}
    triple = Triple(0, 0, 1)
    assert rank_triple(model, triple, TAIL, False, store) == 4
    assert rank_triple(model, triple, TAIL, True, store) == 2


def test_filtered_never_worse_than_raw(store, model):
    for triple in store.test:
        for slot in (HEAD, TAIL):
            raw = rank_triple(model, triple, slot, False, store)
            filt = rank_triple(model, triple, slot, True, store)
            assert filt <= raw


def test_rank_invariant_under_increasing_transforms(store, model):
    # the oracle ordering is unchanged by exp or positive-affine transforms
    for triple in store.test[:4]:
        for slot in (HEAD, TAIL):
            base = brute_force_rank(model, store, triple, slot, False)
            assert base == brute_force_rank(
                model, store, triple, slot, False, transform=lambda s: 3.0 * s + 7.0
            )
            assert base == brute_force_rank(
                model, store, triple, slot, False, transform=math.exp
            )
            assert base == rank_triple(model, triple, slot, False, store)


def test_rank_vocab_mismatch_errors(store):
    small = random_store(seed=23, n_entities=4, n_relations=1, n_train=4)
    wrong = random_model(small, dim=3, seed=23)
    with pytest.raises(ValueError):
        rank_triple(wrong, store.test[0], HEAD, False, store)


def test_link_prediction_report_aggregates(store, model):
    report = link_prediction_eval(model, store)
    n = 2 * len(store.test)
    assert report.n_queries == n

    raw_ranks, filt_ranks = [], []
    for triple in store.test:
        for slot in (HEAD, TAIL):
            raw_ranks.append(brute_force_rank(model, store, triple, slot, False))
            filt_ranks.append(brute_force_rank(model, store, triple, slot, True))
    assert report.mean_rank_raw == pytest.approx(np.mean(raw_ranks))
    assert report.mean_rank_filtered == pytest.approx(np.mean(filt_ranks))
    assert report.hits10_raw == pytest.approx(
        100.0 * sum(r <= 10 for r in raw_ranks) / n
    )
    assert report.hits10_filtered == pytest.approx(
        100.0 * sum(r <= 10 for r in filt_ranks) / n
    )
    assert report.mean_rank_filtered <= report.mean_rank_raw
    assert report.hits10_filtered >= report.hits10_raw


def test_category_table_weighted_average_is_overall(store, model):
    report = link_prediction_eval(model, store)
    total = sum(s.count for s in report.by_category.values())
    assert total == report.n_queries
    weighted = (
        sum(s.count * s.hits10_filtered for s in report.by_category.values()) / total
    )
    assert weighted == pytest.approx(report.hits10_filtered, abs=1e-9)
    for (cat, slot), stats in report.by_category.items():
        assert cat in ("1-1", "1-N", "N-1", "N-N")
        assert slot in (HEAD, TAIL)
        assert 0.0 <= stats.hits10_filtered <= 100.0


def test_per_relation_breakdown_counts(store, model):
    report = link_prediction_eval(model, store)
    assert sum(s.count for s in report.by_relation.values()) == report.n_queries
    for r, stats in report.by_relation.items():
        expected = 2 * sum(t.relation == r for t in store.test)
        assert stats.count == expected


def test_eval_thread_count_does_not_change_results(store, model):
    a = link_prediction_eval(model, store, threads=1)
    b = link_prediction_eval(model, store, threads=4)
    assert a == b


def test_eval_without_filtering(store, model):
    report = link_prediction_eval(model, store, filtered=False)
    assert report.mean_rank_filtered is None
    assert report.hits10_filtered is None
    assert report.mean_rank_raw >= 1.0


def test_eval_empty_test_split_errors(model):
    empty = random_store(seed=24, n_entities=15, n_relations=3, n_train=40, n_test=0)
    with pytest.raises(ValueError):
        link_prediction_eval(model, empty)


def test_best_threshold_separable():
    # positives {1,2}, negatives {5,6}: midpoint 3.5 separates perfectly
    e = np.array([1.0, 2.0, 5.0, 6.0])
    y = np.array([True, True, False, False])
    assert _best_threshold(e, y) == pytest.approx(3.5)


def test_best_threshold_all_positive_accepts_everything():
    e = np.array([2.0, 7.0, 4.0])
    y = np.array([True, True, True])
    sigma = _best_threshold(e, y)
    assert sigma > e.max()


def test_best_threshold_interleaved():
    # pos {1,4}, neg {2,6}: best 75% with the first maximizer in (1,2)
    e = np.array([1.0, 4.0, 2.0, 6.0])
    y = np.array([True, True, False, False])
    sigma = _best_threshold(e, y)
    assert 1.0 < sigma < 2.0
    correct = sum((ei < sigma) == yi for ei, yi in zip(e, y))
    assert correct == 3


def test_best_threshold_beats_random_thresholds():
    rng = np.random.default_rng(25)
    e = rng.normal(0, 2, 80)
    y = rng.random(80) < 0.5
    sigma = _best_threshold(e, y)

    def acc(s):
        return np.mean((e < s) == y)

    best = acc(sigma)
    for s in rng.uniform(e.min() - 1, e.max() + 1, 1000):
        assert best >= acc(s)


def make_energy_model(tail_positions):
    """k=1 model with u_h = 0, u_r = 0: energy of (0, 0, t) is u_t^2 / 2."""
    entity = np.array([[0.0]] + [[x] for x in tail_positions])
    return TransGModel(entity, [np.array([1.0]), np.array([1.0])],
                       [np.array([[0.0]]), np.array([[0.0]])], 2.0)


def test_tune_and_classify_end_to_end():
    # validation energies: pos {1, 2}, neg {5, 6} via u_t = sqrt(2 E)
    positions = [math.sqrt(2.0), 2.0, math.sqrt(10.0), math.sqrt(12.0)]
    model = make_energy_model(positions)
    valid = [
        LabeledTriple(Triple(0, 0, 1), True),
        LabeledTriple(Triple(0, 0, 2), True),
        LabeledTriple(Triple(0, 0, 3), False),
        LabeledTriple(Triple(0, 0, 4), False),
    ]
    thresholds = tune_thresholds(model, valid)
    assert thresholds.per_relation[0] == pytest.approx(3.5)
    accuracy, per_relation = classify(model, thresholds, valid)
    assert accuracy == 100.0
    assert per_relation == {0: 100.0}


def test_classify_uses_fallback_for_unseen_relation():
    positions = [1.0, 2.0]
    model = make_energy_model(positions)
    valid = [
        LabeledTriple(Triple(0, 0, 1), True),
        LabeledTriple(Triple(0, 0, 2), False),
    ]
    thresholds = tune_thresholds(model, valid)
    assert 1 not in thresholds.per_relation
    # relation 1 falls back to the pooled threshold
    test = [
        LabeledTriple(Triple(0, 1, 1), True),
        LabeledTriple(Triple(0, 1, 2), False),
    ]
    accuracy, per_relation = classify(model, thresholds, test)
    expected = [
        energy(model, lt.triple) < thresholds.fallback for lt in test
    ]
    hits = sum(p == lt.label for p, lt in zip(expected, test))
    assert accuracy == pytest.approx(100.0 * hits / 2)
    assert set(per_relation) == {1}


def test_tune_thresholds_empty_errors(model):
    with pytest.raises(ValueError):
        tune_thresholds(model, [])
    with pytest.raises(ValueError):
        classify(model, tune_thresholds(model, [LabeledTriple(Triple(0, 0, 1), True)]), [])


def test_category_assignment_uses_train_statistics(store, model):
    report = link_prediction_eval(model, store)
    for triple in store.test:
        cat = relation_category(store, triple.relation)
        assert (cat, HEAD) in report.by_category
