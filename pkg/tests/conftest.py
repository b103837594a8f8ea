import numpy as np
import pytest

from transg import TransGModel, TripleStore, init_model


def random_store(
    seed: int = 0,
    n_entities: int = 12,
    n_relations: int = 3,
    n_train: int = 40,
    n_valid: int = 0,
    n_test: int = 0,
) -> TripleStore:
    """Distinct random triples split into train/valid/test."""
    rng = np.random.default_rng(seed)
    taken: set[tuple[int, int, int]] = set()
    triples = []
    while len(triples) < n_train + n_valid + n_test:
        h = int(rng.integers(n_entities))
        r = int(rng.integers(n_relations))
        t = int(rng.integers(n_entities))
        if h == t or (h, r, t) in taken:
            continue
        taken.add((h, r, t))
        triples.append((h, r, t))
    return TripleStore.from_triples(
        triples[:n_train],
        triples[n_train : n_train + n_valid],
        triples[n_train + n_valid :],
        n_entities=n_entities,
        n_relations=n_relations,
    )


def random_model(
    store: TripleStore,
    dim: int = 3,
    seed: int = 0,
    max_components: int = 1,
    spread: float = 1.0,
) -> TransGModel:
    """Model with random parameters and random mixture sizes up to
    ``max_components``; entity vectors scaled by ``spread``."""
    rng = np.random.default_rng(seed)
    model = init_model(store, dim, rng=rng)
    model.entity *= spread
    for r in range(store.n_relations):
        m = int(rng.integers(1, max_components + 1))
        model.rel_vectors[r] = rng.normal(0, spread, (m, dim))
        w = rng.uniform(0.1, 1.0, m)
        model.rel_weights[r] = w / w.sum()
    return model


def write_dataset(
    directory,
    train,
    valid=None,
    test=None,
    column_order: str = "hrt",
    valid_name: str = "valid.txt",
):
    """Write split files from rows of (h, r, t) or (h, r, t, label) names."""
    directory.mkdir(parents=True, exist_ok=True)

    def render(row):
        if len(row) == 4:
            h, r, t, label = row
        else:
            (h, r, t), label = row, None
        cols = [h, r, t] if column_order == "hrt" else [h, t, r]
        if label is not None:
            cols.append(label)
        return "\t".join(cols)

    for name, rows in (("train.txt", train), (valid_name, valid), ("test.txt", test)):
        if rows is not None:
            (directory / name).write_text(
                "\n".join(render(row) for row in rows) + "\n", encoding="utf-8"
            )
    return directory


@pytest.fixture
def small_store() -> TripleStore:
    return random_store(seed=1, n_train=40, n_test=8)
