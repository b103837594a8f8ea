"""Triple datasets: loading, vocabularies, indexes, and negative sampling.

A dataset directory holds plain-text triple files (``train.txt``,
``valid.txt``/``dev.txt``, ``test.txt``), one triple per line, tab- or
whitespace-separated. Classification-style valid/test files carry a fourth
column with the label (``1`` or ``-1``).
"""
from __future__ import annotations

import sys
from collections import defaultdict
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

HEAD = "head"
TAIL = "tail"

_SPLIT_FILES = {
    "train": ("train.txt",),
    "valid": ("valid.txt", "dev.txt"),
    "test": ("test.txt",),
}


class DatasetError(ValueError):
    """Raised for unusable dataset directories or inconsistent contents."""


class ParseError(DatasetError):
    """Raised for a malformed line; carries the file and line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class LabeledTriple(NamedTuple):
    triple: Triple
    label: bool


class Vocab:
    """Dense zero-based name<->id mapping, insertion-ordered."""

    def __init__(self, names: Iterable[str] = ()):
        self._names: list[str] = []
        self._ids: dict[str, int] = {}
        for name in names:
            self.add(name)

    def add(self, name: str) -> int:
        idx = self._ids.get(name)
        if idx is None:
            idx = len(self._names)
            self._ids[name] = idx
            self._names.append(name)
        return idx

    def id(self, name: str) -> int:
        return self._ids[name]

    def name(self, idx: int) -> str:
        return self._names[idx]

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self._names == other._names


class TripleStore:
    """Integer-encoded triples with train/valid/test splits and indexes.

    ``known`` is the set of positive triples from all three splits and backs
    both corruption resampling and filtered ranking. For labeled splits only
    the positive triples enter ``known``; the full labeled lists are kept in
    ``valid_labeled``/``test_labeled``.
    """

    def __init__(
        self,
        entities: Vocab,
        relations: Vocab,
        train: list[Triple],
        valid: list[Triple],
        test: list[Triple],
        valid_labeled: list[LabeledTriple] | None = None,
        test_labeled: list[LabeledTriple] | None = None,
    ):
        self.entities = entities
        self.relations = relations
        self.train = train
        self.valid = valid
        self.test = test
        self.valid_labeled = valid_labeled or []
        self.test_labeled = test_labeled or []
        self.labeled = bool(self.valid_labeled or self.test_labeled)

        self.known: set[tuple[int, int, int]] = set(train)
        self.known.update(valid)
        self.known.update(test)

        self.by_relation: dict[int, list[int]] = defaultdict(list)
        self.hr_to_tails: dict[tuple[int, int], set[int]] = defaultdict(set)
        self.rt_to_heads: dict[tuple[int, int], set[int]] = defaultdict(set)
        for i, (h, r, t) in enumerate(train):
            self.by_relation[r].append(i)
            self.hr_to_tails[(h, r)].add(t)
            self.rt_to_heads[(r, t)].add(h)

        self.bern_stats = compute_bern_stats(self)

    @classmethod
    def from_triples(
        cls,
        train: Sequence[tuple[int, int, int]],
        valid: Sequence[tuple[int, int, int]] = (),
        test: Sequence[tuple[int, int, int]] = (),
        n_entities: int | None = None,
        n_relations: int | None = None,
        entity_names: Sequence[str] | None = None,
        relation_names: Sequence[str] | None = None,
    ) -> "TripleStore":
        """Build an in-memory store from integer triples (mainly for tests
        and synthetic data)."""
        all_triples = list(train) + list(valid) + list(test)
        if n_entities is None:
            n_entities = 1 + max(max(h, t) for h, _, t in all_triples)
        if n_relations is None:
            n_relations = 1 + max(r for _, r, _ in all_triples)
        if entity_names is None:
            entity_names = [f"e{i}" for i in range(n_entities)]
        if relation_names is None:
            relation_names = [f"r{i}" for i in range(n_relations)]
        return cls(
            Vocab(entity_names),
            Vocab(relation_names),
            [Triple(*t) for t in train],
            [Triple(*t) for t in valid],
            [Triple(*t) for t in test],
        )

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def summary(self) -> str:
        lines = [
            f"entities   {self.n_entities:>10,}",
            f"relations  {self.n_relations:>10,}",
            f"train      {len(self.train):>10,}",
        ]
        for split, plain, labeled in (
            ("valid", self.valid, self.valid_labeled),
            ("test", self.test, self.test_labeled),
        ):
            if labeled:
                neg = len(labeled) - len(plain)
                lines.append(
                    f"{split:<10} {len(plain):>10,}  (+{neg:,} negatives)"
                )
            else:
                lines.append(f"{split:<10} {len(plain):>10,}")
        return "\n".join(lines)


def _find_split_file(data_dir: Path, split: str) -> Path | None:
    for candidate in _SPLIT_FILES[split]:
        path = data_dir / candidate
        if path.is_file():
            return path
    return None


def _read_rows(path: Path, column_order: str, labeled: bool | None):
    """Yield (line_no, head, relation, tail, label) name tuples.

    ``labeled=None`` sniffs the column count from the first data line and
    then enforces it for the rest of the file.
    """
    expect: int | None = None
    if labeled is True:
        expect = 4
    elif labeled is False:
        expect = 3
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) == 1:
                parts = line.split()
            if expect is None:
                if len(parts) not in (3, 4):
                    raise ParseError(
                        path, line_no, f"expected 3 or 4 columns, got {len(parts)}"
                    )
                expect = len(parts)
            if len(parts) != expect:
                raise ParseError(
                    path, line_no, f"expected {expect} columns, got {len(parts)}"
                )
            if expect == 4:
                a, b, c, tag = parts
                if tag not in ("1", "-1"):
                    raise ParseError(path, line_no, f"bad label {tag!r}")
                label = tag == "1"
            else:
                a, b, c = parts
                label = True
            if column_order == "hrt":
                h, r, t = a, b, c
            else:
                h, t, r = a, b, c
            yield line_no, h, r, t, label


def load_dataset(
    data_dir: str | Path,
    column_order: str = "hrt",
    labeled: bool | None = None,
) -> TripleStore:
    """Load a dataset directory into a :class:`TripleStore`.

    ``column_order`` is ``"hrt"`` or ``"htr"``; public distributions differ.
    ``labeled`` forces (or forbids) the 4-column labeled format for
    valid/test; ``None`` auto-detects per file. Entities and relations seen
    only in valid/test still receive ids.
    """
    data_dir = Path(data_dir)
    if column_order not in ("hrt", "htr"):
        raise DatasetError(f"column_order must be 'hrt' or 'htr', got {column_order!r}")
    if not data_dir.is_dir():
        raise DatasetError(f"not a directory: {data_dir}")
    train_path = _find_split_file(data_dir, "train")
    if train_path is None:
        raise DatasetError(f"no train.txt in {data_dir}")

    entities = Vocab()
    relations = Vocab()
    splits: dict[str, list[Triple]] = {"train": [], "valid": [], "test": []}
    labeled_splits: dict[str, list[LabeledTriple]] = {"valid": [], "test": []}

    for split in ("train", "valid", "test"):
        path = train_path if split == "train" else _find_split_file(data_dir, split)
        if path is None:
            continue
        # Train files never carry labels in the public distributions.
        want_labeled = False if split == "train" else labeled
        saw_label_col = False
        for _, h, r, t, label in _read_rows(path, column_order, want_labeled):
            triple = Triple(entities.add(h), relations.add(r), entities.add(t))
            if split != "train":
                labeled_splits[split].append(LabeledTriple(triple, label))
                if not label:
                    saw_label_col = True
            if label:
                splits[split].append(triple)
        if split != "train" and want_labeled is None and not saw_label_col:
            # All-positive 3-column file: plain split, drop the labeled view.
            labeled_splits[split] = []

    if not splits["train"]:
        raise DatasetError(f"empty train split in {data_dir}")
    if len(relations) > len(entities):
        print(
            f"warning: {len(relations)} relations > {len(entities)} entities; "
            "check --columns (hrt vs htr)",
            file=sys.stderr,
        )

    return TripleStore(
        entities,
        relations,
        splits["train"],
        splits["valid"],
        splits["test"],
        valid_labeled=labeled_splits["valid"] or None,
        test_labeled=labeled_splits["test"] or None,
    )


def compute_bern_stats(store: TripleStore) -> dict[int, tuple[float, float]]:
    """Per-relation (tph, hpt): mean tails per distinct head and mean heads
    per distinct tail over the train split. Relations absent from train get
    (1.0, 1.0)."""
    counts: dict[int, int] = defaultdict(int)
    heads: dict[int, set[int]] = defaultdict(set)
    tails: dict[int, set[int]] = defaultdict(set)
    for h, r, t in store.train:
        counts[r] += 1
        heads[r].add(h)
        tails[r].add(t)
    stats = {r: (1.0, 1.0) for r in range(store.n_relations)}
    for r, n in counts.items():
        stats[r] = (n / len(heads[r]), n / len(tails[r]))
    return stats


def relation_category(store: TripleStore, relation: int) -> str:
    """Bucket a relation as 1-1 / 1-N / N-1 / N-N from its bern stats
    (threshold 1.5 on tph and hpt)."""
    tph, hpt = store.bern_stats[relation]
    if tph < 1.5 and hpt < 1.5:
        return "1-1"
    if tph >= 1.5 and hpt < 1.5:
        return "1-N"
    if tph < 1.5 and hpt >= 1.5:
        return "N-1"
    return "N-N"


def corrupt(
    store: TripleStore,
    triple: Triple,
    strategy: str,
    rng: np.random.Generator,
    _max_attempts: int = 64,
) -> Triple:
    """Corrupt one entity slot of ``triple``, avoiding every known triple.

    Under ``unif`` the slot is chosen with probability 1/2; under ``bern``
    the head is replaced with probability tph/(tph+hpt). The replacement is
    uniform over all entities, resampled while the result is in ``known`` or
    equal to the input.
    """
    if strategy == "unif":
        p_head = 0.5
    elif strategy == "bern":
        tph, hpt = store.bern_stats[triple.relation]
        p_head = tph / (tph + hpt)
    else:
        raise ValueError(f"strategy must be 'unif' or 'bern', got {strategy!r}")

    replace_head = rng.random() < p_head
    result = _corrupt_slot(store, triple, replace_head, rng, _max_attempts)
    if result is None:
        # Degenerate store: the chosen slot has no admissible entity.
        result = _corrupt_slot(store, triple, not replace_head, rng, _max_attempts)
    if result is None:
        raise DatasetError(f"no admissible corruption for {triple}")
    return result


def _corrupt_slot(store, triple, replace_head, rng, max_attempts):
    h, r, t = triple
    original = h if replace_head else t
    for _ in range(max_attempts):
        e = int(rng.integers(store.n_entities))
        if e == original:
            continue
        candidate = Triple(e, r, t) if replace_head else Triple(h, r, e)
        if candidate not in store.known:
            return candidate
    # Rejection budget exhausted: enumerate the admissible entities.
    admissible = [
        e
        for e in range(store.n_entities)
        if e != original
        and (Triple(e, r, t) if replace_head else Triple(h, r, e)) not in store.known
    ]
    if not admissible:
        return None
    e = admissible[int(rng.integers(len(admissible)))]
    return Triple(e, r, t) if replace_head else Triple(h, r, e)
