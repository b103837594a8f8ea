"""SGD trainer: pair loss, margin-based update gate, and the epoch loop.

Each epoch shuffles the train triples; every visit optionally spawns a
mixture component, draws one corrupted negative, and applies a gated SGD
step with analytic gradients through the mixture responsibilities.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, fields
from typing import Callable, NamedTuple

import numpy as np

from .checkpoint import save_checkpoint
from .datasets import Triple, TripleStore, corrupt
from .model import (
    M_MAX_DEFAULT,
    VARIANCE_SUM_DEFAULT,
    WEIGHT_FLOOR_DEFAULT,
    TransGModel,
    init_model,
    maybe_spawn,
    renormalize_weights,
)


class DivergenceError(RuntimeError):
    """Raised when the loss goes non-finite; names the offending visit."""

    def __init__(self, epoch: int, triple: Triple, loss: float):
        super().__init__(
            f"non-finite loss {loss} at epoch {epoch} on triple {tuple(triple)}"
        )
        self.epoch = epoch
        self.triple = triple


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    dim: int = 100
    margin: float = 2.5
    crp_beta: float = 0.05
    reg_c: float = 1e-4
    epochs: int = 2000
    sampling: str = "bern"
    variance_sum: float = VARIANCE_SUM_DEFAULT
    m_max: int = M_MAX_DEFAULT
    weight_floor: float = WEIGHT_FLOOR_DEFAULT
    seed: int = 0
    batch_size: int = 10000
    spawn_every: int = 1

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.crp_beta < 0:
            raise ValueError(f"crp_beta must be >= 0, got {self.crp_beta}")
        if self.reg_c < 0:
            raise ValueError(f"reg_c must be >= 0, got {self.reg_c}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.sampling not in ("unif", "bern"):
            raise ValueError(f"sampling must be 'unif' or 'bern', got {self.sampling!r}")
        if self.variance_sum <= 0:
            raise ValueError(f"variance_sum must be > 0, got {self.variance_sum}")
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        if not 0 <= self.weight_floor < 1:
            raise ValueError(f"weight_floor must be in [0, 1), got {self.weight_floor}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.spawn_every < 1:
            raise ValueError(f"spawn_every must be >= 1, got {self.spawn_every}")

    def to_dict(self) -> dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class EpochStats(NamedTuple):
    epoch: int
    mean_loss: float
    updates: int
    skipped: int
    spawns: int
    seconds: float

    def line(self) -> str:
        return (
            f"epoch={self.epoch} loss={self.mean_loss:.6f} updates={self.updates} "
            f"skips={self.skipped} spawns={self.spawns} seconds={self.seconds:.2f}"
        )


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    census: list[int] = field(default_factory=list)

    def same_numbers(self, other: "TrainReport") -> bool:
        """Equality on everything except wall-clock seconds."""
        return self.census == other.census and [
            e[:-1] for e in self.epochs
        ] == [e[:-1] for e in other.epochs]


def _pair_terms(model: TransGModel, triple: Triple):
    """(log_score, responsibilities, per-component u_h + u_{r,m} - u_t)."""
    r = triple.relation
    delta = model.entity[triple.head] + model.rel_vectors[r] - model.entity[triple.tail]
    d2 = np.einsum("mk,mk->m", delta, delta)
    terms = np.log(model.rel_weights[r]) - d2 / model.variance_sum
    top = terms.max()
    ls = top + math.log(np.exp(terms - top).sum())
    rho = np.exp(terms - ls)
    return ls, rho, delta


def _reg_term(model: TransGModel, pos: Triple, neg: Triple) -> float:
    """Squared norms of all touched parameters: every component vector of the
    involved relation(s) plus the four entity vectors (repeats counted)."""
    total = 0.0
    for r in {pos.relation, neg.relation}:
        v = model.rel_vectors[r]
        total += float(np.einsum("mk,mk->", v, v))
    for e in (pos.head, pos.tail, neg.head, neg.tail):
        u = model.entity[e]
        total += float(u @ u)
    return total


def pair_loss(model: TransGModel, pos: Triple, neg: Triple, config: TrainConfig) -> float:
    """-ln score(pos) + ln score(neg) + C * (touched squared norms)."""
    ls_pos, _, _ = _pair_terms(model, pos)
    ls_neg, _, _ = _pair_terms(model, neg)
    return ls_neg - ls_pos + config.reg_c * _reg_term(model, pos, neg)


def update_gate(model: TransGModel, pos: Triple, neg: Triple, config: TrainConfig) -> bool:
    """Update iff ln score(pos) - ln score(neg) <= ln M_r + margin, with M_r
    the component count of the positive triple's relation."""
    ls_pos, _, _ = _pair_terms(model, pos)
    ls_neg, _, _ = _pair_terms(model, neg)
    return ls_pos - ls_neg <= math.log(model.n_components(pos.relation)) + config.margin


def _gradients(model, pos, neg, rho_pos, delta_pos, rho_neg, delta_neg, config):
    c2 = 2.0 * config.reg_c
    scale = 2.0 / model.variance_sum

    # d(-ln score(pos))/d u_{r,m} = rho_m * 2 delta_m / vs; head gets the sum,
    # tail its negation. The negative triple enters with opposite sign.
    coef_pos = scale * rho_pos[:, None] * delta_pos
    coef_neg = scale * rho_neg[:, None] * delta_neg
    g_h_pos = coef_pos.sum(axis=0)
    g_h_neg = coef_neg.sum(axis=0)

    ent_grads: dict[int, np.ndarray] = {}

    def add_ent(e: int, g: np.ndarray) -> None:
        if e in ent_grads:
            ent_grads[e] = ent_grads[e] + g
        else:
            ent_grads[e] = g

    add_ent(pos.head, g_h_pos)
    add_ent(pos.tail, -g_h_pos)
    add_ent(neg.head, -g_h_neg)
    add_ent(neg.tail, g_h_neg)
    for e in (pos.head, pos.tail, neg.head, neg.tail):
        add_ent(e, c2 * model.entity[e])

    rel_grads: dict[int, np.ndarray] = {pos.relation: coef_pos}
    if neg.relation in rel_grads:
        rel_grads[neg.relation] = rel_grads[neg.relation] - coef_neg
    else:
        rel_grads[neg.relation] = -coef_neg
    for r in rel_grads:
        rel_grads[r] = rel_grads[r] + c2 * model.rel_vectors[r]
    # Mixing weights step on logits z = ln pi: d/dz_i is (pi_i - rho_i) for
    # the positive term and (rho'_i - pi_i) for the negative term.
    logit_grads: dict[int, np.ndarray] = {
        pos.relation: model.rel_weights[pos.relation] - rho_pos
    }
    if neg.relation in logit_grads:
        logit_grads[neg.relation] = logit_grads[neg.relation] + (
            rho_neg - model.rel_weights[neg.relation]
        )
    else:
        logit_grads[neg.relation] = rho_neg - model.rel_weights[neg.relation]

    return ent_grads, rel_grads, logit_grads


def pair_gradients(model: TransGModel, pos: Triple, neg: Triple, config: TrainConfig):
    """Analytic gradients of pair_loss wrt every touched parameter.

    Returns (entity_grads, rel_vector_grads, logit_grads) keyed by entity or
    relation id. Mixing-weight gradients are taken wrt the logits z = ln pi
    of the softmax parameterization.
    """
    _, rho_pos, delta_pos = _pair_terms(model, pos)
    _, rho_neg, delta_neg = _pair_terms(model, neg)
    return _gradients(model, pos, neg, rho_pos, delta_pos, rho_neg, delta_neg, config)


def _apply(model, grads, config):
    alpha = config.learning_rate
    ent_grads, rel_grads, logit_grads = grads
    for e, g in ent_grads.items():
        model.entity[e] -= alpha * g
    for r, g in rel_grads.items():
        model.rel_vectors[r] = model.rel_vectors[r] - alpha * g
        z = np.log(model.rel_weights[r]) - alpha * logit_grads[r]
        z -= z.max()
        model.rel_weights[r] = renormalize_weights(np.exp(z), config.weight_floor)


def _visit(model, pos, neg, config):
    """Gate, step if allowed, and return (updated, pair loss at entry)."""
    ls_pos, rho_pos, delta_pos = _pair_terms(model, pos)
    ls_neg, rho_neg, delta_neg = _pair_terms(model, neg)
    loss = ls_neg - ls_pos + config.reg_c * _reg_term(model, pos, neg)
    gate = ls_pos - ls_neg <= math.log(model.n_components(pos.relation)) + config.margin
    if gate:
        _apply(
            model,
            _gradients(model, pos, neg, rho_pos, delta_pos, rho_neg, delta_neg, config),
            config,
        )
    return gate, loss


def sgd_step(model: TransGModel, pos: Triple, neg: Triple, config: TrainConfig) -> bool:
    """One gated SGD step; returns whether parameters changed."""
    updated, _ = _visit(model, pos, neg, config)
    return updated


def train(
    store: TripleStore,
    config: TrainConfig,
    on_epoch: Callable[[EpochStats, TransGModel], None] | None = None,
    on_batch: Callable[[int, int, TransGModel], None] | None = None,
    checkpoint_path=None,
    checkpoint_every: int = 0,
    manifest_extra: dict[str, object] | None = None,
    model: TransGModel | None = None,
) -> tuple[TransGModel, TrainReport]:
    """Run the full training loop; deterministic under a fixed seed.

    Pass ``model`` to continue training an existing one (it must match the
    store); otherwise a fresh model is initialized from ``config.seed``'s
    stream, which also drives shuffling, corruption, and spawning.
    ``on_batch(epoch, visits, model)`` fires every ``config.batch_size``
    visits within an epoch; ``on_epoch(stats, model)`` after each epoch.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    if model is None:
        model = init_model(store, config.dim, config.variance_sum, rng)
    elif model.n_entities != store.n_entities or model.n_relations != store.n_relations:
        raise ValueError("model/store size mismatch")

    n_by_rel = [len(store.by_relation[r]) for r in range(store.n_relations)]
    train_triples = store.train
    n = len(train_triples)
    report = TrainReport()

    manifest = dict(config.to_dict())
    manifest.update(
        n_entities=store.n_entities,
        n_relations=store.n_relations,
        variance_sum=config.variance_sum,
    )
    if manifest_extra:
        manifest.update(manifest_extra)

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        loss_sum = 0.0
        updates = skipped = spawns = visited = 0
        spawn_now = (epoch - 1) % config.spawn_every == 0
        for i in rng.permutation(n):
            pos = train_triples[i]
            if spawn_now and maybe_spawn(
                model,
                pos,
                config.crp_beta,
                n_by_rel[pos.relation],
                rng,
                config.m_max,
                config.weight_floor,
            ):
                spawns += 1
            neg = corrupt(store, pos, config.sampling, rng)
            updated, loss = _visit(model, pos, neg, config)
            if not math.isfinite(loss):
                raise DivergenceError(epoch, pos, loss)
            loss_sum += loss
            if updated:
                updates += 1
            else:
                skipped += 1
            visited += 1
            if on_batch is not None and visited % config.batch_size == 0:
                on_batch(epoch, visited, model)
        stats = EpochStats(
            epoch, loss_sum / n, updates, skipped, spawns, time.perf_counter() - t0
        )
        report.epochs.append(stats)
        if on_epoch is not None:
            on_epoch(stats, model)
        if checkpoint_path is not None and checkpoint_every and epoch % checkpoint_every == 0:
            save_checkpoint(model, checkpoint_path, manifest)

    report.census = model.component_counts()
    if checkpoint_path is not None:
        save_checkpoint(model, checkpoint_path, manifest)
    return model, report
