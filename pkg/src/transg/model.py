"""Mixture translation model: parameters, scoring, and component spawning.

Each relation owns an adaptive mixture of translation vectors. A triple's
score is the weighted sum over components m of
``exp(-||u_h + u_{r,m} - u_t||^2 / variance_sum)``; new components are
spawned from a Chinese-restaurant-process rule so the mixture size grows
with the data.
"""
from __future__ import annotations

import math

import numpy as np

from .datasets import HEAD, TAIL, Triple, TripleStore

VARIANCE_SUM_DEFAULT = 2.0
M_MAX_DEFAULT = 20
WEIGHT_FLOOR_DEFAULT = 1e-6


class TransGModel:
    """All learnable parameters.

    ``entity`` is an |E| x k matrix; relation ``r`` owns ``rel_weights[r]``
    (shape (M_r,), summing to 1) and ``rel_vectors[r]`` (shape (M_r, k)).
    ``variance_sum`` holds the fixed constant sigma_h^2 + sigma_t^2.
    """

    def __init__(
        self,
        entity: np.ndarray,
        rel_weights: list[np.ndarray],
        rel_vectors: list[np.ndarray],
        variance_sum: float = VARIANCE_SUM_DEFAULT,
    ):
        if variance_sum <= 0:
            raise ValueError(f"variance_sum must be > 0, got {variance_sum}")
        self.entity = entity
        self.rel_weights = rel_weights
        self.rel_vectors = rel_vectors
        self.variance_sum = float(variance_sum)

    @property
    def n_entities(self) -> int:
        return self.entity.shape[0]

    @property
    def n_relations(self) -> int:
        return len(self.rel_weights)

    @property
    def dim(self) -> int:
        return self.entity.shape[1]

    def n_components(self, relation: int) -> int:
        return len(self.rel_weights[relation])

    def component_counts(self) -> list[int]:
        return [len(w) for w in self.rel_weights]

    def copy(self) -> "TransGModel":
        return TransGModel(
            self.entity.copy(),
            [w.copy() for w in self.rel_weights],
            [v.copy() for v in self.rel_vectors],
            self.variance_sum,
        )

    def allclose(self, other: "TransGModel", atol: float = 0.0) -> bool:
        return (
            self.entity.shape == other.entity.shape
            and self.component_counts() == other.component_counts()
            and self.variance_sum == other.variance_sum
            and np.allclose(self.entity, other.entity, rtol=0, atol=atol)
            and all(
                np.allclose(a, b, rtol=0, atol=atol)
                for a, b in zip(self.rel_weights, other.rel_weights)
            )
            and all(
                np.allclose(a, b, rtol=0, atol=atol)
                for a, b in zip(self.rel_vectors, other.rel_vectors)
            )
        )


def glorot(shape: tuple[int, ...], dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform Glorot draw with fan-in = fan-out = dim: bound sqrt(6/(2*dim))."""
    bound = math.sqrt(6.0) / math.sqrt(2.0 * dim)
    return rng.uniform(-bound, bound, size=shape)


def init_model(
    store: TripleStore,
    dim: int,
    variance_sum: float = VARIANCE_SUM_DEFAULT,
    rng: np.random.Generator | None = None,
) -> TransGModel:
    """Glorot-initialize entities and one component per relation (weight 1).

    Entities are drawn before relations from the single ``rng`` stream, so a
    fixed seed reproduces parameters byte-for-byte.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if rng is None:
        rng = np.random.default_rng()
    entity = glorot((store.n_entities, dim), dim, rng)
    rel = glorot((store.n_relations, dim), dim, rng)
    weights = [np.ones(1) for _ in range(store.n_relations)]
    vectors = [rel[r : r + 1].copy() for r in range(store.n_relations)]
    return TransGModel(entity, weights, vectors, variance_sum)


def _check_triple(model: TransGModel, triple: Triple) -> None:
    h, r, t = triple
    if not (0 <= h < model.n_entities and 0 <= t < model.n_entities):
        raise IndexError(f"entity id out of range in {triple}")
    if not (0 <= r < model.n_relations):
        raise IndexError(f"relation id out of range in {triple}")


def component_distances(model: TransGModel, triple: Triple) -> np.ndarray:
    """Squared distances ||u_h + u_{r,m} - u_t||^2 for every component m."""
    h, r, t = triple
    diff = model.entity[h] + model.rel_vectors[r] - model.entity[t]
    return np.einsum("mk,mk->m", diff, diff)


def component_log_terms(model: TransGModel, triple: Triple) -> np.ndarray:
    """Per-component ln pi_m - d_m^2 / variance_sum (the log mixture terms)."""
    r = triple.relation
    return np.log(model.rel_weights[r]) - component_distances(model, triple) / model.variance_sum


def log_score(model: TransGModel, triple: Triple) -> float:
    """ln of the mixture score, via max-shifted log-sum-exp (never -inf for
    finite parameters)."""
    _check_triple(model, triple)
    terms = component_log_terms(model, triple)
    m = terms.max()
    return float(m + np.log(np.exp(terms - m).sum()))


def score(model: TransGModel, triple: Triple) -> float:
    """Mixture score sum_m pi_m * exp(-d_m^2 / variance_sum), in (0, 1]."""
    return math.exp(log_score(model, triple))


def energy(model: TransGModel, triple: Triple) -> float:
    """-ln score; lower is more plausible. Used for classification thresholds."""
    return -log_score(model, triple)


def primary_component(model: TransGModel, triple: Triple) -> int:
    """Index of the largest weighted term; ties go to the lowest index."""
    _check_triple(model, triple)
    return int(np.argmax(component_log_terms(model, triple)))


def responsibilities(model: TransGModel, triple: Triple) -> np.ndarray:
    """Posterior probability of each component having generated the triple."""
    terms = component_log_terms(model, triple)
    terms = terms - terms.max()
    p = np.exp(terms)
    return p / p.sum()


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def spawn_probability(model: TransGModel, triple: Triple, beta: float) -> float:
    """Probability of spawning a new component for this triple.

    ``b / (b + score)`` with ``b = beta * exp(-||u_h - u_t||^2 /
    (variance_sum + 2))``, evaluated in log space.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return 0.0
    h, _, t = triple
    gap = model.entity[h] - model.entity[t]
    log_new = math.log(beta) - float(gap @ gap) / (model.variance_sum + 2.0)
    return _sigmoid(log_new - log_score(model, triple))


def renormalize_weights(weights: np.ndarray, floor: float = WEIGHT_FLOOR_DEFAULT) -> np.ndarray:
    """Scale to sum 1 with no weight below ``floor``.

    Flooring perturbs the sum, so clip-and-rescale is iterated; the residual
    shrinks by a factor ~M*floor per pass, and the final clip moves the sum
    by far less than the 1e-9 normalization tolerance.
    """
    w = weights / weights.sum()
    if floor > 0:
        for _ in range(3):
            if (w >= floor).all():
                return w
            w = np.maximum(w, floor)
            w = w / w.sum()
        w = np.maximum(w, floor)
    return w


def maybe_spawn(
    model: TransGModel,
    triple: Triple,
    beta: float,
    n_r: int,
    rng: np.random.Generator,
    m_max: int = M_MAX_DEFAULT,
    weight_floor: float = WEIGHT_FLOOR_DEFAULT,
) -> bool:
    """Spawn a new component for the triple's relation with the CRP probability.

    The new vector is a fresh Glorot draw (a random vector, deliberately not
    t - h) and its raw weight is beta / (n_r + beta), where ``n_r`` is the
    relation's train-triple count; all weights are then renormalized. At the
    ``m_max`` cap this is a no-op that consumes no randomness.
    """
    r = triple.relation
    if model.n_components(r) >= m_max:
        return False
    p = spawn_probability(model, triple, beta)
    if p == 0.0 or rng.random() >= p:
        return False
    raw = beta / (n_r + beta)
    model.rel_vectors[r] = np.vstack([model.rel_vectors[r], glorot((1, model.dim), model.dim, rng)])
    model.rel_weights[r] = renormalize_weights(
        np.append(model.rel_weights[r], raw), weight_floor
    )
    return True


def _log_sum_exp_rows(terms: np.ndarray) -> np.ndarray:
    """Log-sum-exp over axis 0 of a (M, n) matrix, max-shifted per column."""
    m = terms.max(axis=0)
    return m + np.log(np.exp(terms - m).sum(axis=0))


def log_score_candidates(
    model: TransGModel,
    relation: int,
    anchor: int,
    slot: str,
    ent_sq: np.ndarray | None = None,
) -> np.ndarray:
    """Log-score of every entity substituted into ``slot`` of a query.

    ``anchor`` is the entity kept fixed (the tail when ranking heads, the
    head when ranking tails). The true entity's own log-score comes from the
    same vectorized path, so self-comparison during ranking is exact.
    ``ent_sq`` optionally carries precomputed squared row norms of the
    entity matrix.
    """
    if slot not in (HEAD, TAIL):
        raise ValueError(f"slot must be {HEAD!r} or {TAIL!r}, got {slot!r}")
    E = model.entity
    W = model.rel_vectors[relation]
    if slot == HEAD:
        # d_m^2(e) = ||E_e - (u_anchor - u_{r,m})||^2
        targets = E[anchor] - W
    else:
        # d_m^2(e) = ||E_e - (u_anchor + u_{r,m})||^2
        targets = E[anchor] + W
    if ent_sq is None:
        ent_sq = np.einsum("ij,ij->i", E, E)
    cross = targets @ E.T
    tsq = np.einsum("mk,mk->m", targets, targets)
    d2 = ent_sq[None, :] - 2.0 * cross + tsq[:, None]
    terms = np.log(model.rel_weights[relation])[:, None] - d2 / model.variance_sum
    return _log_sum_exp_rows(terms)
