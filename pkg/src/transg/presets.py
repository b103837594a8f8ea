"""Shipped hyperparameter presets for the four standard benchmarks."""
from __future__ import annotations

from .training import TrainConfig

PRESETS: dict[str, dict[str, object]] = {
    "wn18": dict(learning_rate=0.001, dim=100, margin=2.5, crp_beta=0.05),
    "fb15k": dict(learning_rate=0.0015, dim=400, margin=3.0, crp_beta=0.1),
    "wn11": dict(learning_rate=0.001, dim=50, margin=6.0, crp_beta=0.1),
    "fb13": dict(learning_rate=0.002, dim=400, margin=3.0, crp_beta=0.1),
}
# All presets share sampling=bern and epochs=2000 (the TrainConfig defaults).


def preset_config(name: str, **overrides) -> TrainConfig:
    if name not in PRESETS:
        raise KeyError(
            f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}"
        )
    params = dict(PRESETS[name])
    params.update(overrides)
    return TrainConfig(**params)
