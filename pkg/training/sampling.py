# training/sampling.py

from dataclasses import dataclass
from typing import Any, List, Sequence, Tuple

import numpy as np


@dataclass
class WeightedSource:
    name: str
    items: Sequence[Any]
    weight: float


def validate_sources(sources: Sequence[WeightedSource]) -> np.ndarray:
    """Normalized mixture probabilities; rejects unusable configurations."""
    if not sources:
        raise ValueError("no training sources configured")
    weights = np.array([s.weight for s in sources], dtype=np.float64)
    if np.any(weights < 0):
        raise ValueError(f"mixture weights must be non-negative, got {weights.tolist()}")
    if weights.sum() <= 0:
        raise ValueError("mixture weights must sum to a positive value")
    for source, weight in zip(sources, weights):
        if weight > 0 and len(source.items) == 0:
            raise ValueError(f"source {source.name!r} is empty but has mixture weight {weight:g}")
    return weights / weights.sum()


def sample_indices(sources: Sequence[WeightedSource], size: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Per slot: a source drawn by weight, then a uniform item within it."""
    probs = validate_sources(sources)
    sizes = np.array([len(s.items) for s in sources])
    source_idx = rng.choice(len(sources), size=size, p=probs)
    item_idx = rng.integers(0, sizes[source_idx])
    return source_idx, item_idx


def sample_batch(sources: Sequence[WeightedSource], size: int, rng: np.random.Generator) -> List[Any]:
    source_idx, item_idx = sample_indices(sources, size, rng)
    return [sources[s].items[i] for s, i in zip(source_idx, item_idx)]
