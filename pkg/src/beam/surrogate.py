"""Pseudo-count nearest-neighbor estimate of feasibility probability.

The model scores a query configuration by the outcomes of its ``k`` nearest
recorded experiments (Euclidean distance over normalized axis coordinates):

    p(x) = (gamma + sum of positive outcomes among neighbors) / (1 + m)

where ``m = min(k, |dataset|)`` is the number of neighbors actually
available and ``gamma`` in (0, 1) acts as a pseudo-observation encoding the
prior belief that an arbitrary configuration is feasible.  The estimate is
always strictly inside (0, 1): no configuration is ever written off or taken
for granted.

Determinism contract: distance ties are broken by ascending configuration
index, so predictions depend only on the set of observations, never on
insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .space import Configuration, ParameterSpace

__all__ = [
    "ORIGIN_SEED",
    "ORIGIN_SUGGESTED",
    "ORIGIN_MANUAL",
    "Observation",
    "Dataset",
    "SurrogateModel",
    "predict",
    "predict_with_hypothetical",
    "affected_candidates",
    "sq_dists",
]

ORIGIN_SEED = "seed-import"
ORIGIN_SUGGESTED = "suggested"
ORIGIN_MANUAL = "manual"

_ORIGINS = (ORIGIN_SEED, ORIGIN_SUGGESTED, ORIGIN_MANUAL)


@dataclass(frozen=True)
class Observation:
    """One run experiment: a configuration, its binary outcome, and provenance."""

    config: Configuration
    outcome: int
    origin: str
    recorded_at: str | None = None

    def __post_init__(self) -> None:
        if self.outcome not in (0, 1):
            raise ValidationError(f"outcome must be 0 or 1, got {self.outcome!r}")
        if self.origin not in _ORIGINS:
            raise ValidationError(f"unknown origin {self.origin!r}")


class Dataset:
    """Append-only collection of observations over one space.

    Duplicate configuration indices are rejected: an experiment is run once,
    and corrections belong in a new record, not an in-place edit.
    """

    def __init__(self, space: ParameterSpace, observations: Iterable[Observation] = ()):
        self.space = space
        self._observations: list[Observation] = []
        self._by_index: dict[int, Observation] = {}
        for obs in observations:
            self.append(obs)

    def append(self, obs: Observation) -> None:
        if obs.config.index in self._by_index:
            raise ValidationError(
                f"configuration index {obs.config.index} already observed"
            )
        self._observations.append(obs)
        self._by_index[obs.config.index] = obs

    def __len__(self) -> int:
        return len(self._observations)

    def __iter__(self):
        return iter(self._observations)

    def __contains__(self, index: int) -> bool:
        return index in self._by_index

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(self._observations)

    def successes(self) -> list[Observation]:
        return [o for o in self._observations if o.outcome == 1]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Observation data as (coords, weights, indices), sorted by index.

        Sorting by configuration index gives every consumer the same
        canonical order, which is what makes stable-sort tie-breaking work.
        """
        obs = sorted(self._observations, key=lambda o: o.config.index)
        if not obs:
            d = self.space.dimension
            return (
                np.empty((0, d), dtype=np.float64),
                np.empty(0, dtype=np.float64),
                np.empty(0, dtype=np.int64),
            )
        coords = self.space.normalize_many(
            np.array([o.config.values for o in obs], dtype=np.float64)
        )
        weights = np.array([float(o.outcome) for o in obs], dtype=np.float64)
        indices = np.array([o.config.index for o in obs], dtype=np.int64)
        return coords, weights, indices


@dataclass(frozen=True)
class SurrogateModel:
    """Hyperparameters of the neighbor estimate."""

    k: int = 5
    gamma: float = 0.05

    def __post_init__(self) -> None:
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValidationError(f"k must be an integer >= 1, got {self.k!r}")
        if not (0.0 < self.gamma < 1.0):
            raise ValidationError(f"gamma must lie in (0, 1), got {self.gamma!r}")


def sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances: (n, d) x (m, d) -> (n, m).

    Accumulates axis by axis in a fixed order so that every caller sees
    bit-identical values for the same coordinate pair; neighbor-rank tie
    detection elsewhere relies on exact float equality between routes.
    """
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m))
    buf = np.empty((n, m))
    for j in range(a.shape[1]):
        np.subtract(a[:, j, None], b[None, :, j], out=buf)
        np.multiply(buf, buf, out=buf)
        out += buf
    return out


def _sorted_insert(
    coords: np.ndarray,
    weights: np.ndarray,
    indices: np.ndarray,
    extra_coord: np.ndarray,
    extra_weight: float,
    extra_index: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Insert one hypothetical observation, keeping index-sorted order."""
    at = int(np.searchsorted(indices, extra_index))
    return (
        np.insert(coords, at, extra_coord, axis=0),
        np.insert(weights, at, extra_weight),
        np.insert(indices, at, extra_index),
    )


def _estimate(
    model: SurrogateModel,
    coords: np.ndarray,
    weights: np.ndarray,
    query: np.ndarray,
) -> float:
    """Core estimate over index-sorted observation arrays."""
    n = coords.shape[0]
    m = min(model.k, n)
    if m == 0:
        return model.gamma
    d2 = sq_dists(coords, query[None, :])[:, 0]
    # stable sort on distance; rows are index-sorted, so ties fall to the
    # lower configuration index
    order = np.argsort(d2, kind="stable")[:m]
    c = float(np.sum(weights[order]))
    return (model.gamma + c) / (1.0 + m)


def predict(model: SurrogateModel, dataset: Dataset, x: Configuration) -> float:
    """Feasibility probability of ``x`` under the recorded data."""
    coords, weights, _ = dataset.arrays()
    query = dataset.space.normalize(x.values)
    return _estimate(model, coords, weights, query)


def predict_with_hypothetical(
    model: SurrogateModel,
    dataset: Dataset,
    x_obs: Configuration,
    y: float,
    x_query: Configuration,
) -> float:
    """Probability of ``x_query`` if ``(x_obs, y)`` were also observed.

    ``y`` may be fractional: a pseudo-outcome contributes ``y`` to the
    positive count and a full unit to the neighbor count.  The real dataset
    is never mutated.
    """
    if x_obs.index in dataset:
        raise ValidationError(
            f"hypothetical configuration {x_obs.index} is already observed"
        )
    if not 0.0 <= y <= 1.0:
        raise ValidationError(f"hypothetical outcome must lie in [0, 1], got {y!r}")
    coords, weights, indices = dataset.arrays()
    coords, weights, _ = _sorted_insert(
        coords,
        weights,
        indices,
        dataset.space.normalize(x_obs.values),
        float(y),
        x_obs.index,
    )
    query = dataset.space.normalize(x_query.values)
    return _estimate(model, coords, weights, query)


def affected_candidates(
    model: SurrogateModel,
    dataset: Dataset,
    pool: Sequence[Configuration],
    x_obs: Configuration,
) -> list[Configuration]:
    """Pool members whose neighbor set would change if ``x_obs`` were recorded.

    While fewer than ``k`` observations exist every candidate gains the new
    neighbor, so the whole pool is affected.  Afterwards a candidate is
    affected exactly when the newcomer ranks ahead of its current farthest
    neighbor under the (distance, index) order.
    """
    n = len(dataset)
    if n < model.k:
        return list(pool)
    coords, _, indices = dataset.arrays()
    pool_values = np.array([c.values for c in pool], dtype=np.float64)
    pool_coords = dataset.space.normalize_many(pool_values)
    obs_coord = dataset.space.normalize(x_obs.values)

    d2 = sq_dists(pool_coords, coords)
    order = np.argsort(d2, axis=1, kind="stable")[:, : model.k]
    last = order[:, -1]
    r_d2 = d2[np.arange(len(pool)), last]
    r_idx = indices[last]

    new_d2 = sq_dists(pool_coords, obs_coord[None, :])[:, 0]
    enters = (new_d2 < r_d2) | ((new_d2 == r_d2) & (x_obs.index < r_idx))
    return [c for c, hit in zip(pool, enters) if hit]
