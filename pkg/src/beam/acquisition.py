"""Budget-aware scoring and batch selection over a candidate pool.

Each candidate x is scored

    alpha(x) = p(x) + beta(x)

where ``p`` is the surrogate estimate and ``beta`` is the expected sum of the
``remaining_budget`` largest posterior probabilities over the rest of the
pool after hypothetically observing x.  The expectation runs over the two
possible outcomes of x weighted by ``p(x)``, so ``beta`` prices in both what
a success would unlock and what a failure would write off.  With no budget
left beta vanishes and the rule collapses to plain greedy exploitation.

The exact computation exploits two facts about the neighbor model:

* observing x changes the posterior only for candidates whose neighbor set
  gains x (everyone while fewer than k observations exist; otherwise exactly
  those whose current farthest neighbor ranks behind x), and
* posterior values take few distinct levels, so the top-j sum over thousands
  of candidates reduces to a walk over a small value histogram.

``exploration_term_brute`` re-derives beta per candidate from scratch with
full dataset copies; it is the slow reference the fast path is tested
against and must stay an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConstraintError, StateError, ValidationError
from .space import Configuration, ConstraintSet, ParameterSpace
from .surrogate import (
    Dataset,
    SurrogateModel,
    predict,
    predict_with_hypothetical,
    sq_dists,
)

__all__ = [
    "POLICY_BEAM",
    "POLICY_GREEDY",
    "POLICY_RANDOM",
    "AcquisitionScores",
    "Pick",
    "score_pool",
    "greedy_scores",
    "exploration_term",
    "exploration_term_brute",
    "select_batch",
    "build_pool",
]

POLICY_BEAM = "beam"
POLICY_GREEDY = "greedy"
POLICY_RANDOM = "random"

POLICIES = (POLICY_BEAM, POLICY_GREEDY, POLICY_RANDOM)

# Fraction of the pool cap filled by uniform sampling when the grid is too
# large to enumerate; the remainder is reserved for success-adjacent
# neighbors, which are always kept.
_SAMPLE_SHARE = 0.8


@dataclass(frozen=True)
class AcquisitionScores:
    """Scores for every candidate of one pool, in pool order."""

    pool: tuple[Configuration, ...]
    p: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    remaining_budget: int


@dataclass(frozen=True)
class Pick:
    """One selected candidate with its score snapshot at selection time."""

    config: Configuration
    p: float
    beta: float
    alpha: float


# ----------------------------------------------------------------------
# deterministic tie-breaking
# ----------------------------------------------------------------------


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; a fixed pseudo-random priority per index."""
    x = x.astype(np.uint64)
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def tie_keys(indices: np.ndarray, tie_seed: int) -> np.ndarray:
    """Deterministic pseudo-random priority for equal-score candidates.

    A fixed priority order (rather than "lowest index wins") keeps repeated
    campaigns reproducible while avoiding the lexicographic crawl a plain
    index rule degenerates into when scores tie across most of the pool,
    which is the normal situation before the first success is found.
    """
    idx = np.asarray(indices, dtype=np.uint64)
    seed_mix = _mix64(np.array([np.uint64(tie_seed & 0xFFFFFFFFFFFFFFFF)]))[0]
    return _mix64(idx ^ seed_mix)


def _select_position(alpha: np.ndarray, indices: np.ndarray, tie_seed: int) -> int:
    best = alpha.max()
    contenders = np.flatnonzero(alpha == best)
    keys = tie_keys(indices[contenders], tie_seed)
    # final fallback on the raw index for the (astronomically unlikely) case
    # of a key collision
    order = np.lexsort((indices[contenders], keys))
    return int(contenders[order[0]])


# ----------------------------------------------------------------------
# internal geometry
# ----------------------------------------------------------------------


def _merged_observations(
    dataset: Dataset,
    fantasies: Sequence[tuple[Configuration, float]],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Observation arrays plus pseudo-observations, index-sorted."""
    coords, weights, indices = dataset.arrays()
    if fantasies:
        seen = set(int(i) for i in indices)
        for config, w in fantasies:
            if config.index in seen:
                raise ValidationError(
                    f"pseudo-observation duplicates index {config.index}"
                )
            if not 0.0 <= w <= 1.0:
                raise ValidationError(f"pseudo-outcome {w!r} outside [0, 1]")
            seen.add(config.index)
            at = int(np.searchsorted(indices, config.index))
            coords = np.insert(
                coords, at, dataset.space.normalize(config.values), axis=0
            )
            weights = np.insert(weights, at, float(w))
            indices = np.insert(indices, at, config.index)
    return coords, weights, indices


def _pool_stats(
    model: SurrogateModel,
    obs_coords: np.ndarray,
    obs_weights: np.ndarray,
    obs_indices: np.ndarray,
    pool_coords: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-candidate neighbor statistics.

    Returns ``(p, c, r_d2, r_idx, w_last)`` where ``c`` is the weighted
    positive count among the m nearest observations, ``(r_d2, r_idx)`` the
    (squared distance, index) key of the farthest current neighbor, and
    ``w_last`` its weight.  The last three are meaningful only when the full
    k neighbors exist.
    """
    n = obs_coords.shape[0]
    m = min(model.k, n)
    npool = pool_coords.shape[0]
    if m == 0:
        zero = np.zeros(npool)
        p = np.full(npool, model.gamma)
        return p, zero, zero, zero.astype(np.int64), zero
    d2 = sq_dists(pool_coords, obs_coords)
    order = np.argsort(d2, axis=1, kind="stable")[:, :m]
    c = np.take_along_axis(
        np.broadcast_to(obs_weights, d2.shape), order, axis=1
    ).sum(axis=1)
    p = (model.gamma + c) / (1.0 + m)
    if n >= model.k:
        last = order[:, m - 1]
        rows = np.arange(npool)
        r_d2 = d2[rows, last]
        r_idx = obs_indices[last]
        w_last = obs_weights[last]
    else:
        r_d2 = np.full(npool, np.inf)
        r_idx = np.full(npool, np.iinfo(np.int64).max, dtype=np.int64)
        w_last = np.zeros(npool)
    return p, c, r_d2, r_idx, w_last


def _top_sum(
    descriptors: list[tuple[float, np.ndarray]],
    budget: int,
    width: int,
) -> np.ndarray:
    """Sum of the ``budget`` largest values described by (value, counts) levels.

    ``counts`` vectors are per-candidate availabilities; levels are consumed
    in descending value order.  All inputs are exact small integers, so the
    walk is exact as well.
    """
    remaining = np.full(width, float(budget))
    total = np.zeros(width)
    for value, counts in sorted(descriptors, key=lambda d: -d[0]):
        take = np.minimum(remaining, counts)
        total += take * value
        remaining -= take
    return total


# ----------------------------------------------------------------------
# scoring
# ----------------------------------------------------------------------


def score_pool(
    model: SurrogateModel,
    dataset: Dataset,
    pool: Sequence[Configuration],
    remaining_budget: int,
    fantasies: Sequence[tuple[Configuration, float]] = (),
) -> AcquisitionScores:
    """Exact ``alpha = p + beta`` for every pool candidate.

    ``fantasies`` are pseudo-observations (configuration, fractional outcome)
    layered on top of the dataset; batch selection uses them to make later
    picks aware of earlier ones before any real outcome exists.
    """
    if remaining_budget < 0:
        raise ValidationError("remaining_budget must be >= 0")
    space = dataset.space
    pool = tuple(pool)
    taken = {int(i) for i in dataset.arrays()[2]} | {
        cfg.index for cfg, _ in fantasies
    }
    for cfg in pool:
        if cfg.index in taken:
            raise ValidationError(
                f"pool candidate {cfg.index} is already observed"
            )

    obs_coords, obs_weights, obs_indices = _merged_observations(dataset, fantasies)
    pool_values = np.array([c.values for c in pool], dtype=np.float64).reshape(
        len(pool), space.dimension
    )
    pool_coords = space.normalize_many(pool_values)
    pool_indices = np.array([c.index for c in pool], dtype=np.int64)

    p, c, r_d2, r_idx, w_last = _pool_stats(
        model, obs_coords, obs_weights, obs_indices, pool_coords
    )

    npool = len(pool)
    budget = min(remaining_budget, npool - 1) if npool else 0
    if budget <= 0:
        beta = np.zeros(npool)
        return AcquisitionScores(pool, p, beta, p + beta, remaining_budget)

    n = obs_coords.shape[0]
    m = min(model.k, n)
    levels, level_of = np.unique(c, return_inverse=True)
    level_counts = np.bincount(level_of, minlength=len(levels)).astype(np.float64)
    # availability of each base level with the candidate itself removed
    self_mask = [
        (level_of == li).astype(np.float64) for li in range(len(levels))
    ]

    sums = {}
    if n < model.k:
        # every candidate gains the newcomer; values shift level-wise
        for y in (0.0, 1.0):
            descriptors = [
                (
                    (model.gamma + levels[li] + y) / (2.0 + m),
                    level_counts[li] - self_mask[li],
                )
                for li in range(len(levels))
            ]
            sums[y] = _top_sum(descriptors, budget, npool)
    else:
        groups, grp = np.unique(
            np.stack([c, w_last], axis=1), axis=0, return_inverse=True
        )
        ngroups = groups.shape[0]
        affected = _affected_group_counts(
            pool_coords, pool_indices, r_d2, r_idx, grp, ngroups
        )
        # drop the candidate itself from its own group's affected count
        own = np.zeros_like(affected)
        own[np.arange(npool), grp] = 1.0
        affected_others = affected - own

        outflow = [np.zeros(npool) for _ in range(len(levels))]
        by_level: dict[int, list[int]] = {}
        for gi in range(ngroups):
            li = int(np.searchsorted(levels, groups[gi, 0]))
            by_level.setdefault(li, []).append(gi)
        for li, gis in by_level.items():
            outflow[li] = affected_others[:, gis].sum(axis=1)

        for y in (0.0, 1.0):
            descriptors = [
                (
                    (model.gamma + levels[li]) / (1.0 + m),
                    level_counts[li] - self_mask[li] - outflow[li],
                )
                for li in range(len(levels))
            ]
            for gi in range(ngroups):
                c_new = groups[gi, 0] - groups[gi, 1] + y
                descriptors.append(
                    (
                        (model.gamma + c_new) / (1.0 + m),
                        affected_others[:, gi],
                    )
                )
            sums[y] = _top_sum(descriptors, budget, npool)

    beta = p * sums[1.0] + (1.0 - p) * sums[0.0]
    return AcquisitionScores(pool, p, beta, p + beta, remaining_budget)


def _affected_group_counts(
    pool_coords: np.ndarray,
    pool_indices: np.ndarray,
    r_d2: np.ndarray,
    r_idx: np.ndarray,
    grp: np.ndarray,
    ngroups: int,
) -> np.ndarray:
    """Count, per candidate x and group g, the pool members j whose neighbor
    set would admit x: key(d2(j,x), idx(x)) ahead of j's farthest neighbor.

    Chunked over x to bound memory; counts are exact (small integers held in
    float32 stay exact far beyond any realistic pool size).
    """
    npool = pool_coords.shape[0]
    onehot = np.zeros((npool, ngroups), dtype=np.float32)
    onehot[np.arange(npool), grp] = 1.0
    out = np.empty((npool, ngroups), dtype=np.float64)
    chunk = max(1, int(6_000_000 // max(npool, 1)))
    for start in range(0, npool, chunk):
        stop = min(start + chunk, npool)
        block = pool_coords[start:stop]
        d2 = sq_dists(block, pool_coords)
        enters = (d2 < r_d2[None, :]) | (
            (d2 == r_d2[None, :])
            & (pool_indices[start:stop, None] < r_idx[None, :])
        )
        out[start:stop] = enters.astype(np.float32) @ onehot
    return out


def greedy_scores(
    model: SurrogateModel, dataset: Dataset, pool: Sequence[Configuration]
) -> AcquisitionScores:
    """Scores with the exploration term forced to zero (pure exploitation)."""
    return score_pool(model, dataset, pool, remaining_budget=0)


def exploration_term(
    model: SurrogateModel,
    dataset: Dataset,
    pool: Sequence[Configuration],
    x: Configuration,
    remaining_budget: int,
) -> float:
    """Exact beta for one candidate, evaluated through the pooled scorer."""
    pool = tuple(pool)
    try:
        at = next(i for i, cfg in enumerate(pool) if cfg.index == x.index)
    except StopIteration:
        raise ValidationError(f"candidate {x.index} is not in the pool") from None
    scores = score_pool(model, dataset, pool, remaining_budget)
    return float(scores.beta[at])


def exploration_term_brute(
    model: SurrogateModel,
    dataset: Dataset,
    pool: Sequence[Configuration],
    x: Configuration,
    remaining_budget: int,
) -> float:
    """Reference beta: full dataset copy, full re-prediction, full sort.

    Deliberately naive; exists so the fast path has an independent oracle.
    """
    others = [cfg for cfg in pool if cfg.index != x.index]
    budget = min(remaining_budget, len(others))
    if budget <= 0:
        return 0.0
    p_x = predict(model, dataset, x)
    expected = 0.0
    for y, weight in ((1.0, p_x), (0.0, 1.0 - p_x)):
        posteriors = np.array(
            [
                predict_with_hypothetical(model, dataset, x, y, q)
                for q in others
            ]
        )
        top = np.sort(posteriors)[::-1][:budget]
        expected += weight * float(top.sum())
    return expected


# ----------------------------------------------------------------------
# batch selection
# ----------------------------------------------------------------------


def select_batch(
    model: SurrogateModel,
    dataset: Dataset,
    pool: Sequence[Configuration],
    batch_size: int,
    remaining_budget: int,
    policy: str = POLICY_BEAM,
    tie_seed: int = 0,
) -> list[Pick]:
    """Sequential-greedy batch construction.

    Each pick maximizes alpha under the active policy; its outcome is then
    fantasized as the current posterior (a fractional pseudo-outcome) so the
    next pick sees the intended experiment instead of double-booking the
    same region.  The lookahead horizon shrinks by one per slot because each
    slot consumes one experiment of budget.
    """
    if policy not in POLICIES:
        raise ValidationError(f"unknown policy {policy!r}")
    if batch_size < 1:
        raise ValidationError("batch_size must be >= 1")
    pool = list(pool)
    if not pool:
        raise StateError("candidate pool is empty")
    if len(pool) < batch_size:
        raise StateError(
            f"batch of {batch_size} requested but only {len(pool)} "
            "candidates remain"
        )

    picks: list[Pick] = []
    fantasies: list[tuple[Configuration, float]] = []
    for slot in range(batch_size):
        horizon = max(remaining_budget - slot, 0)
        if policy == POLICY_BEAM:
            scores = score_pool(model, dataset, pool, horizon, fantasies)
            alpha = scores.alpha
        else:
            scores = score_pool(model, dataset, pool, 0, fantasies)
            alpha = scores.alpha if policy == POLICY_GREEDY else np.zeros(len(pool))
        indices = np.array([cfg.index for cfg in pool], dtype=np.int64)
        pos = _select_position(alpha, indices, tie_seed)
        config = pool[pos]
        picks.append(
            Pick(
                config=config,
                p=float(scores.p[pos]),
                beta=float(scores.beta[pos]),
                alpha=float(scores.alpha[pos]),
            )
        )
        fantasies.append((config, float(scores.p[pos])))
        pool.pop(pos)
    return picks


# ----------------------------------------------------------------------
# pool construction
# ----------------------------------------------------------------------


def build_pool(
    space: ParameterSpace,
    constraints: ConstraintSet,
    dataset: Dataset,
    cap: int = 100_000,
    seed: int = 0,
) -> list[Configuration]:
    """Candidate pool: exhaustive when the grid fits under ``cap``.

    Larger grids get a seeded uniform sample of ``0.8 * cap`` indices unioned
    with every one-step grid neighbor of each observed success; neighbors are
    kept unconditionally so local refinement around discoveries survives the
    sampling.  Pool order is ascending index and never affects scores.
    """
    if cap < 1:
        raise ValidationError("pool cap must be >= 1")
    constraints.validate(space)
    observed = {o.config.index for o in dataset}

    if space.cardinality <= cap:
        indices = np.arange(space.cardinality, dtype=np.int64)
        feasible = indices[constraints.mask(space, space.decode_many(indices))]
        if feasible.size == 0:
            raise ConstraintError("constraints exclude every grid point")
        kept = [int(i) for i in feasible if int(i) not in observed]
        if not kept:
            raise StateError("every feasible configuration is already observed")
        return space.decode_batch(kept)

    rng = np.random.default_rng(seed)
    target = int(cap * _SAMPLE_SHARE)
    sampled: list[int] = []
    seen: set[int] = set(observed)
    for _ in range(20):
        if len(sampled) >= target:
            break
        draw = rng.integers(0, space.cardinality, size=2 * target, dtype=np.int64)
        draw = draw[constraints.mask(space, space.decode_many(draw))]
        for i in draw.tolist():
            if i not in seen:
                seen.add(i)
                sampled.append(i)
                if len(sampled) >= target:
                    break
    if not sampled:
        raise ConstraintError(
            "sampling found no constraint-satisfying configuration"
        )

    neighbors: list[int] = []
    nseen: set[int] = set(observed)
    for obs in dataset.successes():
        for i in space.neighbor_indices(obs.config.index):
            if i in nseen:
                continue
            nseen.add(i)
            if constraints.satisfies(space, space.decode(i).values):
                neighbors.append(i)

    merged = neighbors + [i for i in sampled if i not in set(neighbors)]
    merged = merged[:cap]
    return space.decode_batch(sorted(merged))
