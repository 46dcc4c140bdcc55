"""Campaign state machine: budgets, pending batches, and provenance.

A campaign wraps one search space, one constraint set, and one growing
dataset.  The budget counts *experiments*: seed imports are free history,
while recording the outcome of a suggested or manually chosen configuration
consumes one unit.  Suggestions are transactional: a pending batch stays
pending (and is returned verbatim by repeated ``suggest`` calls) until its
outcomes are recorded, so a crashed or restarted client can never burn
budget by asking twice.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Sequence

import numpy as np

from . import acquisition
from .errors import BudgetExhausted, SpaceError, StateError, ValidationError
from .space import Configuration, ConstraintSet, ParameterSpace
from .surrogate import (
    ORIGIN_MANUAL,
    ORIGIN_SEED,
    ORIGIN_SUGGESTED,
    Dataset,
    Observation,
    SurrogateModel,
)

__all__ = [
    "CampaignSettings",
    "PendingSuggestion",
    "CampaignMetrics",
    "Campaign",
    "init_lhs",
    "resolve_config",
]

# retry budget when a stratified sample violates constraints or collides
# with an already drawn grid point
_LHS_RETRIES = 30


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True)
class CampaignSettings:
    """Immutable knobs fixed at campaign creation (budget can only grow)."""

    budget: int
    batch_size: int
    policy: str = acquisition.POLICY_BEAM
    k: int = 5
    gamma: float = 0.05
    pool_cap: int = 100_000
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (isinstance(self.budget, int) and self.budget >= 1):
            raise ValidationError(f"budget must be a positive integer, got {self.budget!r}")
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size!r}")
        if self.policy not in acquisition.POLICIES:
            raise ValidationError(f"unknown policy {self.policy!r}")
        if self.pool_cap < 1:
            raise ValidationError("pool_cap must be >= 1")
        if not (isinstance(self.rng_seed, int) and self.rng_seed >= 0):
            raise ValidationError("rng_seed must be a non-negative integer")
        # surrogate hyperparameters validated by the model itself
        SurrogateModel(k=self.k, gamma=self.gamma)


@dataclass(frozen=True)
class PendingSuggestion:
    """A suggested configuration awaiting its recorded outcome."""

    config: Configuration
    p: float
    beta: float
    alpha: float
    suggested_at: str


@dataclass(frozen=True)
class CampaignMetrics:
    """Campaign progress in the shape of a results table row.

    ``discovery_rate`` is the number of feasible configurations found by
    budget-consuming experiments (the headline count of a campaign);
    ``total_successes`` additionally counts successes that arrived as seed
    data.
    """

    budget: int
    experiments_used: int
    budget_remaining: int
    seed_observations: int
    discovery_rate: int
    total_successes: int
    space_cardinality: int
    fraction_explored: float


class Campaign:
    """Mutable campaign state; persistence lives in :mod:`beam.storage`."""

    def __init__(
        self,
        space: ParameterSpace,
        constraints: ConstraintSet,
        settings: CampaignSettings,
        *,
        observations: Sequence[Observation] = (),
        pending: Sequence[PendingSuggestion] = (),
        events: Sequence[dict] = (),
        state_version: int = 0,
        created_at: str | None = None,
        clock: Callable[[], str] | None = None,
    ):
        constraints.validate(space)
        self.space = space
        self.constraints = constraints
        self.settings = settings
        self.dataset = Dataset(space, observations)
        self.pending: list[PendingSuggestion] = list(pending)
        self.events: list[dict] = [dict(e) for e in events]
        self.state_version = int(state_version)
        self.created_at = created_at or (clock or _utcnow)()
        self.clock = clock or _utcnow
        self._check_integrity()

    # ------------------------------------------------------------------
    # invariants & derived state
    # ------------------------------------------------------------------

    def _check_integrity(self) -> None:
        if len(self.pending) > self.settings.batch_size:
            raise ValidationError("pending batch larger than batch_size")
        observed = {o.config.index for o in self.dataset}
        pending_idx = [s.config.index for s in self.pending]
        if len(set(pending_idx)) != len(pending_idx):
            raise ValidationError("pending batch contains duplicates")
        if observed & set(pending_idx):
            raise ValidationError("pending suggestion already observed")
        if self.experiments_used > self.settings.budget:
            raise ValidationError("recorded experiments exceed the budget")

    @property
    def model(self) -> SurrogateModel:
        return SurrogateModel(k=self.settings.k, gamma=self.settings.gamma)

    @property
    def experiments_used(self) -> int:
        return sum(
            1 for o in self.dataset if o.origin in (ORIGIN_SUGGESTED, ORIGIN_MANUAL)
        )

    @property
    def budget_remaining(self) -> int:
        return self.settings.budget - self.experiments_used

    @property
    def discovered(self) -> list[Observation]:
        """Every success-labeled observation, regardless of origin."""
        return self.dataset.successes()

    # ------------------------------------------------------------------
    # seed data
    # ------------------------------------------------------------------

    def import_seed(self, rows: Sequence[tuple[Sequence[float], int]]) -> int:
        """Import historical (values, outcome) rows as budget-free seed data.

        The import is atomic: every row must encode onto the grid and be new,
        otherwise nothing is imported and the error lists each bad row.
        Constraints are deliberately not applied; history does not have to
        satisfy the rules chosen for the search ahead.
        """
        configs: list[Configuration] = []
        problems: list[str] = []
        seen = {o.config.index for o in self.dataset}
        for row_no, (values, outcome) in enumerate(rows, start=1):
            try:
                cfg = self.space.encode(values)
                if outcome not in (0, 1):
                    raise ValidationError(f"outcome must be 0 or 1, got {outcome!r}")
                if cfg.index in seen:
                    raise ValidationError(
                        f"duplicate of already-known configuration {cfg.index}"
                    )
                seen.add(cfg.index)
                configs.append(cfg)
            except (ValidationError, SpaceError) as exc:
                problems.append(f"row {row_no}: {exc}")
        if problems:
            raise ValidationError(
                "seed import rejected:\n" + "\n".join(problems)
            )
        at = self.clock()
        for cfg, (_, outcome) in zip(configs, rows):
            self.dataset.append(
                Observation(cfg, int(outcome), ORIGIN_SEED, recorded_at=at)
            )
        self._log("seed-import", count=len(configs))
        self.state_version += 1
        return len(configs)

    # ------------------------------------------------------------------
    # suggest / record
    # ------------------------------------------------------------------

    def suggest(self) -> list[PendingSuggestion]:
        """Return the pending batch, computing a fresh one when none is open.

        Repeated calls without intervening ``record`` return the identical
        batch.  A fresh batch sizes itself to ``min(batch_size, budget
        remaining)`` and scores candidates with a lookahead horizon of the
        budget remaining after the first slot.
        """
        if self.pending:
            return list(self.pending)
        if self.budget_remaining <= 0:
            raise BudgetExhausted(
                f"budget of {self.settings.budget} experiments is spent"
            )
        pool = acquisition.build_pool(
            self.space,
            self.constraints,
            self.dataset,
            cap=self.settings.pool_cap,
            seed=self._pool_seed(),
        )
        picks = acquisition.select_batch(
            self.model,
            self.dataset,
            pool,
            batch_size=min(self.settings.batch_size, self.budget_remaining, len(pool)),
            remaining_budget=self.budget_remaining - 1,
            policy=self.settings.policy,
            tie_seed=self.settings.rng_seed,
        )
        at = self.clock()
        self.pending = [
            PendingSuggestion(p.config, p.p, p.beta, p.alpha, suggested_at=at)
            for p in picks
        ]
        self._log(
            "suggest",
            t=self.experiments_used,
            indices=[p.config.index for p in picks],
            alpha=[p.alpha for p in picks],
        )
        self.state_version += 1
        return list(self.pending)

    def record(
        self, config: Configuration, outcome: int, *, manual: bool = False
    ) -> Observation:
        """Record one experiment outcome, consuming one unit of budget.

        The configuration must belong to the pending batch unless ``manual``
        is set, which is the escape hatch for an operator who ran something
        off-script.  Partial recording is fine; the rest of the batch stays
        pending.
        """
        if outcome not in (0, 1):
            raise ValidationError(f"outcome must be 0 or 1, got {outcome!r}")
        if config.index in self.dataset:
            raise ValidationError(
                f"configuration {config.index} already has a recorded outcome"
            )
        if self.budget_remaining <= 0:
            raise BudgetExhausted(
                f"budget of {self.settings.budget} experiments is spent"
            )
        pending_pos = next(
            (i for i, s in enumerate(self.pending) if s.config.index == config.index),
            None,
        )
        if pending_pos is not None:
            origin = ORIGIN_SUGGESTED
            self.pending.pop(pending_pos)
        elif manual:
            origin = ORIGIN_MANUAL
        else:
            raise StateError(
                f"configuration {config.index} is not in the pending batch; "
                "record with manual=True if it was run off-script"
            )
        obs = Observation(config, int(outcome), origin, recorded_at=self.clock())
        self.dataset.append(obs)
        self._log("record", index=config.index, outcome=int(outcome), origin=origin)
        self.state_version += 1
        return obs

    def extend_budget(self, extra: int) -> int:
        """Grow the experiment budget by ``extra`` units; returns the new total."""
        if not (isinstance(extra, int) and extra >= 1):
            raise ValidationError(f"budget extension must be >= 1, got {extra!r}")
        new_settings = CampaignSettings(
            budget=self.settings.budget + extra,
            batch_size=self.settings.batch_size,
            policy=self.settings.policy,
            k=self.settings.k,
            gamma=self.settings.gamma,
            pool_cap=self.settings.pool_cap,
            rng_seed=self.settings.rng_seed,
        )
        self.settings = new_settings
        self._log("extend-budget", extra=extra, budget=new_settings.budget)
        self.state_version += 1
        return new_settings.budget

    # ------------------------------------------------------------------
    # reporting
    # ------------------------------------------------------------------

    def metrics(self) -> CampaignMetrics:
        used = self.experiments_used
        budgeted_successes = sum(
            1
            for o in self.dataset
            if o.outcome == 1 and o.origin in (ORIGIN_SUGGESTED, ORIGIN_MANUAL)
        )
        card = self.space.cardinality
        return CampaignMetrics(
            budget=self.settings.budget,
            experiments_used=used,
            budget_remaining=self.budget_remaining,
            seed_observations=sum(
                1 for o in self.dataset if o.origin == ORIGIN_SEED
            ),
            discovery_rate=budgeted_successes,
            total_successes=len(self.dataset.successes()),
            space_cardinality=card,
            fraction_explored=used / card,
        )

    def posterior_slice(
        self,
        axis_x: str,
        axis_y: str,
        pinned: dict[str, float],
    ) -> dict:
        """Posterior over a 2-D grid slice with the other axes pinned.

        Returns x/y grid values, a row-per-y matrix of probabilities, and the
        observations lying exactly on the slice (for plot overlays).
        """
        from .surrogate import predict  # local import keeps module load light

        if axis_x == axis_y:
            raise ValidationError("slice axes must differ")
        ax = self.space.axis(axis_x)
        ay = self.space.axis(axis_y)
        free = {axis_x, axis_y}
        expected_pins = [a.name for a in self.space.axes if a.name not in free]
        if set(pinned) != set(expected_pins):
            raise ValidationError(
                f"must pin exactly the axes {expected_pins}, got {sorted(pinned)}"
            )
        pin_positions = {
            name: self.space.axis(name).position_of(value)
            for name, value in pinned.items()
        }
        model = self.model
        matrix: list[list[float]] = []
        for yv in ay.grid_values():
            row = []
            for xv in ax.grid_values():
                values = []
                for a in self.space.axes:
                    if a.name == axis_x:
                        values.append(xv)
                    elif a.name == axis_y:
                        values.append(yv)
                    else:
                        values.append(a.value_at(pin_positions[a.name]))
                row.append(predict(model, self.dataset, self.space.encode(values)))
            matrix.append(row)
        overlay = []
        for obs in self.dataset:
            vals = dict(zip(self.space.axis_names, obs.config.values))
            if all(
                self.space.axis(name).position_of(vals[name]) == pos
                for name, pos in pin_positions.items()
            ):
                overlay.append(
                    {
                        "x": vals[axis_x],
                        "y": vals[axis_y],
                        "outcome": obs.outcome,
                        "origin": obs.origin,
                    }
                )
        return {
            "axis_x": axis_x,
            "axis_y": axis_y,
            "x_values": ax.grid_values(),
            "y_values": ay.grid_values(),
            "matrix": matrix,
            "observations": overlay,
        }

    # ------------------------------------------------------------------
    # helpers
    # ------------------------------------------------------------------

    def _pool_seed(self) -> int:
        # pool sampling must be a pure function of (campaign seed, progress)
        # so that replaying a campaign file reproduces every pool
        return int(
            np.random.SeedSequence(
                entropy=self.settings.rng_seed,
                spawn_key=(1, self.experiments_used),
            ).generate_state(1)[0]
        )

    def _log(self, event_type: str, **detail) -> None:
        self.events.append({"type": event_type, "at": self.clock(), **detail})


# ----------------------------------------------------------------------
# stratified initialization
# ----------------------------------------------------------------------


def _lhs_unit(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """n stratified samples per axis on [0, 1): one per bin, bins shuffled."""
    out = np.empty((n, dim))
    for j in range(dim):
        strata = rng.permutation(n)
        out[:, j] = (strata + rng.uniform(size=n)) / n
    return out


def init_lhs(
    space: ParameterSpace,
    constraints: ConstraintSet,
    n: int,
    seed: int = 0,
) -> list[Configuration]:
    """Latin-hypercube starter set, snapped to the grid.

    Each axis is cut into ``n`` strata with one sample apiece, so the starter
    set spreads along every axis even when ``n`` is tiny.  Samples violating
    constraints (or landing on an already-picked grid point after snapping)
    are redrawn inside their strata up to a retry cap, then dropped with a
    warning, so the result can be shorter than ``n``.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    constraints.validate(space)
    rng = np.random.default_rng(seed)
    unit = _lhs_unit(rng, n, space.dimension)
    strata = np.floor(unit * n).astype(int)

    def snap(row: np.ndarray) -> Configuration:
        values = []
        for a, u in zip(space.axes, row):
            raw = a.low + u * (a.high - a.low)
            pos = int(round((raw - a.low) / a.step)) if a.step else 0
            pos = min(max(pos, 0), a.cardinality - 1)
            values.append(a.value_at(pos))
        return space.encode(values)

    picked: list[Configuration] = []
    seen: set[int] = set()
    for i in range(n):
        row = unit[i]
        cfg = snap(row)
        tries = 0
        while (
            cfg.index in seen or not constraints.satisfies(space, cfg.values)
        ) and tries < _LHS_RETRIES:
            row = (strata[i] + rng.uniform(size=space.dimension)) / n
            cfg = snap(row)
            tries += 1
        if cfg.index in seen or not constraints.satisfies(space, cfg.values):
            warnings.warn(
                f"dropped stratified sample {i}: no valid grid point found "
                f"in its strata after {_LHS_RETRIES} retries",
                stacklevel=2,
            )
            continue
        seen.add(cfg.index)
        picked.append(cfg)
    return picked


def resolve_config(
    space: ParameterSpace,
    *,
    index: int | None = None,
    values: Sequence[float] | None = None,
) -> Configuration:
    """Build a :class:`Configuration` from either a flat index or raw values."""
    if (index is None) == (values is None):
        raise ValidationError("provide exactly one of index or values")
    if index is not None:
        return space.decode(int(index))
    return space.encode(values)
