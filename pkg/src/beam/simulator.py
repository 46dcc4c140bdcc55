"""Synthetic feasibility landscapes and seeded strategy comparisons.

Real campaigns burn money on every experiment, so strategy quality is
validated here instead: plant a sparse feasible region in a desk-scale
grid, run the full campaign loop against it with the outcome supplied by
the oracle instead of a lab, and compare policies over many seeds.  All
comparisons are paired: every strategy in a cell sees the same oracle and
the same starter data, which removes most seed-to-seed variance from the
contrast.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .acquisition import POLICIES
from .campaign import Campaign, CampaignSettings, init_lhs
from .errors import StateError, ValidationError
from .space import Configuration, ConstraintSet, ParameterSpace

__all__ = [
    "ORACLE_KINDS",
    "OracleSpec",
    "SyntheticOracle",
    "make_oracle",
    "make_seed_failures",
    "run_simulated_campaign",
    "RunTrace",
    "BenchReport",
    "bench",
    "write_report",
]

ORACLE_KINDS = ("clustered", "scattered", "shell")

# estimation sample for radius tuning on grids too large to enumerate
_TUNE_SAMPLE = 200_000
# shell oracles keep a fixed inner exclusion radius so the outer radius is
# the only tuning knob and the point count stays monotone in it
_SHELL_INNER = 0.15


@dataclass(frozen=True)
class OracleSpec:
    """Recipe for a synthetic landscape; same spec + seed ⇒ same landscape."""

    kind: str = "clustered"
    feasible_fraction: float = 0.005
    cluster_count: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ORACLE_KINDS:
            raise ValidationError(f"unknown oracle kind {self.kind!r}")
        if not (0 < self.feasible_fraction <= 0.05):
            raise ValidationError(
                f"feasible_fraction must be in (0, 0.05], got {self.feasible_fraction}"
            )
        if self.cluster_count < 1:
            raise ValidationError("cluster_count must be >= 1")


class SyntheticOracle:
    """Deterministic binary feasibility over one grid.

    ``clustered`` marks points within a tuned radius of seeded centers,
    ``shell`` marks a band between a fixed inner and tuned outer radius
    around one center, and ``scattered`` marks an exact-count random subset
    of grid indices.  Evaluation cost is O(cluster count) for the distance
    kinds and O(log n) for scattered.
    """

    def __init__(
        self,
        space: ParameterSpace,
        spec: OracleSpec,
        centers: np.ndarray,
        inner: float,
        outer: float,
        members: np.ndarray | None,
        realized_fraction: float,
    ):
        self.space = space
        self.spec = spec
        self._centers = centers
        self._inner = inner
        self._outer = outer
        self._members = members
        self.realized_fraction = realized_fraction

    @property
    def kind(self) -> str:
        return self.spec.kind

    def evaluate(self, config: Configuration) -> int:
        if self._members is not None:
            pos = int(np.searchsorted(self._members, config.index))
            return int(
                pos < self._members.size and self._members[pos] == config.index
            )
        x = np.asarray(self.space.normalize(config.values))
        d = np.sqrt(((self._centers - x) ** 2).sum(axis=1))
        return int(bool(np.any((d >= self._inner) & (d <= self._outer))))

    def evaluate_indices(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized evaluation for tests and tuning; same answers as evaluate."""
        indices = np.asarray(indices, dtype=np.int64)
        if self._members is not None:
            pos = np.searchsorted(self._members, indices)
            pos = np.clip(pos, 0, max(self._members.size - 1, 0))
            hit = (self._members.size > 0) & (self._members[pos] == indices)
            return hit.astype(np.int64)
        coords = self.space.normalize_many(self.space.decode_many(indices))
        out = np.zeros(indices.size, dtype=np.int64)
        for c in self._centers:
            d = np.sqrt(((coords - c) ** 2).sum(axis=1))
            out |= ((d >= self._inner) & (d <= self._outer)).astype(np.int64)
        return out


def _tuning_coords(space: ParameterSpace, seed: int) -> tuple[np.ndarray, bool]:
    """Coordinates used to estimate the feasible fraction during tuning."""
    if space.cardinality <= _TUNE_SAMPLE:
        idx = np.arange(space.cardinality, dtype=np.int64)
        exact = True
    else:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
        idx = rng.integers(0, space.cardinality, size=_TUNE_SAMPLE, dtype=np.int64)
        exact = False
    return space.normalize_many(space.decode_many(idx)), exact


def make_oracle(space: ParameterSpace, spec: OracleSpec) -> SyntheticOracle:
    """Build and tune an oracle so its feasible fraction hits the request.

    Distance-based kinds bisect their radius against an exhaustive count on
    small grids (a sampled estimate on huge ones); if even the closest
    achievable fraction misses the request by more than 20% the grid is too
    coarse for that fraction and the call fails instead of silently lying.
    """
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    q = spec.feasible_fraction

    if spec.kind == "scattered":
        target = max(1, round(q * space.cardinality))
        if space.cardinality <= 4_000_000:
            members = rng.choice(space.cardinality, size=target, replace=False)
        else:
            chosen: set[int] = set()
            while len(chosen) < target:
                draw = rng.integers(
                    0, space.cardinality, size=2 * (target - len(chosen)) + 16
                )
                for v in draw.tolist():
                    chosen.add(v)
                    if len(chosen) >= target:
                        break
            members = np.fromiter(chosen, dtype=np.int64, count=target)
        members = np.sort(np.asarray(members, dtype=np.int64))
        realized = members.size / space.cardinality
        return SyntheticOracle(space, spec, np.empty((0, 0)), 0.0, 0.0, members, realized)

    n_centers = spec.cluster_count if spec.kind == "clustered" else 1
    center_idx = rng.integers(0, space.cardinality, size=n_centers, dtype=np.int64)
    centers = space.normalize_many(space.decode_many(center_idx))

    coords, _ = _tuning_coords(space, spec.seed)
    d = np.sqrt(((coords[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2))

    inner = _SHELL_INNER if spec.kind == "shell" else 0.0

    def fraction_at(outer: float) -> float:
        hit = np.any((d >= inner) & (d <= outer), axis=1)
        return float(hit.mean())

    lo, hi = inner, float(np.sqrt(space.dimension)) + 1e-9
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if fraction_at(mid) < q:
            lo = mid
        else:
            hi = mid
    realized = fraction_at(hi)
    if q > 0 and abs(realized - q) / q > 0.2:
        raise ValidationError(
            f"{spec.kind} oracle cannot realize feasible fraction {q} on this "
            f"grid (closest achievable is {realized:.6f}); the grid is too "
            "coarse for that fraction"
        )
    return SyntheticOracle(space, spec, centers, inner, hi, None, realized)


def make_seed_failures(
    space: ParameterSpace,
    oracle: SyntheticOracle,
    n: int,
    seed: int = 0,
) -> list[tuple[list[float], int]]:
    """Draw n distinct infeasible configurations as synthetic failure history."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    rows: list[tuple[list[float], int]] = []
    seen: set[int] = set()
    tries = 0
    while len(rows) < n:
        tries += 1
        if tries > 200 * n + 1000:
            raise ValidationError(
                f"could not find {n} infeasible configurations; the landscape "
                "is not sparse enough for a failure-only seed set"
            )
        idx = int(rng.integers(0, space.cardinality))
        if idx in seen:
            continue
        seen.add(idx)
        cfg = space.decode(idx)
        if oracle.evaluate(cfg) == 0:
            rows.append((list(cfg.values), 0))
    return rows


# ----------------------------------------------------------------------
# simulated campaign runs
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RunTrace:
    """Per-experiment outcomes of one simulated campaign."""

    strategy: str
    oracle_kind: str
    seed: int
    budget: int
    batch_size: int
    outcomes: tuple[int, ...]
    wall_ms: float

    @property
    def discoveries(self) -> int:
        return int(sum(self.outcomes))

    @property
    def experiments(self) -> int:
        return len(self.outcomes)

    def cumulative(self) -> list[int]:
        return np.cumsum(self.outcomes).astype(int).tolist() if self.outcomes else []


def run_simulated_campaign(
    space: ParameterSpace,
    oracle: SyntheticOracle,
    strategy: str,
    T: int,
    B: int,
    seed: int,
    *,
    constraints: ConstraintSet | None = None,
    seed_data: Sequence[tuple[Sequence[float], int]] = (),
    k: int = 5,
    gamma: float = 0.05,
    pool_cap: int = 100_000,
) -> RunTrace:
    """Run one closed-loop campaign with the oracle standing in for the lab.

    Returns the per-experiment outcome trace.  T = 0 short-circuits to an
    empty trace; a pool that empties before the budget does ends the run
    early, so the trace can be shorter than T.
    """
    if strategy not in POLICIES:
        raise ValidationError(f"unknown strategy {strategy!r}")
    if T < 0:
        raise ValidationError("T must be >= 0")
    started = time.perf_counter()
    if T == 0:
        return RunTrace(strategy, oracle.kind, seed, 0, B, (), 0.0)

    campaign = Campaign(
        space,
        constraints or ConstraintSet(()),
        CampaignSettings(
            budget=T,
            batch_size=B,
            policy=strategy,
            k=k,
            gamma=gamma,
            pool_cap=pool_cap,
            rng_seed=seed,
        ),
    )
    if seed_data:
        campaign.import_seed([(list(v), int(y)) for v, y in seed_data])

    outcomes: list[int] = []
    while campaign.budget_remaining > 0:
        try:
            batch = campaign.suggest()
        except StateError:
            break  # nothing left to try
        for item in batch:
            y = oracle.evaluate(item.config)
            campaign.record(item.config, y)
            outcomes.append(y)
    wall_ms = (time.perf_counter() - started) * 1000.0
    return RunTrace(strategy, oracle.kind, seed, T, B, tuple(outcomes), wall_ms)


# ----------------------------------------------------------------------
# benchmark harness
# ----------------------------------------------------------------------


@dataclass
class BenchReport:
    """All traces of one bench invocation plus aggregate summaries."""

    runs: list[RunTrace] = field(default_factory=list)

    def aggregates(self) -> list[dict]:
        """Mean/stddev of final discoveries per (strategy, oracle kind)."""
        groups: dict[tuple[str, str], list[RunTrace]] = {}
        for run in self.runs:
            groups.setdefault((run.strategy, run.oracle_kind), []).append(run)
        out = []
        for (strategy, kind), runs in sorted(groups.items()):
            d = np.array([r.discoveries for r in runs], dtype=float)
            out.append(
                {
                    "strategy": strategy,
                    "oracle_kind": kind,
                    "runs": len(runs),
                    "mean_discoveries": float(d.mean()),
                    "stddev_discoveries": float(d.std(ddof=1)) if d.size > 1 else 0.0,
                    "mean_wall_ms": float(np.mean([r.wall_ms for r in runs])),
                }
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["strategy", "oracle_kind", "seed", "T", "B", "discoveries",
             "experiments", "wall_ms"]
        )
        for r in self.runs:
            writer.writerow(
                [r.strategy, r.oracle_kind, r.seed, r.budget, r.batch_size,
                 r.discoveries, r.experiments, f"{r.wall_ms:.3f}"]
            )
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "runs": [
                {
                    "strategy": r.strategy,
                    "oracle_kind": r.oracle_kind,
                    "seed": r.seed,
                    "T": r.budget,
                    "B": r.batch_size,
                    "discoveries": r.discoveries,
                    "experiments": r.experiments,
                    "wall_ms": round(r.wall_ms, 3),
                }
                for r in self.runs
            ],
            "aggregates": self.aggregates(),
        }

    def plot_data(self) -> dict:
        """Cumulative discoveries per experiment, one series per run."""
        return {
            "series": [
                {
                    "strategy": r.strategy,
                    "oracle_kind": r.oracle_kind,
                    "seed": r.seed,
                    "cumulative_discoveries": r.cumulative(),
                }
                for r in self.runs
            ]
        }


def bench(
    space: ParameterSpace,
    oracle_specs: Sequence[OracleSpec],
    strategies: Sequence[str],
    T: int,
    B: int,
    repetitions: int,
    seed: int = 0,
    *,
    constraints: ConstraintSet | None = None,
    seed_lhs: int = 0,
    seed_failures: int = 0,
    pool_cap: int = 100_000,
) -> BenchReport:
    """Cross product of oracle specs × repetitions × strategies, paired.

    Within one (spec, repetition) cell every strategy faces the identical
    oracle and identical starter data; ``seed_lhs`` adds a space-filling
    starter set labeled by the oracle, ``seed_failures`` adds that many
    known-infeasible rows (a failure-history stand-in).
    """
    if repetitions < 1:
        raise ValidationError("repetitions must be >= 1")
    for s in strategies:
        if s not in POLICIES:
            raise ValidationError(f"unknown strategy {s!r}")
    report = BenchReport()
    for spec_no, spec in enumerate(oracle_specs):
        for rep in range(repetitions):
            cell_seed = int(
                np.random.SeedSequence([seed, spec_no, rep]).generate_state(1)[0]
                % (2**31)
            )
            cell_spec = OracleSpec(
                kind=spec.kind,
                feasible_fraction=spec.feasible_fraction,
                cluster_count=spec.cluster_count,
                seed=cell_seed,
            )
            oracle = make_oracle(space, cell_spec)
            rows: list[tuple[list[float], int]] = []
            if seed_lhs:
                for cfg in init_lhs(
                    space, constraints or ConstraintSet(()), seed_lhs, seed=cell_seed
                ):
                    rows.append((list(cfg.values), oracle.evaluate(cfg)))
            if seed_failures:
                have = {tuple(v) for v, _ in rows}
                for values, y in make_seed_failures(
                    space, oracle, seed_failures + len(rows), seed=cell_seed
                ):
                    if tuple(values) not in have:
                        rows.append((values, y))
                    if len(rows) >= seed_lhs + seed_failures:
                        break
            for strategy in strategies:
                report.runs.append(
                    run_simulated_campaign(
                        space,
                        oracle,
                        strategy,
                        T,
                        B,
                        cell_seed,
                        constraints=constraints,
                        seed_data=rows,
                        pool_cap=pool_cap,
                    )
                )
    return report


def write_report(report: BenchReport, out_dir: str | Path, stem: str = "bench") -> dict:
    """Write the delimited, structured, and plot-data report files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / f"{stem}.csv",
        "json": out / f"{stem}.json",
        "plot": out / f"{stem}_plot.json",
    }
    paths["csv"].write_text(report.to_csv(), encoding="utf-8")
    paths["json"].write_text(
        json.dumps(report.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    paths["plot"].write_text(
        json.dumps(report.plot_data(), indent=2) + "\n", encoding="utf-8"
    )
    return {k: str(v) for k, v in paths.items()}
