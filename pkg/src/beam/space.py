"""Discrete parameter grids, index codecs, and feasibility constraints.

A search space is a Cartesian product of evenly stepped numeric axes.  Every
grid point has a single integer index (mixed-radix, first axis most
significant) so that configurations can be stored, deduplicated, and sampled
without materializing the grid.  Axis values are canonicalized to
``low + i * step`` on encode, which keeps serialized campaigns byte-stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConstraintError, OffGridError, SpaceError

__all__ = [
    "AxisSpec",
    "ParameterSpace",
    "Configuration",
    "IntervalBound",
    "Exclusion",
    "PairRatio",
    "ConstraintSet",
]

# Tolerance for snapping a raw value onto a grid point, relative to the axis
# step.  Values farther than this from every grid point are rejected rather
# than silently rounded: an off-grid request usually means operator error.
SNAP_RTOL = 1e-6

# Slack added before flooring the step count so that ranges like
# (1.0 - 0.01) / 0.01 do not lose a grid point to float rounding.
_COUNT_SLACK = 1e-9


@dataclass(frozen=True)
class AxisSpec:
    """One numeric axis: inclusive ``[low, high]`` walked in ``step`` increments."""

    name: str
    low: float
    high: float
    step: float

    def __post_init__(self) -> None:
        if not self.name:
            raise SpaceError("axis name must be non-empty")
        if not (self.step > 0):
            raise SpaceError(f"axis {self.name!r}: step must be positive")
        if self.high < self.low:
            raise SpaceError(f"axis {self.name!r}: high < low")

    @cached_property
    def cardinality(self) -> int:
        return math.floor((self.high - self.low) / self.step + _COUNT_SLACK) + 1

    def value_at(self, i: int) -> float:
        if not 0 <= i < self.cardinality:
            raise SpaceError(f"axis {self.name!r}: position {i} out of range")
        return self.low + i * self.step

    def position_of(self, value: float) -> int:
        """Snap ``value`` to its grid position, or raise :class:`OffGridError`."""
        tol = SNAP_RTOL * self.step
        if value < self.low - tol or value > self.high + tol:
            raise OffGridError(
                f"axis {self.name!r}: value {value!r} outside [{self.low}, {self.high}]"
            )
        i = int(round((value - self.low) / self.step))
        i = min(max(i, 0), self.cardinality - 1)
        if abs(self.value_at(i) - value) > tol:
            raise OffGridError(
                f"axis {self.name!r}: value {value!r} is not a grid point "
                f"(step {self.step})"
            )
        return i

    def grid_values(self) -> list[float]:
        return [self.value_at(i) for i in range(self.cardinality)]

    def normalize(self, value: float) -> float:
        """Affine map of ``value`` onto [0, 1]; degenerate axes map to 0."""
        span = self.high - self.low
        if span == 0:
            return 0.0
        return (value - self.low) / span


@dataclass(frozen=True)
class Configuration:
    """A single grid point: its flat index plus canonical per-axis values."""

    index: int
    values: tuple[float, ...]


@dataclass(frozen=True)
class ParameterSpace:
    """Cartesian product of axes plus held-constant context settings.

    ``fixed_context`` records settings that are part of the experimental
    protocol but not searched over (for example a power level held constant
    for a whole campaign).  It travels with the space for provenance and is
    otherwise inert.
    """

    axes: tuple[AxisSpec, ...]
    fixed_context: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.axes:
            raise SpaceError("a space needs at least one axis")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise SpaceError(f"duplicate axis names: {names}")
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "fixed_context", dict(self.fixed_context))

    # ------------------------------------------------------------------
    # structure
    # ------------------------------------------------------------------

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @cached_property
    def cardinality(self) -> int:
        # Python ints are arbitrary precision, so the product is exact at any
        # scale this library will meet.
        return math.prod(a.cardinality for a in self.axes)

    @property
    def axis_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def axis(self, name: str) -> AxisSpec:
        for a in self.axes:
            if a.name == name:
                return a
        raise SpaceError(f"unknown axis {name!r}")

    def axis_position(self, name: str) -> int:
        for i, a in enumerate(self.axes):
            if a.name == name:
                return i
        raise SpaceError(f"unknown axis {name!r}")

    @cached_property
    def _radix_weights(self) -> tuple[int, ...]:
        # weight of axis i = product of cardinalities of the axes after it
        weights = [1] * self.dimension
        for i in range(self.dimension - 2, -1, -1):
            weights[i] = weights[i + 1] * self.axes[i + 1].cardinality
        return tuple(weights)

    # ------------------------------------------------------------------
    # codec
    # ------------------------------------------------------------------

    def encode(self, values: Sequence[float]) -> Configuration:
        """Snap raw per-axis values onto the grid and return the configuration.

        Raises :class:`OffGridError` naming the offending axis when a value is
        out of range or does not sit on a grid point (within ``1e-6 * step``).
        """
        if len(values) != self.dimension:
            raise SpaceError(
                f"expected {self.dimension} values, got {len(values)}"
            )
        positions = [a.position_of(v) for a, v in zip(self.axes, values)]
        index = 0
        for pos, w in zip(positions, self._radix_weights):
            index += pos * w
        canonical = tuple(a.value_at(p) for a, p in zip(self.axes, positions))
        return Configuration(index=index, values=canonical)

    def decode(self, index: int) -> Configuration:
        """Inverse of :meth:`encode` for a flat grid index."""
        if not 0 <= index < self.cardinality:
            raise SpaceError(
                f"index {index} out of range [0, {self.cardinality})"
            )
        rem = index
        values = []
        for a, w in zip(self.axes, self._radix_weights):
            pos, rem = divmod(rem, w)
            values.append(a.value_at(pos))
        return Configuration(index=index, values=tuple(values))

    def decode_many(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`decode`: (n,) int array -> (n, d) float64 values."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.cardinality):
            raise SpaceError("index out of range in decode_many")
        out = np.empty((idx.shape[0], self.dimension), dtype=np.float64)
        rem = idx.copy()
        for i, (a, w) in enumerate(zip(self.axes, self._radix_weights)):
            pos = rem // w
            rem = rem - pos * w
            out[:, i] = a.low + pos * a.step
        return out

    def decode_batch(self, indices: Iterable[int]) -> list[Configuration]:
        """Many :class:`Configuration` objects at once (same values as decode)."""
        idx = np.asarray(list(indices), dtype=np.int64)
        values = self.decode_many(idx)
        return [
            Configuration(index=int(i), values=tuple(row))
            for i, row in zip(idx.tolist(), values.tolist())
        ]

    # ------------------------------------------------------------------
    # geometry
    # ------------------------------------------------------------------

    def normalize(self, values: Sequence[float]) -> np.ndarray:
        """Per-axis affine map onto the unit cube (degenerate axes -> 0)."""
        return np.array(
            [a.normalize(v) for a, v in zip(self.axes, values)], dtype=np.float64
        )

    def normalize_many(self, values: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`normalize` for an (n, d) value matrix."""
        vals = np.asarray(values, dtype=np.float64)
        lows = np.array([a.low for a in self.axes])
        spans = np.array([a.high - a.low for a in self.axes])
        safe = np.where(spans == 0, 1.0, spans)
        out = (vals - lows) / safe
        out[:, spans == 0] = 0.0
        return out

    def neighbor_indices(self, index: int) -> list[int]:
        """Indices one grid step away along a single axis (up to ``2 d``)."""
        if not 0 <= index < self.cardinality:
            raise SpaceError(f"index {index} out of range")
        out = []
        rem = index
        for a, w in zip(self.axes, self._radix_weights):
            pos, rem = divmod(rem, w)
            if pos > 0:
                out.append(index - w)
            if pos < a.cardinality - 1:
                out.append(index + w)
        return out


# ----------------------------------------------------------------------
# constraints
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalBound:
    """Keep an axis value inside an inclusive interval (either end optional)."""

    axis: str
    min: float | None = None
    max: float | None = None

    def __post_init__(self) -> None:
        if self.min is None and self.max is None:
            raise ConstraintError(f"interval on {self.axis!r} has no bound")


@dataclass(frozen=True)
class Exclusion:
    """Forbid a specific set of grid values on one axis."""

    axis: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ConstraintError(f"exclusion on {self.axis!r} lists no values")
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class PairRatio:
    """Bound the ratio ``numerator / denominator`` between two axes.

    A zero denominator fails the constraint: the ratio is undefined, and the
    safe reading for a feasibility gate is "not satisfied".
    """

    numerator: str
    denominator: str
    min_ratio: float | None = None
    max_ratio: float | None = None

    def __post_init__(self) -> None:
        if self.min_ratio is None and self.max_ratio is None:
            raise ConstraintError(
                f"ratio {self.numerator!r}/{self.denominator!r} has no bound"
            )


Constraint = IntervalBound | Exclusion | PairRatio


@dataclass(frozen=True)
class ConstraintSet:
    """Conjunction of constraints; empty means everything is allowed."""

    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))

    def __len__(self) -> int:
        return len(self.constraints)

    def validate(self, space: ParameterSpace) -> None:
        """Raise :class:`ConstraintError` if any constraint names an unknown axis.

        Run at campaign construction / file load so that a bad constraint is a
        load error, not a silent runtime ``False``.
        """
        names = set(space.axis_names)
        for c in self.constraints:
            referenced = (
                [c.axis]
                if isinstance(c, (IntervalBound, Exclusion))
                else [c.numerator, c.denominator]
            )
            for name in referenced:
                if name not in names:
                    raise ConstraintError(
                        f"constraint references unknown axis {name!r}"
                    )

    def satisfies(self, space: ParameterSpace, values: Sequence[float]) -> bool:
        """True when every constraint holds for the given per-axis values."""
        for c in self.constraints:
            if isinstance(c, IntervalBound):
                v = values[space.axis_position(c.axis)]
                if c.min is not None and v < c.min:
                    return False
                if c.max is not None and v > c.max:
                    return False
            elif isinstance(c, Exclusion):
                pos = space.axis_position(c.axis)
                tol = SNAP_RTOL * space.axes[pos].step
                v = values[pos]
                if any(abs(v - f) <= tol for f in c.values):
                    return False
            else:
                num = values[space.axis_position(c.numerator)]
                den = values[space.axis_position(c.denominator)]
                if den == 0:
                    return False
                ratio = num / den
                if c.min_ratio is not None and ratio < c.min_ratio:
                    return False
                if c.max_ratio is not None and ratio > c.max_ratio:
                    return False
        return True

    def mask(self, space: ParameterSpace, values: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`satisfies` over an (n, d) value matrix."""
        vals = np.asarray(values, dtype=np.float64)
        ok = np.ones(vals.shape[0], dtype=bool)
        for c in self.constraints:
            if isinstance(c, IntervalBound):
                col = vals[:, space.axis_position(c.axis)]
                if c.min is not None:
                    ok &= col >= c.min
                if c.max is not None:
                    ok &= col <= c.max
            elif isinstance(c, Exclusion):
                pos = space.axis_position(c.axis)
                tol = SNAP_RTOL * space.axes[pos].step
                col = vals[:, pos]
                for f in c.values:
                    ok &= np.abs(col - f) > tol
            else:
                num = vals[:, space.axis_position(c.numerator)]
                den = vals[:, space.axis_position(c.denominator)]
                nonzero = den != 0
                ratio = np.divide(num, den, out=np.zeros_like(num), where=nonzero)
                good = nonzero.copy()
                if c.min_ratio is not None:
                    good &= ratio >= c.min_ratio
                if c.max_ratio is not None:
                    good &= ratio <= c.max_ratio
                ok &= good
        return ok


def enumerate_feasible(
    space: ParameterSpace,
    constraints: ConstraintSet,
    indices: Iterable[int] | None = None,
) -> list[int]:
    """Indices (all, or the given subset) that satisfy ``constraints``.

    Only call with ``indices=None`` on spaces small enough to enumerate.
    """
    if indices is None:
        indices = range(space.cardinality)
    idx = np.fromiter(indices, dtype=np.int64)
    if idx.size == 0:
        return []
    values = space.decode_many(idx)
    return [int(i) for i in idx[constraints.mask(space, values)]]
