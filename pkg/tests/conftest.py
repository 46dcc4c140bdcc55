"""Shared fixtures: the production grid and a few desk-scale spaces."""

import pytest

from beam.space import AxisSpec, ConstraintSet, ParameterSpace


def make_full_space() -> ParameterSpace:
    """The five-axis production grid searched one laser-power level at a time."""
    return ParameterSpace(
        axes=(
            AxisSpec("feed", 0.01, 1.0, 0.01),
            AxisSpec("gas", 3.0, 10.0, 0.5),
            AxisSpec("thickness", 0.0, 10.0, 0.2),
            AxisSpec("scan", 200.0, 1600.0, 50.0),
            AxisSpec("layer", 0.05, 0.5, 0.01),
        ),
        fixed_context={"laser_power": 600.0},
    )


def make_line_space(points: int = 9) -> ParameterSpace:
    """1-D integer grid [0, points-1]; binary-exact normalized coordinates
    when points-1 is a power of two, so distance ties are exact in float."""
    return ParameterSpace(axes=(AxisSpec("x", 0.0, float(points - 1), 1.0),))


def make_plane_space(nx: int = 9, ny: int = 9) -> ParameterSpace:
    return ParameterSpace(
        axes=(
            AxisSpec("x", 0.0, float(nx - 1), 1.0),
            AxisSpec("y", 0.0, float(ny - 1), 1.0),
        )
    )


@pytest.fixture
def full_space() -> ParameterSpace:
    return make_full_space()


@pytest.fixture
def line_space() -> ParameterSpace:
    return make_line_space()


@pytest.fixture
def no_constraints() -> ConstraintSet:
    return ConstraintSet(())
