"""
Distortion functions and coherent utilities.

A valid distortion `f` (convex, non-decreasing, `f(0) = 0`, `f(1) = 1`)
defines the commonotonic coherent utility whose scenario set is the core of
the convex game `f∘P`. It is evaluated with the sorted-weights (Choquet)
formula: sort `x` ascending and give the atom of ascending rank k the weight
`f̂(s_k) - f̂(s_{k-1})`, where `f̂(x) = 1 - f(1 - x)` and `s_k` is the
cumulative P-probability of the first k atoms.

>>> from surplus_sharing.prob_core import ProbSpace, RandomVar
>>> space = ProbSpace.uniform(['w1', 'w2', 'w3', 'w4'])
>>> s = RandomVar([0, 1, 2, 4])
>>> f0 = parse_distortion('power:2')
>>> choquet_utility(space, f0, -s) * 16
-41.0
>>> choquet_utility(space, f0, s) * 16
15.0
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import ClassVar, Optional, Sequence

import numpy as np

from surplus_sharing.prob_core import (
    ComonotoneOrder,
    Measure,
    ProbSpace,
    RandomVar,
    comonotone_order,
    expectation,
)
from surplus_sharing.types import Distortion, FloatArray
from surplus_sharing.utils import (
    ATOL,
    DOMINANCE_GRID,
    DOMINANCE_TOL,
    DistortionError,
    InputError,
    parse_number,
)

logger = logging.getLogger(__name__)


def _scalar_or_array(x: float | FloatArray, y: FloatArray) -> float | FloatArray:
    return float(y) if np.ndim(x) == 0 else y


@dataclasses.dataclass(frozen=True)
class PowerDistortion:
    """`f(x) = x^γ`, valid for `γ >= 1`; `γ = 1` is the identity (plain
    expectation)."""

    gamma: float
    family: ClassVar[str] = 'power'

    def __call__(self, x: float | FloatArray) -> float | FloatArray:
        return _scalar_or_array(x, np.power(np.asarray(x, dtype=float), self.gamma))

    @property
    def spec(self) -> str:
        return f'power:{self.gamma!r}'

    @property
    def knots(self) -> tuple[float, ...]:
        return (0.0, 1.0)


@dataclasses.dataclass(frozen=True)
class ExpectedShortfallDistortion:
    """`f(x) = max(0, (x - (1 - α)) / α)` for `α ∈ (0, 1]`.

    The flat part puts zero weight on the best outcomes; `α = 1` is the
    identity.
    """

    alpha: float
    family: ClassVar[str] = 'es'

    def __call__(self, x: float | FloatArray) -> float | FloatArray:
        x_ = np.asarray(x, dtype=float)
        return _scalar_or_array(x, np.maximum(0.0, (x_ - (1 - self.alpha)) / self.alpha))

    @property
    def spec(self) -> str:
        return f'es:{self.alpha!r}'

    @property
    def knots(self) -> tuple[float, ...]:
        return (0.0, 1 - self.alpha, 1.0)


@dataclasses.dataclass(frozen=True)
class PiecewiseLinearDistortion:
    """Linear interpolation between `(x, f(x))` knots."""

    points: tuple[tuple[float, float], ...]
    family: ClassVar[str] = 'pwl'

    def __post_init__(self) -> None:
        object.__setattr__(
            self, 'points', tuple((float(x), float(y)) for x, y in self.points)
        )

    def __call__(self, x: float | FloatArray) -> float | FloatArray:
        xs, ys = zip(*self.points)
        return _scalar_or_array(x, np.interp(np.asarray(x, dtype=float), xs, ys))

    @property
    def spec(self) -> str:
        return 'pwl:' + ';'.join(f'{x!r},{y!r}' for x, y in self.points)

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(x for x, _ in self.points)


@dataclasses.dataclass(frozen=True)
class DualDistortion:
    """`f̂(x) = 1 - f(1 - x)`; concave when `f` is convex."""

    base: Distortion
    family: ClassVar[str] = 'dual'

    def __call__(self, x: float | FloatArray) -> float | FloatArray:
        x_ = np.asarray(x, dtype=float)
        return _scalar_or_array(x, 1.0 - np.asarray(self.base(1.0 - x_), dtype=float))

    @property
    def spec(self) -> str:
        return f'dual({self.base.spec})'

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(sorted(1.0 - k for k in self.base.knots))


IDENTITY = PowerDistortion(1.0)
"""The distortion of plain expectation under P."""


@dataclasses.dataclass(frozen=True)
class DistortionReport:
    """Outcome of `validate_distortion`. `grid` is the resolution used for
    the sampled checks (families with analytic checks still record it)."""

    spec: str
    issues: tuple[str, ...]
    grid: int

    @property
    def valid(self) -> bool:
        return not self.issues

    def raise_for_issues(self, field: Optional[str] = None) -> None:
        if self.issues:
            raise DistortionError(f'{self.spec}: ' + '; '.join(self.issues), field)


def _sample_issues(f: Distortion, grid: int) -> list[str]:
    points = np.union1d(np.linspace(0.0, 1.0, grid + 1), np.clip(f.knots, 0.0, 1.0))
    values = np.asarray(f(points), dtype=float)
    issues = []
    if abs(values[0]) > ATOL or abs(values[-1] - 1) > ATOL:
        issues.append(f'endpoints f(0)={values[0]:.12g}, f(1)={values[-1]:.12g}, expected 0 and 1')
    if np.any(np.diff(values) < -ATOL):
        issues.append('not non-decreasing')
    slopes = np.diff(values) / np.diff(points)
    if np.any(np.diff(slopes) < -ATOL * max(1.0, float(np.max(np.abs(slopes))))):
        issues.append('not convex on the sample grid')
    return issues


def validate_distortion(f: Distortion, grid: int = DOMINANCE_GRID) -> DistortionReport:
    """Check endpoints, monotonicity and convexity.

    Families are checked analytically; knot sequences by their slopes; any
    other callable on a uniform grid plus its knots.

    >>> validate_distortion(PowerDistortion(2)).valid
    True
    >>> validate_distortion(parse_distortion('pwl:0,0;0.5,0.6;1,1', validate=False)).issues
    ('slopes decrease (not convex): 1.2 then 0.8',)
    >>> validate_distortion(PowerDistortion(0.5)).issues
    ('gamma 0.5 < 1',)
    """
    issues: list[str] = []
    if isinstance(f, PowerDistortion):
        if not math.isfinite(f.gamma) or f.gamma < 1:
            issues.append(f'gamma {f.gamma!r} < 1')
    elif isinstance(f, ExpectedShortfallDistortion):
        if not math.isfinite(f.alpha) or not 0 < f.alpha <= 1:
            issues.append(f'alpha {f.alpha!r} outside (0, 1]')
    elif isinstance(f, PiecewiseLinearDistortion):
        issues.extend(_knot_issues(f.points))
    else:
        issues.extend(_sample_issues(f, grid))
    return DistortionReport(spec=f.spec, issues=tuple(issues), grid=grid)


def _knot_issues(points: Sequence[tuple[float, float]]) -> list[str]:
    if len(points) < 2:
        return ['at least two knots are required']
    xs = np.array([x for x, _ in points])
    ys = np.array([y for _, y in points])
    issues = []
    if np.any(np.diff(xs) <= 0):
        return ['knot x-coordinates must be strictly increasing']
    if abs(xs[0]) > ATOL or abs(ys[0]) > ATOL:
        issues.append(f'first knot must be (0, 0), got ({xs[0]!r}, {ys[0]!r})')
    if abs(xs[-1] - 1) > ATOL or abs(ys[-1] - 1) > ATOL:
        issues.append(f'last knot must be (1, 1), got ({xs[-1]!r}, {ys[-1]!r})')
    slopes = np.diff(ys) / np.diff(xs)
    if slopes[0] < -ATOL:
        issues.append(f'first slope {slopes[0]:.12g} is negative (not non-decreasing)')
    for left, right in zip(slopes[:-1], slopes[1:]):
        if right < left - ATOL:
            issues.append(f'slopes decrease (not convex): {left:.12g} then {right:.12g}')
            break
    return issues


def parse_distortion(text: str, validate: bool = True) -> Distortion:
    """Parse the grammar `power:γ`, `es:α`, `pwl:x0,y0;x1,y1;...`.

    Numbers may be exact fractions.

    >>> parse_distortion('es:1/2')
    ExpectedShortfallDistortion(alpha=0.5)
    >>> parse_distortion('pwl:0,0;1/2,1/4;1,1').spec
    'pwl:0.0,0.0;0.5,0.25;1.0,1.0'
    >>> parse_distortion('power:0.5')
    Traceback (most recent call last):
    ...
    DistortionError: power:0.5: gamma 0.5 < 1
    """
    if not isinstance(text, str) or ':' not in text:
        raise DistortionError(f'expected "<family>:<parameters>", got {text!r}')
    family, _, body = (part.strip() for part in text.partition(':'))
    try:
        if family == PowerDistortion.family:
            f: Distortion = PowerDistortion(parse_number(body))
        elif family == ExpectedShortfallDistortion.family:
            f = ExpectedShortfallDistortion(parse_number(body))
        elif family == PiecewiseLinearDistortion.family:
            f = PiecewiseLinearDistortion(
                tuple(_parse_knot(knot) for knot in body.split(';') if knot.strip())
            )
        else:
            raise DistortionError(f'unknown distortion family {family!r} in {text!r}')
    except DistortionError:
        raise
    except InputError as exc:
        raise DistortionError(f'{text!r}: {exc}') from exc
    if validate:
        validate_distortion(f).raise_for_issues()
    return f


def _parse_knot(knot: str) -> tuple[float, float]:
    parts = knot.split(',')
    if len(parts) != 2:
        raise DistortionError(f'knot must be "x,y", got {knot!r}')
    return parse_number(parts[0]), parse_number(parts[1])


def dual_distortion(f: Distortion) -> DualDistortion:
    """`f̂(x) = 1 - f(1 - x)`.

    >>> dual_distortion(PowerDistortion(2))(0.25)
    0.4375
    """
    return DualDistortion(f)


def minimizing_measure(space: ProbSpace, f: Distortion, x: RandomVar) -> Measure:
    """The extreme point of the core of `f∘P` attaining `min_Q E_Q[x]`.

    Atoms sorted ascending by `x`; rank k gets `f̂(s_k) - f̂(s_{k-1})`. A tie
    group receives `f̂(s_end) - f̂(s_start)` in total, split in proportion to
    P, so the measure (and every value computed from it) does not depend on
    the order within ties.
    """
    return _rank_measure(space, f, comonotone_order(space, -x))


def _rank_measure(space: ProbSpace, f: Distortion, order: ComonotoneOrder) -> Measure:
    dual = dual_distortion(f)
    cumulative = np.concatenate([[0.0], space.cumulative(order.permutation)])
    dual_values = np.asarray(dual(cumulative), dtype=float)
    weights = np.zeros(len(space))
    for start, stop in order.tie_groups:
        atoms = list(order.permutation[start:stop])
        group_weight = dual_values[stop] - dual_values[start]
        weights[atoms] = group_weight * space.probs[atoms] / space.probs[atoms].sum()
    return Measure(weights)


def choquet_utility(space: ProbSpace, f: Distortion, x: RandomVar) -> float:
    """Commonotonic coherent utility `u(x) = min_{Q ∈ core(f∘P)} E_Q[x]`.

    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> choquet_utility(ProbSpace.uniform('ab'), PowerDistortion(3), RandomVar.constant(2.5, 2))
    2.5
    """
    return expectation(space, x, minimizing_measure(space, f, x))


def scenario_utility(
    space: ProbSpace, measures: Sequence[Measure], x: RandomVar
) -> tuple[float, int]:
    """`min_Q E_Q[x]` over an explicit list and the first index attaining it.

    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> space = ProbSpace.uniform('ab')
    >>> scenario_utility(space, [space.point_mass('a'), space.point_mass('b')], RandomVar([3, 1]))
    (1.0, 1)
    """
    if not measures:
        raise InputError('scenario set must contain at least one measure')
    values = [expectation(space, x, q) for q in measures]
    index = int(np.argmin(values))
    return values[index], index


def utility_dominates(f_lo: Distortion, f_hi: Distortion, grid: int = DOMINANCE_GRID) -> bool:
    """Whether `f_lo <= f_hi` on a uniform grid plus both knot sets, which
    implies `u_lo <= u_hi` for the utilities they define.

    >>> utility_dominates(PowerDistortion(4), PowerDistortion(3), grid=100)
    True
    >>> utility_dominates(PowerDistortion(2), PowerDistortion(3), grid=100)
    False
    """
    if grid < 1:
        raise InputError(f'grid resolution must be a positive integer, got {grid!r}')
    points = np.union1d(
        np.linspace(0.0, 1.0, grid + 1),
        np.clip(np.concatenate([f_lo.knots, f_hi.knots]), 0.0, 1.0),
    )
    lo = np.asarray(f_lo(points), dtype=float)
    hi = np.asarray(f_hi(points), dtype=float)
    return bool(np.all(lo <= hi + DOMINANCE_TOL))


def is_acceptable(space: ProbSpace, f: Distortion, x: RandomVar) -> bool:
    """A position is acceptable when its utility is nonnegative."""
    return choquet_utility(space, f, x) >= -ATOL


def acceptable_shift(space: ProbSpace, f: Distortion, x: RandomVar) -> RandomVar:
    """`x - u(x)`, which always has utility exactly 0."""
    return x - choquet_utility(space, f, x)


@dataclasses.dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Either distortion-generated (the core of `f∘P`, never materialized)
    or an explicit non-empty list of measures."""

    space: ProbSpace
    distortion: Optional[Distortion] = None
    measures: tuple[Measure, ...] = ()

    def __post_init__(self) -> None:
        if (self.distortion is None) == (not self.measures):
            raise InputError('a scenario set needs exactly one of: a distortion, a list of measures')
        object.__setattr__(self, 'measures', tuple(self.measures))
        self.space.check(*self.measures)


@dataclasses.dataclass(frozen=True, eq=False)
class CoherentUtility:
    """`u(x) = inf_{Q ∈ S} E_Q[x]` for the scenario set `S`.

    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> u = CoherentUtility.from_distortion(ProbSpace.uniform('abcd'), PowerDistortion(2))
    >>> u(RandomVar([0, -1, -2, -4])) * 16
    -41.0
    """

    scenario: ScenarioSet

    @classmethod
    def from_distortion(cls, space: ProbSpace, f: Distortion) -> CoherentUtility:
        return cls(ScenarioSet(space, distortion=f))

    @classmethod
    def from_measures(cls, space: ProbSpace, measures: Sequence[Measure]) -> CoherentUtility:
        return cls(ScenarioSet(space, measures=tuple(measures)))

    @property
    def space(self) -> ProbSpace:
        return self.scenario.space

    def __call__(self, x: RandomVar) -> float:
        if self.scenario.distortion is not None:
            return choquet_utility(self.space, self.scenario.distortion, x)
        return scenario_utility(self.space, self.scenario.measures, x)[0]

    def attaining_measure(self, x: RandomVar) -> Measure:
        if self.scenario.distortion is not None:
            return minimizing_measure(self.space, self.scenario.distortion, x)
        return self.scenario.measures[scenario_utility(self.space, self.scenario.measures, x)[1]]

    def price(self, x: RandomVar) -> float:
        """`sup_{Q ∈ S} E_Q[x] = -u(-x)`, the premium this utility charges
        for taking over `x`."""
        return -self(-x)


if __name__ == '__main__':
    import doctest

    doctest.testmod()
