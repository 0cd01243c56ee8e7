"""
Retention levels for stop-loss reinsurance.

With reinsurance priced by `q`, the insurer can retain up to the level `R`
where the money it holds covers the retained claims in every state:
`Φ(R) = E_q[(R - s)^+] = target`. `Φ` is piecewise linear with slope
`q(s <= a)` between consecutive values of `s`, so it is inverted exactly on
the segment that contains the target.

>>> from surplus_sharing.coherent import PowerDistortion
>>> from surplus_sharing.prob_core import ProbSpace, RandomVar
>>> space = ProbSpace.uniform(['w1', 'w2', 'w3', 'w4'])
>>> problem = RetentionProblem.under(space, PowerDistortion(2), RandomVar([0, 1, 2, 4]), 1)
>>> phi_eval(problem, 2) * 16
5.0
>>> solution = solve_retention(problem)
>>> round(solution.R * 9, 9), round(solution.pi_R * 9, 9), round(solution.rho_R * 144, 9)
(29.0, 20.0, 49.0)
"""
from __future__ import annotations

import dataclasses
import functools
import logging
import math

import numpy as np

from surplus_sharing.allocation import worst_case_measure
from surplus_sharing.prob_core import Measure, ProbSpace, RandomVar, expectation
from surplus_sharing.types import Distortion, FloatArray, Real
from surplus_sharing.utils import InputError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class Segments:
    """Breakpoints `b_j` (values of `s` with positive q-mass, ascending),
    `Φ(b_j)` and the slope `q(s <= b_j)` of `Φ` on `[b_j, b_{j+1}]`."""

    breakpoints: FloatArray
    phi: FloatArray
    slopes: FloatArray


@dataclasses.dataclass(frozen=True, eq=False)
class RetentionProblem:
    """Solve `E_q[(R - s)^+] = target` for the largest `R`."""

    space: ProbSpace
    s: RandomVar
    q: Measure
    target: float

    def __post_init__(self) -> None:
        self.space.check(self.s, self.q)
        if self.s.min() < 0:
            raise InputError(f'aggregate claims must be nonnegative, got {self.s.min():.12g}')
        if not math.isfinite(self.target) or self.target < 0:
            raise InputError(f'retention target must be nonnegative, got {self.target!r}')

    @classmethod
    def under(
        cls, space: ProbSpace, f: Distortion, s: RandomVar, target: Real
    ) -> RetentionProblem:
        """Problem priced by the worst-case measure of `f` for `s`."""
        return cls(space, s, worst_case_measure(space, f, s).measure, float(target))

    def with_target(self, target: Real) -> RetentionProblem:
        return dataclasses.replace(self, target=float(target))

    @functools.cached_property
    def segments(self) -> Segments:
        mass = self.q.weights > 0
        breakpoints = np.unique(self.s.values[mass])
        cdf = np.array([math.fsum(self.q.weights[self.s.values <= b]) for b in breakpoints])
        cdf[-1] = 1.0
        phi = np.concatenate(
            [[0.0], np.cumsum(cdf[:-1] * np.diff(breakpoints))]
        )
        return Segments(breakpoints=breakpoints, phi=phi, slopes=cdf)


def cdf(problem: RetentionProblem, x: Real) -> float:
    """`q(s <= x)`, the right derivative of `Φ` at `x`."""
    return math.fsum(problem.q.weights[problem.s.values <= x])


def phi_eval(problem: RetentionProblem, x: Real) -> float:
    """`Φ(x) = E_q[(x - s)^+]`, the integral of the cdf of `s` from 0 to `x`.

    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> space = ProbSpace.uniform('ab')
    >>> problem = RetentionProblem(space, RandomVar([3, 3]), space.measure, 0)
    >>> phi_eval(problem, 2), phi_eval(problem, 5)
    (0.0, 2.0)
    """
    if not x >= 0:
        raise InputError(f'Φ is evaluated at nonnegative levels only, got {x!r}')
    seg = problem.segments
    if x <= seg.breakpoints[0]:
        return 0.0
    j = int(np.searchsorted(seg.breakpoints, x, side='right')) - 1
    return float(seg.phi[j] + seg.slopes[j] * (x - seg.breakpoints[j]))


@dataclasses.dataclass(frozen=True)
class RetentionSolution:
    """`R - pi_R` equals the target; `pi_R + rho_R = E_q[s]`.

    `segment` is the index of the breakpoint starting the linear piece that
    was inverted; `beyond_max` marks `R > max(s)` (nothing is ceded).
    """

    R: float
    pi_R: float
    rho_R: float
    segment: int
    exact: bool = True
    beyond_max: bool = False


def solve_retention(problem: RetentionProblem) -> RetentionSolution:
    """Largest `R` with `Φ(R) = target`.

    For target 0 that is the right end of the flat zero piece, the smallest
    value of `s` carrying q-mass.

    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> space = ProbSpace.uniform('ab')
    >>> solve_retention(RetentionProblem(space, RandomVar([2, 5]), space.measure, 0)).R
    2.0
    """
    seg = problem.segments
    target = problem.target
    if target == 0:
        j = 0
        level = float(seg.breakpoints[0])
    else:
        j = int(np.searchsorted(seg.phi, target, side='right')) - 1
        level = float(seg.breakpoints[j] + (target - seg.phi[j]) / seg.slopes[j])
    solution = RetentionSolution(
        R=level,
        pi_R=expectation(problem.space, problem.s.minimum(level), problem.q),
        rho_R=expectation(problem.space, problem.s.excess(level), problem.q),
        segment=j,
        beyond_max=level > problem.s.max(),
    )
    logger.debug(
        'Retention for target %.12g: R=%.12g on segment %d (beyond max: %s)',
        target,
        solution.R,
        j,
        solution.beyond_max,
    )
    return solution


if __name__ == '__main__':
    import doctest

    doctest.testmod()
