"""
Worst-case measure for aggregate claims and the premia allocated from it.

The insurer's total premium is `π_0 = -u_0(-S)` for `S = sum_i X_i`. It is
attained by one measure `Q_0` in the scenario set that is adapted to `S`,
and each agent pays `π_i = E_{Q_0}[X_i]`, so the premia add up to `π_0`.

>>> from surplus_sharing.coherent import PowerDistortion
>>> from surplus_sharing.prob_core import ProbSpace, RandomVar
>>> space = ProbSpace.uniform(['w1', 'w2', 'w3', 'w4'])
>>> claims = [RandomVar([0, 1, 1, 2]), RandomVar([0, 0, 1, 2])]
>>> [16 * p for p in fair_premia(space, PowerDistortion(2), claims)]
[22.0, 19.0]
>>> 64 * total_premium(space, PowerDistortion(3), claims)
193.0
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Iterator, Sequence

from surplus_sharing.coherent import choquet_utility, minimizing_measure
from surplus_sharing.prob_core import (
    ComonotoneOrder,
    Measure,
    ProbSpace,
    RandomVar,
    comonotone_order,
    expectation,
)
from surplus_sharing.types import Distortion
from surplus_sharing.utils import InputError

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class WorstCaseMeasure:
    """`Q` attaining `sup_{Q ∈ core(f∘P)} E_Q[s]`.

    Because its only points of increase follow the order of `s`, the same
    measure attains the supremum for every variable comonotonic with `s`,
    in particular `s ∧ a` and `(s - a)^+` for every `a >= 0`.
    """

    measure: Measure
    order: ComonotoneOrder
    distortion: Distortion

    def expectation(self, space: ProbSpace, x: RandomVar) -> float:
        return expectation(space, x, self.measure)


def check_claims(claims: Sequence[RandomVar]) -> None:
    """Claims must be non-empty, equally sized and nonnegative."""
    if not claims:
        raise InputError('at least one agent is required')
    for i, x in enumerate(claims):
        if x.min() < 0:
            raise InputError(f'claims must be nonnegative, agent {i} has {x.min():.12g}')


def worst_case_measure(space: ProbSpace, f: Distortion, s: RandomVar) -> WorstCaseMeasure:
    """Atom at descending rank k of `s` gets `f̂(c_k) - f̂(c_{k-1})`.

    >>> from surplus_sharing.coherent import PowerDistortion
    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> q = worst_case_measure(ProbSpace.uniform('abcd'), PowerDistortion(3), RandomVar([0, 1, 2, 4]))
    >>> [64 * w for w in q.measure.weights]
    [1.0, 7.0, 19.0, 37.0]
    """
    measure = minimizing_measure(space, f, -s)
    return WorstCaseMeasure(measure=measure, order=comonotone_order(space, s), distortion=f)


@dataclasses.dataclass(frozen=True)
class PremiumVector:
    """Premium per agent, in the order of the claims."""

    premia: tuple[float, ...]

    @property
    def total(self) -> float:
        return math.fsum(self.premia)

    def __iter__(self) -> Iterator[float]:
        return iter(self.premia)

    def __len__(self) -> int:
        return len(self.premia)

    def __getitem__(self, i: int) -> float:
        return self.premia[i]


def total_premium(space: ProbSpace, f: Distortion, claims: Sequence[RandomVar]) -> float:
    """`π_0 = -u(-S)`; the smallest premium the insurer accepts for `S`."""
    check_claims(claims)
    return -choquet_utility(space, f, -RandomVar.total(claims))


def fair_premia(space: ProbSpace, f: Distortion, claims: Sequence[RandomVar]) -> PremiumVector:
    """`π_i = E_{Q_0}[X_i]` with `Q_0` the worst-case measure for `S`.

    Tie groups of `S` split their weight in proportion to P, so the result
    does not depend on atom order.
    """
    check_claims(claims)
    q0 = worst_case_measure(space, f, RandomVar.total(claims))
    premia = PremiumVector(tuple(q0.expectation(space, x) for x in claims))
    logger.debug('Premia under %s: %s (total %.12g)', f.spec, premia.premia, premia.total)
    return premia


def marginal_premium(
    space: ProbSpace, f: Distortion, claims: Sequence[RandomVar], i: int, eps: float
) -> float:
    """`-(u(-S - εX_i) - u(-S)) / ε`, the marginal contribution of agent `i`.

    >>> from surplus_sharing.coherent import PowerDistortion
    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> space = ProbSpace.uniform('ab')
    >>> marginal_premium(space, PowerDistortion(2), [RandomVar([1, 1])], 0, 0.5)
    1.0
    """
    if not eps > 0:
        raise InputError(f'eps must be positive, got {eps!r}')
    check_claims(claims)
    s = RandomVar.total(claims)
    base = choquet_utility(space, f, -s)
    bumped = choquet_utility(space, f, -s - eps * claims[i])
    return -(bumped - base) / eps


def upper_premia(space: ProbSpace, f: Distortion, claims: Sequence[RandomVar]) -> PremiumVector:
    """`sup_{Q ∈ core(f∘P)} E_Q[X_i] = -u(-X_i)` agent by agent.

    Each agent's worst case is taken separately, so the total is at least
    `total_premium`.
    """
    check_claims(claims)
    return PremiumVector(tuple(-choquet_utility(space, f, -x) for x in claims))


if __name__ == '__main__':
    import doctest

    doctest.testmod()
