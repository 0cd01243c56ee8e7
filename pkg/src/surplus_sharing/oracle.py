"""
Brute-force checks for small problems, and random instances to feed them.

Nothing here is used to produce results: the enumeration is factorial in the
number of atoms and the bisection ignores the breakpoint structure that
`retention` exploits, so the two implementations share no code path.

>>> from surplus_sharing.coherent import PowerDistortion
>>> from surplus_sharing.prob_core import ProbSpace, RandomVar
>>> space = ProbSpace.uniform(['w1', 'w2', 'w3', 'w4'])
>>> points = core_extreme_points(space, PowerDistortion(2))
>>> len(points)
24
>>> oracle_utility(space, PowerDistortion(2), RandomVar([0, -1, -2, -4])) * 16
-41.0
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from typing import Optional, Sequence

import numpy as np

from surplus_sharing.allocation import fair_premia, total_premium, worst_case_measure
from surplus_sharing.coherent import (
    PiecewiseLinearDistortion,
    choquet_utility,
    validate_distortion,
)
from surplus_sharing.models import MODEL_IDS, ModelReport, Portfolio, run_model
from surplus_sharing.prob_core import Measure, ProbSpace, RandomVar, expectation
from surplus_sharing.retention import RetentionProblem, solve_retention
from surplus_sharing.types import Distortion, FloatArray, Real
from surplus_sharing.utils import (
    ATOL,
    BISECTION_WIDTH,
    MAX_ORACLE_AGENTS,
    MAX_ORACLE_ATOMS,
    GuardError,
    InputError,
)

logger = logging.getLogger(__name__)

MAX_EVENT_ATOMS = 6
"""Exhaustive event checks visit all `2^n` subsets."""


def _guard_atoms(space: ProbSpace, limit: int = MAX_ORACLE_ATOMS) -> None:
    if len(space) > limit:
        raise GuardError(f'{len(space)} atoms exceed the enumeration limit of {limit}')


@dataclasses.dataclass(frozen=True)
class ExtremePointSet:
    """One measure per ordering of the atoms, with the ordering that
    generated it."""

    measures: tuple[Measure, ...]
    permutations: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.measures)


def core_extreme_points(space: ProbSpace, f: Distortion) -> ExtremePointSet:
    """Extreme points of the core of `f∘P`: along each permutation σ, atom
    `σ(k)` gets `f(c_k) - f(c_{k-1})` with `c_k` cumulative P along σ.

    >>> from surplus_sharing.coherent import PowerDistortion
    >>> points = core_extreme_points(ProbSpace.uniform('ab'), PowerDistortion(2))
    >>> [m.weights.tolist() for m in points.measures]
    [[0.25, 0.75], [0.75, 0.25]]
    """
    _guard_atoms(space)
    measures, permutations = [], []
    for permutation in itertools.permutations(range(len(space))):
        values = np.asarray(f(np.concatenate([[0.0], space.cumulative(permutation)])), dtype=float)
        weights = np.zeros(len(space))
        weights[list(permutation)] = np.diff(values)
        measures.append(Measure(weights))
        permutations.append(permutation)
    return ExtremePointSet(tuple(measures), tuple(permutations))


def oracle_utility(space: ProbSpace, f: Distortion, x: RandomVar) -> float:
    """`min_Q E_Q[x]` over all extreme points of the core."""
    return min(expectation(space, x, q) for q in core_extreme_points(space, f).measures)


def core_gap(space: ProbSpace, f: Distortion, q: Measure) -> float:
    """`min_A Q(A) - f(P(A))` over all events; nonnegative iff `q` lies in
    the core."""
    _guard_atoms(space, MAX_EVENT_ATOMS)
    gaps = []
    for size in range(1, len(space) + 1):
        for event in itertools.combinations(range(len(space)), size):
            atoms = list(event)
            gaps.append(math.fsum(q.weights[atoms]) - float(f(math.fsum(space.probs[atoms]))))
    return min(gaps)


def oracle_retention(space: ProbSpace, q: Measure, s: RandomVar, target: Real) -> float:
    """Bisection for the largest `x` with `E_q[(x - s)^+] <= target`, on
    `[0, max(s) + target + 1]` down to `BISECTION_WIDTH`; returns the right
    end of the final bracket.

    >>> space = ProbSpace.uniform('ab')
    >>> abs(oracle_retention(space, space.measure, RandomVar([0, 0]), 0)) < 1e-9
    True
    """
    if not target >= 0:
        raise InputError(f'retention target must be nonnegative, got {target!r}')
    space.check(q, s)

    def phi(x: float) -> float:
        return math.fsum(q.weights * np.maximum(x - s.values, 0.0))

    lo, hi = 0.0, s.max() + target + 1
    while hi - lo > BISECTION_WIDTH:
        mid = (lo + hi) / 2
        if phi(mid) <= target:
            lo = mid
        else:
            hi = mid
    return hi


@dataclasses.dataclass(frozen=True, eq=False)
class RandomInstance:
    """A random valid portfolio with utilities ordered `f_i <= f_r <= f_0`
    and premia at or above both fair premia."""

    seed: int
    space: ProbSpace
    agents: tuple[str, ...]
    claims: tuple[RandomVar, ...]
    insurer: Distortion
    reinsurer: Distortion
    agent_utilities: tuple[Distortion, ...]
    capital: float
    premia: tuple[float, ...]

    @property
    def portfolio(self) -> Portfolio:
        return Portfolio(
            space=self.space,
            agents=self.agents,
            claims=self.claims,
            capital=self.capital,
            insurer=self.insurer,
            agent_utilities=self.agent_utilities,
            reinsurer=self.reinsurer,
            premia=self.premia,
        )


DISTORTION_GRID = np.linspace(0.0, 1.0, 11)
"""Common knots of randomly drawn distortions, so compositions stay
piecewise linear on the same grid."""


def _random_convex(rng: np.random.Generator) -> FloatArray:
    """Values on `DISTORTION_GRID` of a random convex distortion."""
    if rng.random() < 0.15:
        return DISTORTION_GRID.copy()
    slopes = np.sort(rng.exponential(size=DISTORTION_GRID.size - 1))
    slopes[: rng.integers(0, 3)] = 0.0
    increments = slopes * np.diff(DISTORTION_GRID)
    values = np.concatenate([[0.0], np.cumsum(increments) / increments.sum()])
    values[-1] = 1.0
    return values


def _compose(outer: FloatArray, inner: FloatArray) -> FloatArray:
    """Values on the grid of `outer∘inner`, both given on the grid. Convex
    and non-decreasing `outer` keeps convexity, and `inner(x) <= x` keeps
    the result below `outer`."""
    values = np.interp(inner, DISTORTION_GRID, outer)
    values[0], values[-1] = 0.0, 1.0
    return values


def _distortion(values: FloatArray) -> Distortion:
    f = PiecewiseLinearDistortion(tuple(zip(DISTORTION_GRID.tolist(), values.tolist())))
    validate_distortion(f).raise_for_issues()
    return f


def random_instance(
    seed: int, dims: tuple[int, int] = (4, 2), tie_frequency: float = 0.0
) -> RandomInstance:
    """Deterministic in `seed`.

    `tie_frequency` is the chance that an atom copies the claims of an
    earlier atom; at 1 every atom has the same claims, so `S` is constant.

    >>> a, b = random_instance(7), random_instance(7)
    >>> a.space.probs.tolist() == b.space.probs.tolist() and a.premia == b.premia
    True
    >>> random_instance(3, (5, 3), tie_frequency=1).portfolio.aggregate.is_constant()
    True
    """
    n_atoms, n_agents = dims
    if not 1 <= n_atoms <= MAX_ORACLE_ATOMS:
        raise GuardError(f'atom count must be in [1, {MAX_ORACLE_ATOMS}], got {n_atoms}')
    if not 1 <= n_agents <= MAX_ORACLE_AGENTS:
        raise GuardError(f'agent count must be in [1, {MAX_ORACLE_AGENTS}], got {n_agents}')
    if not 0 <= tie_frequency <= 1:
        raise InputError(f'tie frequency must be in [0, 1], got {tie_frequency!r}')
    rng = np.random.default_rng(seed)
    probs = 0.9 * rng.dirichlet(np.ones(n_atoms)) + 0.1 / n_atoms
    space = ProbSpace(tuple(f'w{j + 1}' for j in range(n_atoms)), probs / probs.sum())

    claims = np.round(rng.uniform(0.0, 10.0, size=(n_agents, n_atoms)), 2)
    claims[rng.random(size=claims.shape) < 0.2] = 0.0
    for j in range(1, n_atoms):
        if rng.random() < tie_frequency:
            claims[:, j] = claims[:, rng.integers(0, j)]

    f0 = _random_convex(rng)
    fr = _compose(f0, _random_convex(rng))
    insurer, reinsurer = _distortion(f0), _distortion(fr)
    agent_utilities = tuple(
        _distortion(_compose(fr, _random_convex(rng))) for _ in range(n_agents)
    )
    claim_vars = tuple(RandomVar(row) for row in claims)

    floors = np.maximum(
        list(fair_premia(space, insurer, claim_vars)),
        list(fair_premia(space, reinsurer, claim_vars)),
    )
    bounds = np.array([-choquet_utility(space, reinsurer, -x) for x in claim_vars])
    premia = floors + rng.uniform(0.0, 1.25, size=n_agents) * np.maximum(bounds - floors, 0.0)
    return RandomInstance(
        seed=seed,
        space=space,
        agents=tuple(f'agent{i + 1}' for i in range(n_agents)),
        claims=claim_vars,
        insurer=insurer,
        reinsurer=reinsurer,
        agent_utilities=agent_utilities,
        capital=float(rng.uniform(0.1, 5.0)),
        premia=tuple(premia.tolist()),
    )


@dataclasses.dataclass(frozen=True)
class VerificationResult:
    """Largest discrepancies found on one random instance, and the insurer
    verdict of each model."""

    seed: int
    utility_gap: float
    retention_gap: float
    allocation_gap: float
    core_gap: Optional[float]
    insurer_accepted: tuple[bool, ...]
    balance_residual: float

    @property
    def passed(self) -> bool:
        return (
            self.utility_gap <= ATOL
            and self.retention_gap <= 10 * ATOL
            and self.allocation_gap <= ATOL
            and (self.core_gap is None or self.core_gap >= -ATOL)
            and all(self.insurer_accepted)
            and self.balance_residual <= ATOL
        )


def verify_instance(
    seed: int, n_atoms: int = 4, n_agents: int = 2, tie_frequency: float = 0.0
) -> VerificationResult:
    """Compare fast and brute-force computations on `random_instance(seed)`
    and run all four models on it."""
    instance = random_instance(seed, (n_atoms, n_agents), tie_frequency)
    portfolio = instance.portfolio
    space, s = instance.space, portfolio.aggregate
    rng = np.random.default_rng(seed)
    probe = RandomVar(rng.normal(size=len(space)))
    variables = [-s, s, probe, *(-x for x in instance.claims)]
    utility_gap = max(
        abs(choquet_utility(space, f, x) - oracle_utility(space, f, x))
        for f in (instance.insurer, instance.reinsurer)
        for x in variables
    )
    retention_gap = 0.0
    for f in (instance.insurer, instance.reinsurer):
        q = worst_case_measure(space, f, s).measure
        for target in (0.0, instance.capital, instance.capital + math.fsum(instance.premia)):
            exact = solve_retention(RetentionProblem(space, s, q, target)).R
            retention_gap = max(retention_gap, abs(exact - oracle_retention(space, q, s, target)))
    allocation_gap = abs(
        fair_premia(space, instance.insurer, instance.claims).total
        - total_premium(space, instance.insurer, instance.claims)
    )
    gap = None
    if len(space) <= MAX_EVENT_ATOMS:
        gap = min(
            core_gap(space, f, q)
            for f in (instance.insurer, instance.reinsurer, *instance.agent_utilities)
            for q in core_extreme_points(space, f).measures
        )
    reports = [run_model(portfolio, model) for model in MODEL_IDS]
    result = VerificationResult(
        seed=seed,
        utility_gap=utility_gap,
        retention_gap=retention_gap,
        allocation_gap=allocation_gap,
        core_gap=gap,
        insurer_accepted=tuple(r.verdicts[0].accepted for r in reports),
        balance_residual=max(r.balance_residual for r in reports),
    )
    if not result.passed:
        logger.warning('Verification failed for seed %d: %s', seed, result)
    return result


def check_report(portfolio: Portfolio, report: ModelReport) -> tuple[str, ...]:
    """Recompute the total premium and the retention of `report` by brute
    force; returns a message per mismatch.

    Spaces beyond the enumeration guard are skipped (nothing to report).
    """
    if len(portfolio.space) > MAX_ORACLE_ATOMS:
        logger.info('Skipping oracle cross-check: %d atoms', len(portfolio.space))
        return ()
    space, s = portfolio.space, portfolio.aggregate
    pricing = portfolio.reinsurer if report.model == 4 else portfolio.insurer
    assert pricing is not None
    mismatches = []
    expected_total = -oracle_utility(space, pricing, -s)
    if abs(expected_total - report.total_premium) > ATOL:
        mismatches.append(
            f'model {report.model}: total premium {report.total_premium:.12g}, '
            f'oracle {expected_total:.12g}'
        )
    if report.retention is not None:
        q = worst_case_measure(space, pricing, s).measure
        target = report.retention.R - report.retention.pi_R
        expected_r = oracle_retention(space, q, s, max(target, 0.0))
        if abs(expected_r - report.retention.R) > 10 * ATOL:
            mismatches.append(
                f'model {report.model}: retention {report.retention.R:.12g}, '
                f'oracle {expected_r:.12g}'
            )
    for message in mismatches:
        logger.warning(message)
    return tuple(mismatches)


def verify_all(
    seeds: Sequence[int], n_atoms: int = 4, n_agents: int = 2, tie_frequency: float = 0.0
) -> list[VerificationResult]:
    return [verify_instance(seed, n_atoms, n_agents, tie_frequency) for seed in seeds]


if __name__ == '__main__':
    import doctest

    doctest.testmod()
