"""
The four surplus-sharing models.

1. Agents pay fair premia, the insurer adds capital `k0` and keeps what is
   left; claims beyond premia plus capital are covered by a third party
   (the government).
2. The insurer buys stop-loss reinsurance priced by its own utility and
   retains the maximal level `R` it can fully cover; agents pay fair premia.
3. Agents pay more than fair premia; the excess is capital they contribute
   and the surplus is split in proportion to contributed capital.
4. Like 3, but the reinsurer prices with its own, more conservative,
   utility.

Every run returns a `ModelReport` with the surplus, each party's payoff,
acceptability verdicts and the numbers behind them.

>>> from surplus_sharing.coherent import PowerDistortion
>>> from surplus_sharing.prob_core import ProbSpace, RandomVar
>>> portfolio = Portfolio(
...     space=ProbSpace.uniform(['w1', 'w2', 'w3', 'w4']),
...     agents=('agent1', 'agent2'),
...     claims=(RandomVar([0, 1, 1, 2]), RandomVar([0, 0, 1, 2])),
...     capital=1,
...     insurer=PowerDistortion(2),
...     agent_utilities=(PowerDistortion(4), PowerDistortion(4)),
... )
>>> report = model1_run(portfolio)
>>> report.events
{'A': ('w4',), 'B': (), 'C': ('w1', 'w2', 'w3')}
>>> report.verdicts[0].utility * 256, report.accepted
(305.0, True)
>>> round(model2_run(portfolio).retention.R * 9, 9)
29.0
"""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from surplus_sharing.allocation import (
    check_claims,
    fair_premia,
    total_premium,
    upper_premia,
    worst_case_measure,
)
from surplus_sharing.coherent import choquet_utility, utility_dominates, validate_distortion
from surplus_sharing.prob_core import Measure, ProbSpace, RandomVar, expectation
from surplus_sharing.retention import RetentionProblem, RetentionSolution, solve_retention
from surplus_sharing.types import Distortion, ModelId, Real
from surplus_sharing.utils import ATOL, InputError, PortfolioError, field_context

logger = logging.getLogger(__name__)

MODEL_IDS: tuple[ModelId, ...] = (1, 2, 3, 4)

INSURER = 'insurer'
"""Party name of the direct insurer in verdicts and payoffs."""


@dataclasses.dataclass(frozen=True, eq=False)
class Portfolio:
    """Everything a model run needs.

    Generic invariants are checked on construction, with the dotted field
    path of the offending entry; what only some models require (premia, a
    reinsurer, premium floors, utility ordering) is checked by
    `validate_portfolio`.
    """

    space: ProbSpace
    agents: tuple[str, ...]
    claims: tuple[RandomVar, ...]
    capital: float
    insurer: Distortion
    agent_utilities: tuple[Distortion, ...]
    reinsurer: Optional[Distortion] = None
    premia: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        agents = tuple(str(a) for a in self.agents)
        object.__setattr__(self, 'agents', agents)
        object.__setattr__(self, 'claims', tuple(self.claims))
        object.__setattr__(self, 'agent_utilities', tuple(self.agent_utilities))
        if not agents:
            raise PortfolioError('at least one agent is required', 'claims')
        if len(set(agents)) != len(agents):
            raise PortfolioError(f'agent names must be unique: {agents}', 'claims')
        if len(self.claims) != len(agents):
            raise PortfolioError(f'expected {len(agents)} claim vectors, got {len(self.claims)}', 'claims')
        for agent, x in zip(agents, self.claims):
            with field_context(f'claims.{agent}'):
                self.space.check(x)
                check_claims([x])
        with field_context('capital'):
            capital = float(self.capital)
            if not math.isfinite(capital) or capital < 0:
                raise PortfolioError(f'capital must be finite and nonnegative, got {self.capital!r}')
        object.__setattr__(self, 'capital', capital)
        validate_distortion(self.insurer).raise_for_issues('utilities.insurer')
        if self.reinsurer is not None:
            validate_distortion(self.reinsurer).raise_for_issues('utilities.reinsurer')
        if len(self.agent_utilities) != len(agents):
            raise PortfolioError(
                f'expected {len(agents)} agent utilities, got {len(self.agent_utilities)}',
                'utilities.agents',
            )
        for agent, f in zip(agents, self.agent_utilities):
            validate_distortion(f).raise_for_issues(f'utilities.agents.{agent}')
        if self.premia is not None:
            premia = tuple(float(p) for p in self.premia)
            if len(premia) != len(agents):
                raise PortfolioError(f'expected {len(agents)} premia, got {len(premia)}', 'premia')
            for agent, p in zip(agents, premia):
                if not math.isfinite(p) or p < 0:
                    raise PortfolioError(f'premium must be finite and nonnegative, got {p!r}', f'premia.{agent}')
            object.__setattr__(self, 'premia', premia)

    @property
    def aggregate(self) -> RandomVar:
        """`S = sum_i X_i`"""
        return RandomVar.total(self.claims)

    def with_capital(self, capital: Real) -> Portfolio:
        return dataclasses.replace(self, capital=capital)

    def with_premia(self, premia: Optional[Sequence[Real]]) -> Portfolio:
        return dataclasses.replace(self, premia=None if premia is None else tuple(premia))


def validate_portfolio(portfolio: Portfolio, model: ModelId) -> None:
    """Model-specific invariants: utility ordering `f_i <= f_r <= f_0`
    (`f_i <= f_0` without reinsurer), and for Models 3 and 4 premia at or
    above the fair premia of the pricing utility."""
    if model not in MODEL_IDS:
        raise InputError(f'unknown model {model!r}, expected one of {MODEL_IDS}', 'model')
    if model == 4:
        if portfolio.reinsurer is None:
            raise PortfolioError('model 4 needs a reinsurer distortion', 'utilities.reinsurer')
        if not utility_dominates(portfolio.reinsurer, portfolio.insurer):
            raise PortfolioError(
                f'reinsurer {portfolio.reinsurer.spec} must not exceed insurer {portfolio.insurer.spec}',
                'utilities.reinsurer',
            )
    upper = portfolio.reinsurer if model == 4 else portfolio.insurer
    assert upper is not None
    for agent, f in zip(portfolio.agents, portfolio.agent_utilities):
        if not utility_dominates(f, upper):
            raise PortfolioError(
                f'agent utility {f.spec} must not exceed {upper.spec}', f'utilities.agents.{agent}'
            )
    if model in (3, 4):
        if portfolio.premia is None:
            raise PortfolioError(f'model {model} needs charged premia', 'premia')
        floors = fair_premia(portfolio.space, upper, portfolio.claims)
        name = 'reinsurer premium' if model == 4 else 'fair premium'
        for agent, p, floor in zip(portfolio.agents, portfolio.premia, floors):
            if p < floor - ATOL:
                raise PortfolioError(
                    f'premium {p:.12g} is below the {name} {floor:.12g}', f'premia.{agent}'
                )


@dataclasses.dataclass(frozen=True)
class SurplusShares:
    """Fractions of the surplus for the insurer and each agent, in
    proportion to capital `k0` and contributed capital `p_i - π_i`.

    `degenerate` is set when nobody contributed anything; the insurer then
    keeps everything, as in Model 2.
    """

    insurer: float
    agents: tuple[float, ...]
    degenerate: bool = False

    @property
    def total(self) -> float:
        return self.insurer + math.fsum(self.agents)


def compute_shares(capital: float, inputs: Sequence[float]) -> SurplusShares:
    """
    >>> compute_shares(1, [0.125, 0.125])
    SurplusShares(insurer=0.8, agents=(0.1, 0.1), degenerate=False)
    >>> compute_shares(0, [0, 0])
    SurplusShares(insurer=1.0, agents=(0.0, 0.0), degenerate=True)
    >>> compute_shares(1, [0.5, -0.25])
    Traceback (most recent call last):
    ...
    InputError: inputs.1: contributed capital must be nonnegative, got -0.25
    """
    if not capital >= 0:
        raise InputError(f'capital must be nonnegative, got {capital!r}', 'capital')
    for i, c in enumerate(inputs):
        if not c >= -ATOL:
            raise InputError(f'contributed capital must be nonnegative, got {c!r}', f'inputs.{i}')
    # rounding below ATOL counts as zero
    inputs = [max(0.0, float(c)) for c in inputs]
    denominator = capital + math.fsum(inputs)
    if denominator <= ATOL:
        return SurplusShares(1.0, tuple(0.0 for _ in inputs), degenerate=True)
    return SurplusShares(capital / denominator, tuple(c / denominator for c in inputs))


@dataclasses.dataclass(frozen=True)
class Verdict:
    """Acceptability of the deal for one party: `utility >= threshold`,
    kept together with the gap so near-boundary cases can be audited."""

    party: str
    utility: float
    threshold: float

    @property
    def gap(self) -> float:
        return self.utility - self.threshold

    @property
    def accepted(self) -> bool:
        return self.gap >= -ATOL


@dataclasses.dataclass(frozen=True)
class Flag:
    """A reported relation `lhs <= rhs` or `lhs == rhs` that does not
    decide acceptability: sufficient premium bounds, identities."""

    name: str
    lhs: float
    rhs: float
    relation: str = '<='

    @property
    def holds(self) -> bool:
        atol = ATOL * max(1.0, abs(self.lhs), abs(self.rhs))
        if self.relation == '==':
            return abs(self.lhs - self.rhs) <= atol
        return self.lhs <= self.rhs + atol


@dataclasses.dataclass(frozen=True)
class AlternativeSplit:
    """Premium inputs `E_{Q_r}[X_i 1_{S>R}] + E_{Q_0}[X_i 1_{S<=R}]` and the
    shares they imply. Advisory: retention and surplus are unchanged and no
    acceptability condition is claimed for it."""

    premia: tuple[float, ...]
    capital_inputs: tuple[float, ...]
    shares: SurplusShares
    verdicts: tuple[Verdict, ...]
    advisory: bool = True


@dataclasses.dataclass(frozen=True, eq=False)
class ModelReport:
    """Result of one model run.

    Per atom, money in equals money out:
    `sum(charged_premia) + capital + recovery + government_transfer
    == S + reinsurance_premium + distributed surplus`, where the
    distributed surplus is the insurer payoff plus each agent's payoff plus
    the premium the agent paid.
    """

    model: ModelId
    space: ProbSpace
    agents: tuple[str, ...]
    aggregate: RandomVar
    total_premium: float
    fair_premia: tuple[float, ...]
    charged_premia: tuple[float, ...]
    capital_inputs: tuple[float, ...]
    capital: float
    retention: Optional[RetentionSolution]
    shares: Optional[SurplusShares]
    events: Mapping[str, tuple[str, ...]]
    surplus: RandomVar
    payoffs: Mapping[str, RandomVar]
    recovery: RandomVar
    reinsurance_premium: float
    government_transfer: RandomVar
    verdicts: tuple[Verdict, ...]
    flags: tuple[Flag, ...] = ()
    figures: Mapping[str, float] = dataclasses.field(default_factory=dict)
    alternative: Optional[AlternativeSplit] = None
    warnings: tuple[str, ...] = ()

    @property
    def accepted(self) -> bool:
        return all(v.accepted for v in self.verdicts)

    @property
    def balance(self) -> RandomVar:
        """Sources minus uses, per atom; zero up to rounding."""
        distributed = self.payoffs[INSURER]
        for agent, p in zip(self.agents, self.charged_premia):
            distributed = distributed + self.payoffs[agent] + p
        sources = math.fsum(self.charged_premia) + self.capital + self.recovery + self.government_transfer
        return sources - (self.aggregate + self.reinsurance_premium + distributed)

    @property
    def balance_residual(self) -> float:
        return float(np.max(np.abs(self.balance.values)))


def _agent_verdicts(
    portfolio: Portfolio, payoffs: Sequence[RandomVar]
) -> list[Verdict]:
    space = portfolio.space
    return [
        Verdict(agent, choquet_utility(space, f, y), choquet_utility(space, f, -x))
        for agent, f, x, y in zip(portfolio.agents, portfolio.agent_utilities, portfolio.claims, payoffs)
    ]


def _zero(portfolio: Portfolio) -> RandomVar:
    return RandomVar.constant(0.0, len(portfolio.space))


def _premium_caps(portfolio: Portfolio) -> list[Flag]:
    caps = [-choquet_utility(portfolio.space, f, -x) for f, x in zip(portfolio.agent_utilities, portfolio.claims)]
    assert portfolio.premia is not None
    return [Flag(f'premium_cap.{a}', p, c) for a, p, c in zip(portfolio.agents, portfolio.premia, caps)]


def _events(space: ProbSpace, s: RandomVar, premium: float, capital: float) -> dict[str, tuple[str, ...]]:
    above = s.values > premium + capital + ATOL
    below = s.values < premium - ATOL
    between = ~above & ~below
    return {
        name: tuple(atom for atom, hit in zip(space.atoms, mask) if hit)
        for name, mask in (('A', above), ('B', between), ('C', below))
    }


def model1_run(portfolio: Portfolio) -> ModelReport:
    """Fair premia plus capital, no reinsurance.

    Events: `A = {S > π_0 + k0}` (the shortfall is covered from outside),
    `B = {π_0 <= S <= π_0 + k0}` (capital is used), `C = {S < π_0}`. The
    insurer accepts when `u_0((π_0 + k0 - S)^+) >= k0`. Charged premia in the
    portfolio are ignored.
    """
    validate_portfolio(portfolio, 1)
    space, s, k0 = portfolio.space, portfolio.aggregate, portfolio.capital
    premia = fair_premia(space, portfolio.insurer, portfolio.claims)
    pi0 = total_premium(space, portfolio.insurer, portfolio.claims)
    payoff = (pi0 + k0 - s).excess(0.0)
    transfer = (s - pi0 - k0).excess(0.0)
    agent_payoffs = [RandomVar.constant(-p, len(space)) for p in premia]
    insurer_utility = choquet_utility(space, portfolio.insurer, payoff)
    logger.debug('Model 1: π0=%.12g, u0(payoff)=%.12g', pi0, insurer_utility)
    return ModelReport(
        model=1,
        space=space,
        agents=portfolio.agents,
        aggregate=s,
        total_premium=pi0,
        fair_premia=premia.premia,
        charged_premia=premia.premia,
        capital_inputs=tuple(0.0 for _ in premia),
        capital=k0,
        retention=None,
        shares=None,
        events=_events(space, s, pi0, k0),
        surplus=payoff,
        payoffs={INSURER: payoff, **dict(zip(portfolio.agents, agent_payoffs))},
        recovery=_zero(portfolio),
        reinsurance_premium=0.0,
        government_transfer=transfer,
        verdicts=(Verdict(INSURER, insurer_utility, k0), *_agent_verdicts(portfolio, agent_payoffs)),
        flags=(Flag('break_even', choquet_utility(space, portfolio.insurer, pi0 - s), 0.0, '=='),),
        figures={'pi_0': pi0, 'insurer_utility': insurer_utility},
    )


def model2_run(portfolio: Portfolio) -> ModelReport:
    """Fair premia, reinsurance priced by the insurer's own utility.

    `R` solves `E_{Q_0}[(R - S)^+] = k0`; the insurer keeps `R - S ∧ R` and
    its utility is exactly `k0`, so there is nothing to share with the
    agents. Charged premia in the portfolio are ignored.
    """
    validate_portfolio(portfolio, 2)
    space, s, k0 = portfolio.space, portfolio.aggregate, portfolio.capital
    premia = fair_premia(space, portfolio.insurer, portfolio.claims)
    pi0 = premia.total
    q0 = worst_case_measure(space, portfolio.insurer, s)
    solution = solve_retention(RetentionProblem(space, s, q0.measure, k0))
    surplus = solution.R - s.minimum(solution.R)
    agent_payoffs = [RandomVar.constant(-p, len(space)) for p in premia]
    insurer_utility = choquet_utility(space, portfolio.insurer, surplus)
    return ModelReport(
        model=2,
        space=space,
        agents=portfolio.agents,
        aggregate=s,
        total_premium=pi0,
        fair_premia=premia.premia,
        charged_premia=premia.premia,
        capital_inputs=tuple(0.0 for _ in premia),
        capital=k0,
        retention=solution,
        shares=SurplusShares(1.0, tuple(0.0 for _ in premia)),
        events={},
        surplus=surplus,
        payoffs={INSURER: surplus, **dict(zip(portfolio.agents, agent_payoffs))},
        recovery=s.excess(solution.R),
        reinsurance_premium=solution.rho_R,
        government_transfer=_zero(portfolio),
        verdicts=(Verdict(INSURER, insurer_utility, k0), *_agent_verdicts(portfolio, agent_payoffs)),
        flags=(Flag('insurer_equality', insurer_utility, k0, '=='),),
        figures={'pi_0': pi0, 'insurer_utility': insurer_utility},
    )


def _sharing_warnings(shares: SurplusShares) -> list[str]:
    if not shares.degenerate:
        return []
    message = 'capital and capital inputs are all zero: insurer keeps the whole surplus'
    logger.warning(message)
    return [message]


def model3_run(portfolio: Portfolio) -> ModelReport:
    """Charged premia above fair premia; the excess is capital.

    `R` solves `E_{Q_0}[(R - S)^+] = k0 + sum_i (p_i - π_i)` and the surplus
    `(R - S)^+` is shared in proportion to `k0` and `p_i - π_i`.
    """
    validate_portfolio(portfolio, 3)
    assert portfolio.premia is not None
    space, s, k0, f0 = portfolio.space, portfolio.aggregate, portfolio.capital, portfolio.insurer
    premia = fair_premia(space, f0, portfolio.claims)
    inputs = tuple(p - pi for p, pi in zip(portfolio.premia, premia))
    q0 = worst_case_measure(space, f0, s)
    solution = solve_retention(RetentionProblem(space, s, q0.measure, k0 + math.fsum(inputs)))
    surplus = s.shortfall(solution.R)
    shares = compute_shares(k0, inputs)
    insurer_payoff = shares.insurer * surplus
    agent_payoffs = [lam * surplus - p for lam, p in zip(shares.agents, portfolio.premia)]
    insurer_utility = choquet_utility(space, f0, insurer_payoff)
    bounds = upper_premia(space, f0, portfolio.claims)
    logger.debug('Model 3: R=%.12g, shares=%s', solution.R, shares)
    return ModelReport(
        model=3,
        space=space,
        agents=portfolio.agents,
        aggregate=s,
        total_premium=premia.total,
        fair_premia=premia.premia,
        charged_premia=portfolio.premia,
        capital_inputs=inputs,
        capital=k0,
        retention=solution,
        shares=shares,
        events={},
        surplus=surplus,
        payoffs={INSURER: insurer_payoff, **dict(zip(portfolio.agents, agent_payoffs))},
        recovery=s.excess(solution.R),
        reinsurance_premium=solution.rho_R,
        government_transfer=_zero(portfolio),
        verdicts=(Verdict(INSURER, insurer_utility, k0), *_agent_verdicts(portfolio, agent_payoffs)),
        flags=(
            Flag(
                'insurer_equality',
                choquet_utility(space, f0, solution.R - s.minimum(solution.R)),
                solution.R - solution.pi_R,
                '==',
            ),
            *(Flag(f'premium_bound.{a}', p, b) for a, p, b in zip(portfolio.agents, portfolio.premia, bounds)),
            *_premium_caps(portfolio),
        ),
        figures={'pi_0': premia.total, 'insurer_utility': insurer_utility, 'target': solution.R - solution.pi_R},
        warnings=tuple(_sharing_warnings(shares)),
    )


@dataclasses.dataclass(frozen=True)
class _Reinsured:
    q0: Measure
    qr: Measure
    premia_r: tuple[float, ...]
    inputs: tuple[float, ...]
    solution: RetentionSolution
    shares: SurplusShares
    surplus: RandomVar


def _reinsured(portfolio: Portfolio) -> _Reinsured:
    """Retention, shares and surplus of Model 4."""
    assert portfolio.premia is not None and portfolio.reinsurer is not None
    space, s, k0 = portfolio.space, portfolio.aggregate, portfolio.capital
    qr = worst_case_measure(space, portfolio.reinsurer, s)
    premia_r = tuple(qr.expectation(space, x) for x in portfolio.claims)
    inputs = tuple(p - pi for p, pi in zip(portfolio.premia, premia_r))
    solution = solve_retention(RetentionProblem(space, s, qr.measure, k0 + math.fsum(inputs)))
    surplus = (k0 + math.fsum(portfolio.premia) - solution.rho_R - s.minimum(solution.R)).excess(0.0)
    return _Reinsured(
        q0=worst_case_measure(space, portfolio.insurer, s).measure,
        qr=qr.measure,
        premia_r=premia_r,
        inputs=inputs,
        solution=solution,
        shares=compute_shares(k0, inputs),
        surplus=surplus,
    )


def _alternative_split(
    portfolio: Portfolio, outcome: _Reinsured
) -> tuple[Optional[AlternativeSplit], list[str]]:
    assert portfolio.premia is not None
    space, s, R = portfolio.space, portfolio.aggregate, outcome.solution.R
    ceded = s.values > R
    premia = tuple(
        expectation(space, x.indicator(ceded), outcome.qr) + expectation(space, x.indicator(~ceded), outcome.q0)
        for x in portfolio.claims
    )
    inputs = tuple(p - pi for p, pi in zip(portfolio.premia, premia))
    if min(inputs) < -ATOL:
        message = f'alternative premium split suppressed: negative capital inputs {inputs}'
        logger.warning(message)
        return None, [message]
    shares = compute_shares(portfolio.capital, inputs)
    payoffs = [lam * outcome.surplus - p for lam, p in zip(shares.agents, portfolio.premia)]
    verdicts = (
        Verdict(INSURER, choquet_utility(space, portfolio.insurer, shares.insurer * outcome.surplus), portfolio.capital),
        *_agent_verdicts(portfolio, payoffs),
    )
    return AlternativeSplit(premia, inputs, shares, verdicts), []


def model4_run(portfolio: Portfolio) -> ModelReport:
    """Charged premia, reinsurance priced by the reinsurer's utility.

    Fair premia become `π^r_i = E_{Q_r}[X_i]`; `R` solves
    `E_{Q_r}[(R - S)^+] = k0 + sum_i (p_i - π^r_i)` and the surplus
    `k0 + sum_i p_i - ρ^R - S ∧ R` is shared by capital contributed.
    """
    validate_portfolio(portfolio, 4)
    assert portfolio.premia is not None and portfolio.reinsurer is not None
    space, s, k0, f0 = portfolio.space, portfolio.aggregate, portfolio.capital, portfolio.insurer
    outcome = _reinsured(portfolio)
    solution, shares, surplus = outcome.solution, outcome.shares, outcome.surplus
    insurer_payoff = shares.insurer * surplus
    agent_payoffs = [lam * surplus - p for lam, p in zip(shares.agents, portfolio.premia)]
    insurer_utility = choquet_utility(space, f0, insurer_payoff)
    pi0 = total_premium(space, f0, portfolio.claims)
    expected_r = expectation(space, s, outcome.qr)
    retained_q0 = expectation(space, s.minimum(solution.R), outcome.q0)
    required = solution.rho_R + retained_q0
    bounds = upper_premia(space, portfolio.reinsurer, portfolio.claims)
    alternative, alt_warnings = _alternative_split(portfolio, outcome)
    figures = {
        'pi_0': pi0,
        'reinsurer_expected_claims': expected_r,
        'insurer_utility': insurer_utility,
        'extra_return': insurer_utility - k0,
        'required_premium': required,
        'target': solution.R - solution.pi_R,
    }
    if alternative is not None:
        figures['alternative_premium_total'] = math.fsum(alternative.premia)
    logger.debug('Model 4: R=%.12g, ρ=%.12g, shares=%s', solution.R, solution.rho_R, shares)
    return ModelReport(
        model=4,
        space=space,
        agents=portfolio.agents,
        aggregate=s,
        total_premium=math.fsum(outcome.premia_r),
        fair_premia=outcome.premia_r,
        charged_premia=portfolio.premia,
        capital_inputs=outcome.inputs,
        capital=k0,
        retention=solution,
        shares=shares,
        events={},
        surplus=surplus,
        payoffs={INSURER: insurer_payoff, **dict(zip(portfolio.agents, agent_payoffs))},
        recovery=s.excess(solution.R),
        reinsurance_premium=solution.rho_R,
        government_transfer=_zero(portfolio),
        verdicts=(Verdict(INSURER, insurer_utility, k0), *_agent_verdicts(portfolio, agent_payoffs)),
        flags=(
            Flag(
                'insurer_utility_identity',
                insurer_utility,
                shares.insurer * expectation(space, s.shortfall(solution.R), outcome.q0),
                '==',
            ),
            Flag('required_premium', required, expected_r),
            Flag(
                'insurer_indifference',
                choquet_utility(space, f0, k0 + retained_q0 - s.minimum(solution.R)),
                k0,
                '==',
            ),
            *(Flag(f'premium_bound.{a}', p, b) for a, p, b in zip(portfolio.agents, portfolio.premia, bounds)),
            *_premium_caps(portfolio),
        ),
        figures=figures,
        alternative=alternative,
        warnings=(*_sharing_warnings(shares), *alt_warnings),
    )


MODEL_RUNNERS: dict[int, Callable[[Portfolio], ModelReport]] = {
    1: model1_run,
    2: model2_run,
    3: model3_run,
    4: model4_run,
}


def run_model(portfolio: Portfolio, model: ModelId) -> ModelReport:
    if model not in MODEL_RUNNERS:
        raise InputError(f'unknown model {model!r}, expected one of {MODEL_IDS}', 'model')
    return MODEL_RUNNERS[model](portfolio)


@dataclasses.dataclass(frozen=True)
class SweepRow:
    """Model 4 at one capital level.

    `identity_gap` measures `u_0(λ0 S_plus) = λ0 E_{Q_0}[(R - S)^+]`;
    `extra_return_identity_gap` measures
    `u_0(λ0 S_plus) - k0 = k0 (E_{Q_r}[S ∧ R] - E_{Q_0}[S ∧ R]) / (k0 + sum_j p_j - E_{Q_r}[S])`.
    """

    k0: float
    R: float
    insurer_utility: float
    extra_return: float
    return_ratio: float
    lambda_0: float
    identity_gap: float
    extra_return_identity_gap: float


def check_grid(grid: Sequence[Real]) -> tuple[float, ...]:
    """A capital grid must be non-empty, positive and strictly ascending.

    >>> check_grid([0.5, 1, 2])
    (0.5, 1.0, 2.0)
    >>> check_grid([1, -1])
    Traceback (most recent call last):
    ...
    InputError: grid: grid entries must be positive, got -1.0
    """
    values = tuple(float(k) for k in grid)
    if not values:
        raise InputError('grid must contain at least one capital level', 'grid')
    for k in values:
        if not math.isfinite(k) or k <= 0:
            raise InputError(f'grid entries must be positive, got {k!r}', 'grid')
    if any(b <= a for a, b in zip(values[:-1], values[1:])):
        raise InputError(f'grid must be strictly ascending: {values}', 'grid')
    return values


def sweep_row(portfolio: Portfolio, k0: Real) -> SweepRow:
    """One row of `capital_sweep`; the portfolio is assumed valid for
    Model 4."""
    portfolio = portfolio.with_capital(k0)
    assert portfolio.premia is not None
    space, s, k0 = portfolio.space, portfolio.aggregate, portfolio.capital
    outcome = _reinsured(portfolio)
    R, lam0 = outcome.solution.R, outcome.shares.insurer
    utility = choquet_utility(space, portfolio.insurer, lam0 * outcome.surplus)
    extra = utility - k0
    denominator = k0 + math.fsum(portfolio.premia) - expectation(space, s, outcome.qr)
    predicted_extra = k0 * (
        expectation(space, s.minimum(R), outcome.qr) - expectation(space, s.minimum(R), outcome.q0)
    ) / denominator
    return SweepRow(
        k0=k0,
        R=R,
        insurer_utility=utility,
        extra_return=extra,
        return_ratio=extra / k0,
        lambda_0=lam0,
        identity_gap=abs(utility - lam0 * expectation(space, s.shortfall(R), outcome.q0)),
        extra_return_identity_gap=abs(extra - predicted_extra),
    )


@dataclasses.dataclass(frozen=True)
class CapitalSweep:
    """Model 4 across capital levels: retention and insurer utility are
    expected to be non-decreasing in `k0`."""

    rows: tuple[SweepRow, ...]

    @property
    def monotone_retention(self) -> bool:
        return all(b.R >= a.R - ATOL for a, b in zip(self.rows[:-1], self.rows[1:]))

    @property
    def monotone_utility(self) -> bool:
        return all(
            b.insurer_utility >= a.insurer_utility - ATOL * max(1.0, abs(a.insurer_utility))
            for a, b in zip(self.rows[:-1], self.rows[1:])
        )

    @property
    def monotone(self) -> bool:
        return self.monotone_retention and self.monotone_utility

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([dataclasses.asdict(row) for row in self.rows], columns=[f.name for f in dataclasses.fields(SweepRow)])


def capital_sweep(portfolio: Portfolio, grid: Sequence[Real]) -> CapitalSweep:
    """Run Model 4 for each capital level in `grid`.

    >>> from surplus_sharing.coherent import PowerDistortion
    >>> from surplus_sharing.prob_core import ProbSpace, RandomVar
    >>> portfolio = Portfolio(
    ...     space=ProbSpace.uniform(['w1', 'w2', 'w3', 'w4']),
    ...     agents=('agent1', 'agent2'),
    ...     claims=(RandomVar([0, 1, 1, 2]), RandomVar([0, 0, 1, 2])),
    ...     capital=1,
    ...     insurer=PowerDistortion(2),
    ...     reinsurer=PowerDistortion(3),
    ...     agent_utilities=(PowerDistortion(4), PowerDistortion(4)),
    ...     premia=(100 / 64, 93 / 64),
    ... )
    >>> sweep = capital_sweep(portfolio, [0.5, 1, 2, 4])
    >>> [round(row.extra_return * 64, 9) for row in sweep.rows[1:]]
    [29.0, 29.0, 29.0]
    >>> sweep.monotone
    True
    """
    values = check_grid(grid)
    validate_portfolio(portfolio.with_capital(values[0]), 4)
    return CapitalSweep(tuple(sweep_row(portfolio, k0) for k0 in values))


if __name__ == '__main__':
    import doctest

    doctest.testmod()
