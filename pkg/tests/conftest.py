from __future__ import annotations

import pathlib

import pytest

from surplus_sharing.coherent import PowerDistortion
from surplus_sharing.models import Portfolio
from surplus_sharing.prob_core import ProbSpace, RandomVar

FIXTURES = pathlib.Path(__file__).with_name('fixtures')


@pytest.fixture(scope='session')
def fixtures() -> pathlib.Path:
    return FIXTURES


@pytest.fixture(scope='session')
def space() -> ProbSpace:
    return ProbSpace.uniform(['w1', 'w2', 'w3', 'w4'])


@pytest.fixture(scope='session')
def claims() -> tuple[RandomVar, RandomVar]:
    return RandomVar([0, 1, 1, 2]), RandomVar([0, 0, 1, 2])


@pytest.fixture(scope='session')
def s(claims) -> RandomVar:
    return RandomVar.total(claims)


@pytest.fixture(scope='session')
def f0() -> PowerDistortion:
    return PowerDistortion(2)


@pytest.fixture(scope='session')
def fr() -> PowerDistortion:
    return PowerDistortion(3)


@pytest.fixture(scope='session')
def f4() -> PowerDistortion:
    return PowerDistortion(4)


@pytest.fixture(scope='session')
def w1(space, claims, f0, fr, f4) -> Portfolio:
    """Two agents on four equally likely states, capital 1, no premia."""
    return Portfolio(
        space=space,
        agents=('agent1', 'agent2'),
        claims=claims,
        capital=1,
        insurer=f0,
        agent_utilities=(f4, f4),
        reinsurer=fr,
    )


@pytest.fixture(scope='session')
def w1_model4(w1) -> Portfolio:
    """W1 with premia equal to the reinsurer's fair premia."""
    return w1.with_premia((100 / 64, 93 / 64))
