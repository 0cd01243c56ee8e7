from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from surplus_sharing.coherent import PowerDistortion, choquet_utility
from surplus_sharing.models import MODEL_IDS, Portfolio, model1_run, run_model, validate_portfolio
from surplus_sharing.oracle import (
    check_report,
    core_extreme_points,
    core_gap,
    oracle_retention,
    oracle_utility,
    random_instance,
    verify_all,
    verify_instance,
)
from surplus_sharing.prob_core import ProbSpace, RandomVar
from surplus_sharing.utils import GuardError, InputError


def test_core_extreme_points_w1(space, f0):
    points = core_extreme_points(space, f0)
    assert len(points) == 24
    identity = points.measures[points.permutations.index((0, 1, 2, 3))]
    assert identity.allclose(np.array([1, 3, 5, 7]) / 16)
    for q in points.measures:
        assert q.weights.sum() == pytest.approx(1)
        assert core_gap(space, f0, q) >= -1e-12


@pytest.mark.parametrize('seed', range(20))
def test_core_extreme_points_in_core_for_every_utility(seed):
    instance = random_instance(seed, (5, 3), tie_frequency=0.2)
    space = instance.space
    for f in (instance.insurer, instance.reinsurer, *instance.agent_utilities):
        points = core_extreme_points(space, f)
        assert len(points) == 120
        for q in points.measures:
            assert core_gap(space, f, q) >= -1e-10


def test_core_gap_detects_outside_measures(space, f0):
    assert core_gap(space, f0, space.measure) == pytest.approx(0, abs=1e-12)
    assert core_gap(space, f0, space.point_mass('w1')) < 0


@pytest.mark.parametrize(
    'values',
    [
        [0, -1, -2, -4],
        [0, 1, 2, 4],
        [1, 1, -3, 0.5],
        [2, 2, 2, 2],
    ],
)
def test_oracle_utility_matches_choquet(space, f0, fr, values):
    x = RandomVar(values)
    for f in (f0, fr):
        assert oracle_utility(space, f, x) == pytest.approx(choquet_utility(space, f, x), abs=1e-12)


def test_oracle_retention_w1(space, s, f0, fr):
    from surplus_sharing.allocation import worst_case_measure

    q0 = worst_case_measure(space, f0, s).measure
    qr = worst_case_measure(space, fr, s).measure
    assert oracle_retention(space, q0, s, 1) == pytest.approx(29 / 9, abs=1e-9)
    assert oracle_retention(space, qr, s, 1) == pytest.approx(257 / 64, abs=1e-9)
    assert oracle_retention(space, q0, s, 0) == pytest.approx(0, abs=1e-9)


def test_oracle_retention_rejects_negative_target(space, s):
    with pytest.raises(InputError):
        oracle_retention(space, space.measure, s, -1)


def test_guards():
    big = ProbSpace.uniform([f'w{j}' for j in range(9)])
    with pytest.raises(GuardError):
        core_extreme_points(big, PowerDistortion(2))
    seven = ProbSpace.uniform([f'w{j}' for j in range(7)])
    with pytest.raises(GuardError):
        core_gap(seven, PowerDistortion(2), seven.measure)


def test_random_instance_is_deterministic():
    a, b = random_instance(11, (5, 3)), random_instance(11, (5, 3))
    assert a.space.probs.tolist() == b.space.probs.tolist()
    assert [x.values.tolist() for x in a.claims] == [x.values.tolist() for x in b.claims]
    assert a.insurer == b.insurer and a.reinsurer == b.reinsurer
    assert a.premia == b.premia and a.capital == b.capital
    assert random_instance(12, (5, 3)).premia != a.premia


@pytest.mark.parametrize('seed', range(100))
def test_random_instance_is_valid_for_every_model(seed):
    portfolio = random_instance(seed).portfolio
    assert np.all(portfolio.space.probs > 0)
    assert 0.1 <= portfolio.capital <= 5
    for model in MODEL_IDS:
        validate_portfolio(portfolio, model)


def test_random_instance_full_ties():
    instance = random_instance(5, (6, 2), tie_frequency=1)
    assert instance.portfolio.aggregate.is_constant()


@pytest.mark.parametrize(
    'dims, tie_frequency, error',
    [
        ((9, 2), 0.0, GuardError),
        ((0, 2), 0.0, GuardError),
        ((4, 6), 0.0, GuardError),
        ((4, 0), 0.0, GuardError),
        ((4, 2), 1.5, InputError),
    ],
)
def test_random_instance_guards(dims, tie_frequency, error):
    with pytest.raises(error):
        random_instance(0, dims, tie_frequency)


@pytest.mark.parametrize('seed', range(25))
def test_verify_instance(seed):
    result = verify_instance(seed)
    assert result.passed, result
    assert result.core_gap is not None


@pytest.mark.parametrize('seed', range(10))
def test_verify_instance_with_ties(seed):
    assert verify_instance(seed, n_atoms=5, n_agents=3, tie_frequency=0.5).passed


def test_verify_instance_skips_core_gap_on_larger_spaces():
    result = verify_instance(1, n_atoms=7, n_agents=2)
    assert result.core_gap is None
    assert result.passed


def test_verify_all():
    results = verify_all(range(3))
    assert [r.seed for r in results] == [0, 1, 2]


def test_check_report_w1(w1_model4):
    for model in MODEL_IDS:
        assert check_report(w1_model4, run_model(w1_model4, model)) == ()


def test_check_report_flags_mismatch(w1):
    report = model1_run(w1)
    wrong = dataclasses.replace(report, total_premium=report.total_premium + 0.5)
    (message,) = check_report(w1, wrong)
    assert 'total premium' in message


def test_check_report_skips_large_spaces(f0):
    space = ProbSpace.uniform([f'w{j}' for j in range(9)])
    portfolio = Portfolio(
        space=space,
        agents=('a',),
        claims=(RandomVar(np.arange(9.0)),),
        capital=1,
        insurer=f0,
        agent_utilities=(f0,),
    )
    assert check_report(portfolio, model1_run(portfolio)) == ()


if __name__ == '__main__':
    pytest.main([__file__])
