from __future__ import annotations

import numpy as np
import pytest

from surplus_sharing.coherent import PowerDistortion
from surplus_sharing.prob_core import ProbSpace, RandomVar, expectation
from surplus_sharing.retention import RetentionProblem, cdf, phi_eval, solve_retention
from surplus_sharing.utils import InputError


@pytest.fixture(scope='module')
def q0_problem(space, s, f0) -> RetentionProblem:
    return RetentionProblem.under(space, f0, s, 1)


@pytest.fixture(scope='module')
def qr_problem(space, s, fr) -> RetentionProblem:
    return RetentionProblem.under(space, fr, s, 1)


def test_phi_eval_w1(q0_problem):
    assert phi_eval(q0_problem, 2) == pytest.approx(5 / 16, abs=1e-12)
    assert phi_eval(q0_problem, 0) == 0
    assert phi_eval(q0_problem, 0.5) == pytest.approx(0.5 / 16, abs=1e-12)
    assert phi_eval(q0_problem, 6) == pytest.approx(6 - 41 / 16, abs=1e-12)


def test_phi_eval_matches_direct_sum(q0_problem):
    for x in np.linspace(0, 7, 29):
        direct = expectation(q0_problem.space, q0_problem.s.shortfall(x), q0_problem.q)
        assert phi_eval(q0_problem, x) == pytest.approx(direct, abs=1e-12)


def test_phi_eval_constant_claims():
    space = ProbSpace.uniform('ab')
    problem = RetentionProblem(space, RandomVar([2, 2]), space.measure, 0)
    for x in (0, 1, 2, 3.5):
        assert phi_eval(problem, x) == pytest.approx(max(0, x - 2))


def test_phi_eval_rejects_negative(q0_problem):
    with pytest.raises(InputError):
        phi_eval(q0_problem, -0.1)


def test_solve_retention_w1_q0(q0_problem):
    solution = solve_retention(q0_problem)
    assert solution.R == pytest.approx(29 / 9, abs=1e-12)
    assert solution.pi_R == pytest.approx(20 / 9, abs=1e-12)
    assert solution.rho_R == pytest.approx(49 / 144, abs=1e-12)
    assert solution.segment == 2
    assert solution.exact and not solution.beyond_max


def test_solve_retention_w1_qr(qr_problem):
    solution = solve_retention(qr_problem)
    assert solution.R == pytest.approx(257 / 64, abs=1e-12)
    assert solution.rho_R == 0
    assert solution.beyond_max


def test_solve_retention_zero_target(space, s, f0):
    problem = RetentionProblem.under(space, f0, s, 0)
    assert solve_retention(problem).R == 0


def test_solve_retention_zero_target_flat_start():
    space = ProbSpace.uniform('abc')
    problem = RetentionProblem(space, RandomVar([1.5, 3, 4]), space.measure, 0)
    assert solve_retention(problem).R == 1.5


def test_solve_retention_ignores_massless_values():
    space = ProbSpace.uniform('abc')
    q = space.point_mass('b')
    problem = RetentionProblem(space, RandomVar([0, 3, 4]), q, 0)
    assert solve_retention(problem).R == 3
    assert solve_retention(problem.with_target(1)).R == 4


@pytest.mark.parametrize('target', [0.0, 0.01, 0.0625, 0.3, 1.0, 1.4375, 2.0, 10.0])
def test_solve_retention_round_trip(q0_problem, target):
    problem = q0_problem.with_target(target)
    solution = solve_retention(problem)
    assert phi_eval(problem, solution.R) == pytest.approx(target, abs=1e-12)
    assert solution.R - solution.pi_R == pytest.approx(target, abs=1e-9)
    assert solution.pi_R + solution.rho_R == pytest.approx(
        expectation(problem.space, problem.s, problem.q), abs=1e-9
    )


def test_solve_retention_monotone_in_target(q0_problem):
    levels = [solve_retention(q0_problem.with_target(t)).R for t in np.linspace(0, 5, 51)]
    assert all(b >= a for a, b in zip(levels[:-1], levels[1:]))


def test_phi_shape(qr_problem):
    grid = np.linspace(0, 50, 501)
    values = np.array([phi_eval(qr_problem, x) for x in grid])
    assert values[0] == 0
    assert np.all(np.diff(values) >= -1e-12)
    assert np.all(np.diff(values, 2) >= -1e-12)
    assert values[-1] / grid[-1] == pytest.approx(1, abs=0.1)


@pytest.mark.parametrize('x', [0.5, 1.5, 2.5, 3.0])
def test_phi_slope_is_cdf(q0_problem, x):
    h = 1e-4
    slope = (phi_eval(q0_problem, x + h) - phi_eval(q0_problem, x)) / h
    assert slope == pytest.approx(cdf(q0_problem, x), abs=1e-9)


def test_problem_rejects_bad_input(space, s):
    with pytest.raises(InputError):
        RetentionProblem(space, s, space.measure, -1)
    with pytest.raises(InputError):
        RetentionProblem(space, -s, space.measure, 1)


if __name__ == '__main__':
    pytest.main([__file__])
