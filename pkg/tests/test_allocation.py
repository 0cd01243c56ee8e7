from __future__ import annotations

import numpy as np
import pytest

from surplus_sharing.allocation import (
    fair_premia,
    marginal_premium,
    total_premium,
    upper_premia,
    worst_case_measure,
)
from surplus_sharing.coherent import PowerDistortion, choquet_utility
from surplus_sharing.prob_core import ProbSpace, RandomVar
from surplus_sharing.utils import InputError


def test_worst_case_measure_w1(space, s, f0, fr):
    assert worst_case_measure(space, f0, s).measure.allclose(np.array([1, 3, 5, 7]) / 16)
    assert worst_case_measure(space, fr, s).measure.allclose(np.array([1, 7, 19, 37]) / 64)


def test_worst_case_measure_constant_is_p():
    space = ProbSpace(('a', 'b', 'c'), (0.2, 0.3, 0.5))
    q = worst_case_measure(space, PowerDistortion(3), RandomVar.constant(2, 3))
    assert q.measure.allclose(space.probs)


@pytest.mark.parametrize('a', [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0])
def test_worst_case_measure_maximizes_comonotone_functions(space, s, f0, fr, a):
    for f in (f0, fr):
        q = worst_case_measure(space, f, s)
        for y in (s, s.minimum(a), s.excess(a)):
            assert q.expectation(space, y) == pytest.approx(-choquet_utility(space, f, -y), abs=1e-9)


def test_total_premium_w1(space, claims, f0, fr):
    assert total_premium(space, f0, claims) == pytest.approx(41 / 16, abs=1e-12)
    assert total_premium(space, fr, claims) == pytest.approx(193 / 64, abs=1e-12)


def test_total_premium_constant_claim(space, f0):
    assert total_premium(space, f0, [RandomVar.constant(3, 4)]) == pytest.approx(3)


def test_fair_premia_w1(space, claims, f0, fr):
    premia = fair_premia(space, f0, claims)
    assert list(premia) == pytest.approx([22 / 16, 19 / 16], abs=1e-12)
    assert premia.total == pytest.approx(total_premium(space, f0, claims), abs=1e-12)
    assert list(fair_premia(space, fr, claims)) == pytest.approx([100 / 64, 93 / 64], abs=1e-12)


def test_fair_premia_single_agent(space, s, f0):
    assert fair_premia(space, f0, [s])[0] == pytest.approx(total_premium(space, f0, [s]))


def test_fair_premia_within_claim_range(space, claims, f0):
    for p, x in zip(fair_premia(space, f0, claims), claims):
        assert 0 <= p <= x.max()


def test_negative_claims_rejected(space, f0):
    with pytest.raises(InputError):
        fair_premia(space, f0, [RandomVar([0, -1, 0, 0])])
    with pytest.raises(InputError):
        total_premium(space, f0, [])


def test_marginal_premium_w1(space, claims, f0):
    assert marginal_premium(space, f0, claims, 0, 1e-6) == pytest.approx(22 / 16, abs=1e-6)
    assert marginal_premium(space, f0, claims, 1, 1e-6) == pytest.approx(19 / 16, abs=1e-6)


def test_marginal_premium_comonotone_exact(space, claims, f0):
    # both claims are non-decreasing in S, so the ordering never changes
    for eps in (0.5, 1e-2, 1e-4):
        assert marginal_premium(space, f0, claims, 0, eps) == pytest.approx(22 / 16, abs=1e-9)


def test_marginal_premium_constant_claim(space, claims, f0):
    claims = [*claims, RandomVar.constant(0.7, 4)]
    assert marginal_premium(space, f0, claims, 2, 0.3) == pytest.approx(0.7, abs=1e-12)


@pytest.mark.parametrize('eps', [0, -1e-3])
def test_marginal_premium_rejects_eps(space, claims, f0, eps):
    with pytest.raises(InputError):
        marginal_premium(space, f0, claims, 0, eps)


def test_positive_homogeneity(space, claims, f0):
    scaled = [3.5 * x for x in claims]
    assert list(fair_premia(space, f0, scaled)) == pytest.approx(
        [3.5 * p for p in fair_premia(space, f0, claims)], abs=1e-12
    )


def test_upper_premia_bounds(space, claims, f0, fr, f4):
    fair = fair_premia(space, f0, claims)
    upper = upper_premia(space, f0, claims)
    # both claims are comonotonic with S, so nothing is gained by pricing alone
    assert list(upper) == pytest.approx([22 / 16, 19 / 16], abs=1e-12)
    assert all(u >= p - 1e-12 for u, p in zip(upper, fair))
    assert upper.total >= total_premium(space, f0, claims) - 1e-12
    # no undercut: -π_i >= u_0(-X_i) >= u_i(-X_i)
    for p, x in zip(fair, claims):
        assert -p >= choquet_utility(space, f0, -x) - 1e-12
        assert choquet_utility(space, f0, -x) >= choquet_utility(space, f4, -x) - 1e-12


if __name__ == '__main__':
    pytest.main([__file__])
