"""Functions exposed as tasks by `RunQueue`.

Arguments and return values are picklable, so the same call can be made
in-process or through a queue.
"""
from __future__ import annotations

from surplus_sharing.models import ModelReport, Portfolio, SweepRow
from surplus_sharing.models import run_model as _run_model
from surplus_sharing.models import sweep_row
from surplus_sharing.oracle import VerificationResult
from surplus_sharing.oracle import verify_instance as _verify_instance
from surplus_sharing.types import ModelId, Real

__all__ = ['run_model', 'sweep_point', 'verify_instance']


def run_model(portfolio: Portfolio, model: ModelId) -> ModelReport:
    return _run_model(portfolio, model)


def sweep_point(portfolio: Portfolio, k0: Real) -> SweepRow:
    return sweep_row(portfolio, k0)


def verify_instance(
    seed: int, n_atoms: int = 4, n_agents: int = 2, tie_frequency: float = 0.0
) -> VerificationResult:
    return _verify_instance(seed, n_atoms, n_agents, tie_frequency)
