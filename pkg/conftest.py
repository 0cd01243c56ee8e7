"""Doctest wiring: print numpy scalars as plain numbers (numpy<2 style)."""
import numpy as np
import pytest


@pytest.fixture(autouse=True)
def _numpy_legacy_repr(request):
    if not isinstance(request.node, pytest.DoctestItem):
        yield
        return
    old = np.get_printoptions()
    np.set_printoptions(legacy='1.25')
    yield
    np.set_printoptions(**old)
