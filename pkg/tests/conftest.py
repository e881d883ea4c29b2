import numpy as np
import pytest

from xwalk import kernels


@pytest.fixture(params=kernels.available())
def backend(request, monkeypatch):
    """Run the test once per kernel backend, patched in as the default."""
    monkeypatch.setattr(kernels, "active", kernels.load(request.param))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
