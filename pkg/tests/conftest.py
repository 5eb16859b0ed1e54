import numpy as np
import pytest

from rotmhd import (Grid, SpectralField, StateVector, dealias, forward_transform,
                    project_leray)
from rotmhd.spectral import fftn, state_h0s_norm


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def grid16():
    return Grid(16, 16)


@pytest.fixture
def grid8():
    return Grid(8, 8)


def random_field(grid, rng, dealiased=True, divfree=False, scalar=False):
    samples = rng.normal(size=(3,) + grid.shape)
    if scalar:
        samples[1:] = 0.0
    f = SpectralField(grid, fftn(samples.astype(complex)))
    if divfree:
        f = project_leray(f)
    if dealiased:
        f = dealias(f)
    return f


def random_state(grid, rng, norm=None, s=1.0):
    st = StateVector(random_field(grid, rng, divfree=True),
                     random_field(grid, rng, divfree=True))
    if norm is not None:
        st = st * (norm / state_h0s_norm(st, s))
    return st


@pytest.fixture
def field_factory(rng):
    return lambda grid, **kw: random_field(grid, rng, **kw)


@pytest.fixture
def state_factory(rng):
    return lambda grid, **kw: random_state(grid, rng, **kw)
