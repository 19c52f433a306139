"""Shared fixtures: a few solved states reused across test modules.

Everything here is deliberately small; the heavyweight configurations live
in test_acceptance.py with their own module-scoped fixtures.
"""

import numpy as np
import pytest

from fracturelab.scenarios import bar_state, tear_state
from fracturelab.oracles import manufactured_slit_state
from fracturelab.energetics import MaterialSpec, SurfaceEnergySpec


@pytest.fixture(scope="session")
def tear24():
    """Edge-cracked membrane, crack to x=0.75, tear load t=1.2, G=2."""
    return tear_state(0.75, 1.2, G=2.0, resolution=24)


@pytest.fixture(scope="session")
def bar_below():
    """Unbroken clamped bar below the breaking load (t=1.0 < sqrt(2))."""
    return bar_state(1.0, G=1.0)


@pytest.fixture(scope="session")
def bar_above():
    """Unbroken clamped bar above the breaking load (t=1.8 > sqrt(2))."""
    return bar_state(1.8, G=1.0)


@pytest.fixture(scope="session")
def disk32():
    """Interpolated singular slit-disk state at h=1/32, with closed forms."""
    material = MaterialSpec("antiplane", mu=1.0)
    F = SurfaceEnergySpec("griffith", G=2.0)
    state, crack, exact = manufactured_slit_state(material, F, h=1.0 / 32.0)
    return state, crack, material, F, exact
