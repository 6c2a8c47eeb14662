"""Shared fixtures; puts the top-level modules on the import path."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from asymptotics import AsymptoticsSetup, scattering_context  # noqa: E402
from fock_core import ModeGrid, build_fock_space  # noqa: E402
from spacetime_net import build_two_d_net  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def default_net():
    """N = 3, spacing 1, per-mode cap 2, energy cap 4: dimension 81."""
    space = build_fock_space(ModeGrid(1.0, 3), per_mode_cap=2, energy_cap=4.0)
    return build_two_d_net(space, space)


@pytest.fixture(scope="session")
def small_net():
    """Two modes, spacing 0.5, cap 2, energy cap 1.0: dimension 16."""
    space = build_fock_space(ModeGrid(0.5, 2), per_mode_cap=2, energy_cap=1.0)
    return build_two_d_net(space, space)


@pytest.fixture(scope="session")
def setup():
    return AsymptoticsSetup()


@pytest.fixture(scope="session")
def small_context(small_net, setup):
    return scattering_context(small_net, setup)


@pytest.fixture(scope="session")
def default_context(default_net, setup):
    return scattering_context(default_net, setup)
