"""Shared fixtures: small chains and schedules that simulate in milliseconds."""

from __future__ import annotations

import pytest

from trotterml.simulation.circuits import ModelKind, SpinModel, TrotterSchedule
from trotterml.simulation.qsim import NoiseModel


@pytest.fixture
def tfim3():
    return SpinModel(ModelKind.TFIM, 3, J=2.0, h=1.0)


@pytest.fixture
def xy3():
    return SpinModel(ModelKind.XY, 3, J=2.0, h=1.0)


@pytest.fixture
def short_schedule():
    return TrotterSchedule(N1=2, c=2, T=1.0, K=3)


@pytest.fixture
def default_noise3():
    return NoiseModel.uniform(3)


@pytest.fixture
def noiseless3():
    return NoiseModel.noiseless(3)
