"""
File: conftest.py
Path: tests/conftest.py
Purpose: Shared fixtures for the trajsim test suite
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

import numpy as np
import pytest

from trajsim.core import AgentGeometry, SceneContext
from trajsim.proposer import ConstantVelocityProposer, ProposerConfig, ProposerKind
from trajsim.rollout import MpsParams
from trajsim.scenario_io import GeneratorParams, generate_scenario
from trajsim.simulation import SimParams


def straight_history(start, velocity, length=11, dt=0.1):
    """Constant-velocity history ending at ``start``."""
    frames = np.arange(1 - length, 1)[:, None] * dt
    positions = np.asarray(start, dtype=float) + frames * np.asarray(velocity, dtype=float)
    return np.hstack([positions, np.broadcast_to(velocity, positions.shape)])


@pytest.fixture
def single_agent_context():
    """One agent at the origin moving at 10 m/s along +x on an empty map."""
    return SceneContext(
        road_edges=(),
        agents=(AgentGeometry(agent_id='ego'),),
        histories=(straight_history([0.0, 0.0], [10.0, 0.0]),),
    )


@pytest.fixture
def head_on():
    return generate_scenario('head_on', seed=3)


@pytest.fixture
def cv_proposer():
    return ConstantVelocityProposer(ProposerConfig(kind=ProposerKind.CONSTANT_VELOCITY))


@pytest.fixture
def noisy_proposer():
    return ConstantVelocityProposer(ProposerConfig(kind=ProposerKind.CONSTANT_VELOCITY, position_noise_sigma=0.5))


@pytest.fixture
def small_params():
    """Two samples of 20 steps with 4 rollouts per call."""
    return SimParams(
        num_samples=2,
        total_steps=20,
        mps=MpsParams(num_rollouts=4, horizon=20, chunk_size=10),
        master_seed=7,
    )


@pytest.fixture
def short_generator():
    return GeneratorParams(future_length=40)


@pytest.fixture
def history_factory():
    return straight_history
