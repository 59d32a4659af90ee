"""
Tests for the banded Gauss-Newton smoother.
"""

import numpy as np
import pytest

from trajsim.core import Trajectory
from trajsim.errors import ContractError, InputError
from trajsim.factors import FactorWeights, smoothing_energy
from trajsim.solver import SolverParams, TerminationReason, assemble_system, smooth_trajectory


def _assert_monotone(report):
    history = np.asarray(report.energy_history)
    assert np.all(np.diff(history) <= 0.0)
    assert report.final_energy <= report.initial_energy


def _random_instance(rng, horizon, dt=0.1):
    anchors = np.hstack([
        np.cumsum(rng.normal(1.0, 0.5, size=(horizon, 2)), axis=0),
        rng.normal(10.0, 2.0, size=(horizon, 2)),
    ])
    goal = anchors[-1, :2] + rng.normal(0.0, 2.0, size=2)
    weights = FactorWeights(
        w_motion=rng.uniform(0.5, 2.0),
        w_goal=rng.uniform(0.5, 2.0),
        w_linear=rng.uniform(0.5, 2.0),
        w_angular=rng.uniform(1.0, 3.0),
    )
    return Trajectory(anchors, dt), goal, weights


def test_assemble_system_dimensions_two_steps():
    traj = Trajectory(np.array([[0.0, 0.0, 1.0, 0.0], [0.1, 0.0, 1.0, 0.0]]), 0.1)
    residual, jacobian = assemble_system(traj, traj, (0.1, 0.0), FactorWeights())
    assert residual.shape == (8,)
    assert jacobian.shape == (8, 8)
    np.testing.assert_allclose(residual, 0.0, atol=1e-15)


def test_assemble_system_residual_matches_energy():
    rng = np.random.default_rng(1)
    traj, goal, weights = _random_instance(rng, 7)
    anchors = Trajectory(traj.states + rng.normal(size=traj.states.shape), traj.dt)
    residual, jacobian = assemble_system(traj, anchors, goal, weights)
    assert residual.shape == (6 * 7 - 4,)
    assert jacobian.shape == (6 * 7 - 4, 28)
    assert residual @ residual == pytest.approx(smoothing_energy(traj, anchors, goal, weights), rel=1e-12)


def test_assemble_system_jacobian_matches_finite_differences():
    rng = np.random.default_rng(2)
    horizon = 5
    traj, goal, weights = _random_instance(rng, horizon)
    anchors = Trajectory(traj.states + rng.normal(size=traj.states.shape), traj.dt)
    _, jacobian = assemble_system(traj, anchors, goal, weights)
    dense = jacobian.toarray()
    step = 1e-6
    flat = traj.states.ravel()
    for k in range(flat.size):
        offset = np.zeros_like(flat)
        offset[k] = step
        plus, _ = assemble_system(Trajectory((flat + offset).reshape(horizon, 4), traj.dt), anchors, goal, weights)
        minus, _ = assemble_system(Trajectory((flat - offset).reshape(horizon, 4), traj.dt), anchors, goal, weights)
        column = (plus - minus) / (2.0 * step)
        assert np.abs(column - dense[:, k]).max() <= 1e-5 * max(1.0, np.abs(dense[:, k]).max())


def test_assemble_system_is_block_tridiagonal():
    rng = np.random.default_rng(3)
    traj, goal, weights = _random_instance(rng, 9)
    _, jacobian = assemble_system(traj, traj, goal, weights)
    normal = (jacobian.T @ jacobian).toarray()
    rows, cols = np.nonzero(normal)
    assert np.all(np.abs(rows // 4 - cols // 4) <= 1)
    assert np.all(np.abs(rows - cols) <= 7)


def test_assemble_system_length_mismatch():
    traj = Trajectory(np.zeros((4, 4)))
    with pytest.raises(ContractError):
        assemble_system(traj, traj.prefix(3), (0.0, 0.0), FactorWeights())


def test_smooth_fixed_point_returns_unchanged():
    # dt = 0.5 keeps every position exactly representable
    steps = np.arange(10)[:, None] * 0.5
    states = np.hstack([steps * [2.0, 1.0], np.broadcast_to([2.0, 1.0], (10, 2))])
    init = Trajectory(states, 0.5)
    smoothed, report = smooth_trajectory(init, init, states[-1, :2], FactorWeights())
    np.testing.assert_array_equal(smoothed.states, init.states)
    assert report.iterations <= 1
    assert report.converged
    assert report.final_energy == 0.0


def test_smooth_pure_motion_problem_hits_anchors():
    rng = np.random.default_rng(4)
    anchors = Trajectory(np.hstack([rng.normal(size=(6, 2)) * 5, np.zeros((6, 2))]), 0.1)
    init = Trajectory(anchors.states + rng.normal(size=(6, 4)), 0.1)
    weights = FactorWeights(w_goal=0.0, w_linear=0.0, w_angular=0.0)
    smoothed, report = smooth_trajectory(init, anchors, (0.0, 0.0), weights)
    np.testing.assert_allclose(smoothed.positions[:-1], anchors.positions[:-1], atol=1e-8)
    assert report.converged
    assert report.final_energy == pytest.approx(0.0, abs=1e-12)
    _assert_monotone(report)


def test_smooth_three_step_conflicting_terms_matches_oracle():
    anchors = Trajectory(np.array([
        [0.0, 0.0, 10.0, 0.0],
        [1.0, 0.5, 10.0, 0.0],
        [2.0, -0.5, 10.0, 0.0],
    ]), 0.1)
    goal = (2.5, 0.0)
    weights = FactorWeights()
    smoothed, report = smooth_trajectory(anchors, anchors, goal, weights)
    residual, jacobian = assemble_system(anchors, anchors, goal, weights)
    delta, *_ = np.linalg.lstsq(jacobian.toarray(), -residual, rcond=None)
    optimum = residual + jacobian.toarray() @ delta
    assert report.final_energy == pytest.approx(optimum @ optimum, rel=1e-8, abs=1e-12)
    _assert_monotone(report)


def test_smooth_matches_dense_least_squares_oracle():
    rng = np.random.default_rng(5)
    for _ in range(50):
        horizon = int(rng.integers(2, 11))
        anchors, goal, weights = _random_instance(rng, horizon)
        init = Trajectory(anchors.states + rng.normal(0.0, 1.0, size=anchors.states.shape), anchors.dt)
        smoothed, report = smooth_trajectory(init, anchors, goal, weights)

        residual, jacobian = assemble_system(init, anchors, goal, weights)
        dense = jacobian.toarray()
        delta, *_ = np.linalg.lstsq(dense, -residual, rcond=None)
        optimum = residual + dense @ delta
        oracle = float(optimum @ optimum)

        assert report.final_energy == pytest.approx(oracle, rel=1e-8, abs=1e-10)
        assert smoothing_energy(smoothed, anchors, goal, weights) == pytest.approx(report.final_energy, rel=1e-9,
                                                                                   abs=1e-12)
        _assert_monotone(report)


def test_smooth_is_deterministic():
    rng = np.random.default_rng(6)
    anchors, goal, weights = _random_instance(rng, 8)
    init = Trajectory(anchors.states + 1.0, anchors.dt)
    first, _ = smooth_trajectory(init, anchors, goal, weights)
    second, _ = smooth_trajectory(init, anchors, goal, weights)
    np.testing.assert_array_equal(first.states, second.states)


def test_smooth_without_goal_factor_ignores_goal():
    rng = np.random.default_rng(7)
    anchors, _, weights = _random_instance(rng, 6)
    no_goal = FactorWeights(w_goal=0.0)
    first, _ = smooth_trajectory(anchors, anchors, (0.0, 0.0), no_goal)
    second, _ = smooth_trajectory(anchors, anchors, (500.0, -500.0), no_goal)
    np.testing.assert_array_equal(first.states, second.states)


def test_smooth_stops_on_iteration_limit():
    rng = np.random.default_rng(8)
    anchors, goal, weights = _random_instance(rng, 10)
    params = SolverParams(max_iterations=1, initial_damping=1.0)
    _, report = smooth_trajectory(anchors, anchors, goal, weights, params=params)
    assert report.iterations == 1
    assert report.termination_reason == TerminationReason.MAX_ITER
    assert not report.converged
    _assert_monotone(report)


def test_smooth_length_mismatch():
    traj = Trajectory(np.zeros((5, 4)))
    with pytest.raises(ContractError):
        smooth_trajectory(traj, traj.prefix(4), (0.0, 0.0), FactorWeights())
    with pytest.raises(ContractError):
        smooth_trajectory(traj.prefix(1), traj.prefix(1), (0.0, 0.0), FactorWeights())


def test_smooth_non_finite_goal():
    traj = Trajectory(np.zeros((5, 4)))
    with pytest.raises(InputError):
        smooth_trajectory(traj, traj, (float('nan'), 0.0), FactorWeights())


def test_solver_params_validation():
    with pytest.raises(ContractError):
        SolverParams(damping_decrease=1.5)
    with pytest.raises(ContractError):
        SolverParams(max_iterations=0)
