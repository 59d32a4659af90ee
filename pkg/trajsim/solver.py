"""
File: solver.py
Path: trajsim/solver.py
Purpose: Damped Gauss-Newton smoothing of one agent's trajectory
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

The state vector stacks [x, y, vx, vy] for t = 1..F. Every factor in the
smoothing model touches at most two consecutive timesteps, so the Jacobian is
block-bidiagonal and the normal matrix is banded with 7 super-diagonals.
"""

from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solveh_banded
from scipy.sparse import coo_matrix, csr_matrix

from trajsim.core import Trajectory
from trajsim.errors import ContractError, InputError
from trajsim.factors import FactorWeights
from trajsim.validators import validate_positive, validate_positive_int


STATE_DIM = 4
BANDWIDTH = 2 * STATE_DIM - 1
_DIAGONAL_FLOOR = 1e-12


class TerminationReason:
    """Why a smoothing solve stopped."""
    COST_TOL = 'cost_tol'
    STEP_TOL = 'step_tol'
    MAX_ITER = 'max_iter'
    MAX_DAMPING = 'max_damping'


@dataclass(frozen=True)
class SolverParams:
    """Stopping rule and Levenberg-style damping schedule."""
    max_iterations: int = 25
    cost_tolerance: float = 1e-8
    step_tolerance: float = 1e-10
    initial_damping: float = 1e-4
    damping_increase: float = 10.0
    damping_decrease: float = 0.5
    max_damping: float = 1e10

    def __post_init__(self):
        checks = [
            validate_positive_int(self.max_iterations, 'max_iterations'),
            validate_positive(self.cost_tolerance, 'cost_tolerance'),
            validate_positive(self.step_tolerance, 'step_tolerance'),
            validate_positive(self.max_damping, 'max_damping'),
        ]
        for is_valid, error in checks:
            if not is_valid:
                raise ContractError(error)
        if self.initial_damping < 0:
            raise ContractError("initial_damping must not be negative")
        if not self.damping_increase > 1:
            raise ContractError("damping_increase must be greater than 1")
        if not 0 < self.damping_decrease < 1:
            raise ContractError("damping_decrease must be between 0 and 1")

    def as_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one smoothing solve; energies are accepted iterates only."""
    final_energy: float
    initial_energy: float
    iterations: int
    converged: bool
    termination_reason: str
    energy_history: Tuple[float, ...] = field(default=())


def _check_lengths(traj: Trajectory, anchors: Trajectory):
    if len(traj) != len(anchors):
        raise ContractError(f"trajectory length {len(traj)} does not match anchors length {len(anchors)}")
    if len(traj) < 2:
        raise ContractError("smoothing needs a horizon of at least 2 states")


def _residual_vector(states: np.ndarray, anchors: np.ndarray, goal: np.ndarray,
                     weights: FactorWeights, dt: float) -> np.ndarray:
    """Stacked weighted residuals in the row order used by ``_jacobian``."""
    motion = np.sqrt(weights.w_motion) * (states[:-1, :2] - anchors[:-1, :2])
    goal_residual = np.sqrt(weights.w_goal) * (states[-1, :2] - goal)
    linear = np.sqrt(weights.w_linear) * (states[1:, :2] - (states[:-1, :2] + states[:-1, 2:] * dt))
    angular = np.sqrt(weights.w_angular) * (states[:-1, 2:] - states[1:, 2:])
    return np.concatenate([motion.ravel(), goal_residual, linear.ravel(), angular.ravel()])


@lru_cache(maxsize=256)
def _jacobian(horizon: int, dt: float, weights: FactorWeights) -> csr_matrix:
    steps = np.arange(horizon - 1)
    axes = np.arange(2)
    t, c = np.meshgrid(steps, axes, indexing='ij')
    t, c = t.ravel(), c.ravel()
    pair_rows = 2 * t + c

    sw_m, sw_g = np.sqrt(weights.w_motion), np.sqrt(weights.w_goal)
    sw_l, sw_a = np.sqrt(weights.w_linear), np.sqrt(weights.w_angular)

    goal_base = 2 * (horizon - 1)
    linear_base = goal_base + 2
    angular_base = linear_base + 2 * (horizon - 1)

    rows, cols, vals = [], [], []

    def add(r, k, v):
        rows.append(r)
        cols.append(k)
        vals.append(np.broadcast_to(v, np.shape(r)).astype(float))

    # motion, t = 1..F-1
    add(pair_rows, STATE_DIM * t + c, sw_m)
    # goal, t = F
    add(goal_base + axes, STATE_DIM * (horizon - 1) + axes, sw_g)
    # linear, couples (t, t + 1)
    add(linear_base + pair_rows, STATE_DIM * (t + 1) + c, sw_l)
    add(linear_base + pair_rows, STATE_DIM * t + c, -sw_l)
    add(linear_base + pair_rows, STATE_DIM * t + 2 + c, -sw_l * dt)
    # angular, couples (t, t + 1)
    add(angular_base + pair_rows, STATE_DIM * t + 2 + c, sw_a)
    add(angular_base + pair_rows, STATE_DIM * (t + 1) + 2 + c, -sw_a)

    num_rows = angular_base + 2 * (horizon - 1)
    matrix = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(num_rows, STATE_DIM * horizon),
    )
    return matrix.tocsr()


@lru_cache(maxsize=256)
def _normal_band(horizon: int, dt: float, weights: FactorWeights) -> Tuple[np.ndarray, np.ndarray]:
    """J^T J in LAPACK upper banded form, plus its (floored) diagonal."""
    jacobian = _jacobian(horizon, dt, weights)
    normal = (jacobian.T @ jacobian).tocsr()
    size = STATE_DIM * horizon
    band = np.zeros((BANDWIDTH + 1, size))
    for offset in range(min(BANDWIDTH + 1, size)):
        band[BANDWIDTH - offset, offset:] = normal.diagonal(offset)
    diagonal = np.maximum(band[BANDWIDTH].copy(), _DIAGONAL_FLOOR * max(1.0, band[BANDWIDTH].max()))
    band.setflags(write=False)
    diagonal.setflags(write=False)
    return band, diagonal


def assemble_system(traj: Trajectory, anchors: Trajectory, goal, weights: FactorWeights,
                    dt: float = None) -> Tuple[np.ndarray, csr_matrix]:
    """
    Weighted residual vector and sparse Jacobian of the smoothing model.

    Rows are ordered motion (t = 1..F-1), goal, linear pairs, angular pairs;
    each residual is scaled by sqrt(weight) so ||r||^2 is the smoothing energy.

    Args:
        traj: Linearization point, length F >= 2
        anchors: Anchor trajectory of length F
        goal: Goal point (x, y)
        weights: Factor weights
        dt: Step in seconds; defaults to traj.dt

    Returns:
        tuple: (residual of shape (6F - 4,), Jacobian of shape (6F - 4, 4F))

    Raises:
        ContractError: If lengths disagree or F < 2
    """
    _check_lengths(traj, anchors)
    dt = traj.dt if dt is None else float(dt)
    goal = np.asarray(goal, dtype=float)
    residual = _residual_vector(traj.states, anchors.states, goal, weights, dt)
    return residual, _jacobian(len(traj), dt, weights).copy()


def smooth_trajectory(init: Trajectory, anchors: Trajectory, goal, weights: FactorWeights,
                      dt: float = None, params: SolverParams = SolverParams()) -> Tuple[Trajectory, SolveReport]:
    """
    Minimize the smoothing energy of one agent with damped Gauss-Newton.

    Each iteration solves (J^T J + lambda * diag(J^T J)) delta = -J^T r with a
    banded Cholesky factorization. A step is kept only if the energy does not
    increase; lambda then shrinks, otherwise it grows and the step is retried.
    The model is linear in the state, so J is evaluated once per solve.

    Args:
        init: Starting trajectory, length F >= 2
        anchors: Anchor trajectory of length F
        goal: Goal point (x, y)
        weights: Factor weights (set w_goal = 0 to leave the goal out)
        dt: Step in seconds; defaults to init.dt
        params: Stopping rule and damping schedule

    Returns:
        tuple: (smoothed Trajectory, SolveReport)

    Raises:
        ContractError: If lengths disagree or F < 2
        InputError: If the starting energy is not finite
    """
    _check_lengths(init, anchors)
    dt = init.dt if dt is None else float(dt)
    goal = np.asarray(goal, dtype=float)
    horizon = len(init)
    anchor_states = anchors.states

    x = init.states.copy()
    residual = _residual_vector(x, anchor_states, goal, weights, dt)
    energy = float(residual @ residual)
    if not np.isfinite(energy):
        raise InputError("smoothing energy of the initial trajectory is not finite")

    initial_energy = energy
    history = [energy]
    if energy == 0.0:
        report = SolveReport(energy, energy, 0, True, TerminationReason.COST_TOL, tuple(history))
        return Trajectory(x, dt), report

    jacobian = _jacobian(horizon, dt, weights)
    band, diagonal = _normal_band(horizon, dt, weights)
    damping = params.initial_damping
    reason = TerminationReason.MAX_ITER
    converged = False
    iterations = 0

    while iterations < params.max_iterations:
        iterations += 1
        gradient = jacobian.T @ residual
        damped = band.copy()
        damped[BANDWIDTH] += damping * diagonal
        try:
            delta = solveh_banded(damped, -gradient, check_finite=False)
        except (LinAlgError, ValueError):
            delta = None

        if delta is not None and np.all(np.isfinite(delta)):
            candidate = x + delta.reshape(horizon, 4)
            candidate_residual = _residual_vector(candidate, anchor_states, goal, weights, dt)
            candidate_energy = float(candidate_residual @ candidate_residual)
            if candidate_energy <= energy:
                decrease = energy - candidate_energy
                previous = energy
                x, residual, energy = candidate, candidate_residual, candidate_energy
                history.append(energy)
                damping *= params.damping_decrease
                if np.linalg.norm(delta) < params.step_tolerance:
                    reason, converged = TerminationReason.STEP_TOL, True
                    break
                if energy == 0.0 or decrease <= params.cost_tolerance * previous:
                    reason, converged = TerminationReason.COST_TOL, True
                    break
                continue

        damping = max(damping, params.initial_damping, np.finfo(float).tiny) * params.damping_increase
        if damping > params.max_damping:
            reason = TerminationReason.MAX_DAMPING
            break

    report = SolveReport(
        final_energy=energy,
        initial_energy=initial_energy,
        iterations=iterations,
        converged=converged,
        termination_reason=reason,
        energy_history=tuple(history),
    )
    return Trajectory(x, dt), report
