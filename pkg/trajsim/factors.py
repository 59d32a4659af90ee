"""
File: factors.py
Path: trajsim/factors.py
Purpose: Residuals and energies of the six factors of the joint trajectory model
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

Energy convention: motion, goal, linear and angular factors are residuals and
enter the energy as weight * ||r||^2. Obstacle and collision factors are
max-of-Gaussian scores and enter as weight * value.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from trajsim.core import (
    AgentGeometry, SceneContext, Trajectory, as_state_array, box_points,
    densify_polylines, heading_of, headings_along, history_heading, EDGE_SPACING,
)
from trajsim.errors import ContractError
from trajsim.validators import validate_non_negative, validate_positive


@dataclass(frozen=True)
class FactorWeights:
    """Per-factor weights; the angular factor counts double by default."""
    w_motion: float = 1.0
    w_goal: float = 1.0
    w_linear: float = 1.0
    w_angular: float = 2.0
    w_obstacle: float = 1.0
    w_collision: float = 1.0
    softmin_temperature: float = 1.0

    def __post_init__(self):
        for name in ('w_motion', 'w_goal', 'w_linear', 'w_angular', 'w_obstacle', 'w_collision'):
            is_valid, error = validate_non_negative(getattr(self, name), name)
            if not is_valid:
                raise ContractError(error)
        is_valid, error = validate_positive(self.softmin_temperature, 'softmin_temperature')
        if not is_valid:
            raise ContractError(error)

    def as_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class GaussianFieldParams:
    """
    Shape of the Gaussian occupancy field around an agent.

    Sigmas left as None are tied to the agent footprint: length / 2 along the
    heading and width / 2 across it.
    """
    sigma_longitudinal: Optional[float] = None
    sigma_lateral: Optional[float] = None
    amplitude: float = 1.0

    def __post_init__(self):
        for name in ('sigma_longitudinal', 'sigma_lateral'):
            value = getattr(self, name)
            if value is not None:
                is_valid, error = validate_positive(value, name)
                if not is_valid:
                    raise ContractError(error)
        is_valid, error = validate_positive(self.amplitude, 'amplitude')
        if not is_valid:
            raise ContractError(error)

    def sigmas_for(self, geom: AgentGeometry) -> Tuple[float, float]:
        """Return (sigma_longitudinal, sigma_lateral) for an agent."""
        sigma_long = self.sigma_longitudinal if self.sigma_longitudinal is not None else 0.5 * geom.length
        sigma_lat = self.sigma_lateral if self.sigma_lateral is not None else 0.5 * geom.width
        return sigma_long, sigma_lat

    def as_dict(self) -> Dict:
        return asdict(self)


# ===================================================================
# Residual factors (linear in the state)
# ===================================================================

def residual_motion(s, a) -> np.ndarray:
    """Motion factor: position of s minus position of anchor a."""
    return as_state_array(s)[:2] - as_state_array(a)[:2]


def residual_goal(s_final, goal) -> np.ndarray:
    """Goal factor: final position minus goal point."""
    return as_state_array(s_final)[:2] - np.asarray(goal, dtype=float)


def residual_linear(s, s_next, dt: float) -> np.ndarray:
    """Linear-motion factor: s_next position minus constant-velocity prediction from s."""
    s = as_state_array(s)
    s_next = as_state_array(s_next)
    return s_next[:2] - (s[:2] + s[2:] * dt)


def residual_angular(s, s_next) -> np.ndarray:
    """Velocity-change factor between consecutive states."""
    return as_state_array(s)[2:] - as_state_array(s_next)[2:]


def jacobian_motion() -> np.ndarray:
    """d residual_motion / d s, shape (2, 4)."""
    return np.hstack([np.eye(2), np.zeros((2, 2))])


def jacobian_goal() -> np.ndarray:
    """d residual_goal / d s_final, shape (2, 4)."""
    return np.hstack([np.eye(2), np.zeros((2, 2))])


def jacobian_linear(dt: float) -> np.ndarray:
    """d residual_linear / d [s, s_next], shape (2, 8)."""
    d_s = np.hstack([-np.eye(2), -dt * np.eye(2)])
    d_next = np.hstack([np.eye(2), np.zeros((2, 2))])
    return np.hstack([d_s, d_next])


def jacobian_angular() -> np.ndarray:
    """d residual_angular / d [s, s_next], shape (2, 8)."""
    d_s = np.hstack([np.zeros((2, 2)), np.eye(2)])
    return np.hstack([d_s, -d_s])


def smoothing_terms(traj: Trajectory, anchors: Trajectory, goal, weights: FactorWeights,
                    dt: Optional[float] = None) -> Dict[str, float]:
    """
    Weighted squared residual sums of the four smoothing factors for one agent.

    Motion runs over t = 1..F-1, the goal factor takes its place at t = F, and
    the linear and angular factors couple every consecutive pair.

    Args:
        traj: Candidate trajectory of length F >= 2
        anchors: Anchor trajectory of the same length
        goal: Goal point (x, y)
        weights: Factor weights
        dt: Step in seconds; defaults to traj.dt

    Returns:
        dict: Subtotals keyed motion, goal, linear, angular

    Raises:
        ContractError: If the lengths differ or F < 2
    """
    if len(traj) != len(anchors):
        raise ContractError(f"trajectory length {len(traj)} does not match anchors length {len(anchors)}")
    if len(traj) < 2:
        raise ContractError("smoothing needs a horizon of at least 2 states")
    dt = traj.dt if dt is None else dt
    states = traj.states
    motion = states[:-1, :2] - anchors.states[:-1, :2]
    goal_residual = states[-1, :2] - np.asarray(goal, dtype=float)
    linear = states[1:, :2] - (states[:-1, :2] + states[:-1, 2:] * dt)
    angular = states[:-1, 2:] - states[1:, 2:]
    return {
        'motion': weights.w_motion * float(np.sum(motion * motion)),
        'goal': weights.w_goal * float(goal_residual @ goal_residual),
        'linear': weights.w_linear * float(np.sum(linear * linear)),
        'angular': weights.w_angular * float(np.sum(angular * angular)),
    }


def smoothing_energy(traj: Trajectory, anchors: Trajectory, goal, weights: FactorWeights,
                     dt: Optional[float] = None) -> float:
    """Negative log of the motion, goal, linear and angular factors for one agent."""
    terms = smoothing_terms(traj, anchors, goal, weights, dt)
    return terms['motion'] + terms['goal'] + terms['linear'] + terms['angular']


# ===================================================================
# Gaussian field factors
# ===================================================================

def mahalanobis_sq(offsets: np.ndarray, headings: np.ndarray, sigma_long: float, sigma_lat: float) -> np.ndarray:
    """
    Squared Mahalanobis distance of offsets expressed in a rotated agent frame.

    Args:
        offsets: Query minus agent center, shape (..., 2)
        headings: Agent headings broadcastable to offsets[..., 0]
        sigma_long: Standard deviation along the heading
        sigma_lat: Standard deviation across the heading

    Returns:
        numpy.ndarray: Values of shape offsets.shape[:-1]
    """
    cos_h = np.cos(headings)
    sin_h = np.sin(headings)
    u = cos_h * offsets[..., 0] + sin_h * offsets[..., 1]
    v = -sin_h * offsets[..., 0] + cos_h * offsets[..., 1]
    return (u / sigma_long) ** 2 + (v / sigma_lat) ** 2


def gaussian_field(query, s, geom: AgentGeometry, params: GaussianFieldParams,
                   fallback_heading: float = 0.0) -> float:
    """
    Value of the agent's Gaussian field at a query point.

    Args:
        query: Point (x, y)
        s: AgentState or [x, y, vx, vy] of the agent owning the field
        geom: Footprint of that agent
        params: Field shape
        fallback_heading: Heading used when the agent is (nearly) stationary

    Returns:
        float: Value in (0, amplitude]
    """
    row = as_state_array(s)
    sigma_long, sigma_lat = params.sigmas_for(geom)
    offset = np.asarray(query, dtype=float) - row[:2]
    distance = mahalanobis_sq(offset, heading_of(row, fallback_heading), sigma_long, sigma_lat)
    return float(params.amplitude * np.exp(-0.5 * distance))


def energy_obstacle(s, road_edges: Sequence, geom: AgentGeometry, params: GaussianFieldParams,
                    fallback_heading: float = 0.0, spacing: float = EDGE_SPACING) -> float:
    """
    Obstacle factor: the largest field value over all (densified) road-edge points.

    Returns 0 when there are no road edges.
    """
    points = densify_polylines(road_edges, spacing)
    if len(points) == 0:
        return 0.0
    row = as_state_array(s)
    sigma_long, sigma_lat = params.sigmas_for(geom)
    distances = mahalanobis_sq(points - row[:2], heading_of(row, fallback_heading), sigma_long, sigma_lat)
    return float(params.amplitude * np.exp(-0.5 * distances.min()))


def energy_collision(s, geom_s: AgentGeometry, s_other, geom_other: AgentGeometry,
                     params: GaussianFieldParams, fallback_headings: Tuple[float, float] = (0.0, 0.0)) -> float:
    """
    Collision factor: the largest value of s's field over the 9 CCPs of s_other.

    The factor is asymmetric; the joint model counts both ordered pairs.

    Args:
        s: State of the agent owning the field
        geom_s: Footprint of that agent
        s_other: State of the other agent
        geom_other: Footprint of the other agent
        params: Field shape
        fallback_headings: Fallback headings for (s, s_other)

    Returns:
        float: Value in [0, amplitude]
    """
    row = as_state_array(s)
    other = as_state_array(s_other)
    other_heading = heading_of(other, fallback_headings[1])
    points = box_points(other[:2], other_heading, geom_other.length, geom_other.width)
    sigma_long, sigma_lat = params.sigmas_for(geom_s)
    distances = mahalanobis_sq(points - row[:2], heading_of(row, fallback_headings[0]), sigma_long, sigma_lat)
    return float(params.amplitude * np.exp(-0.5 * distances.min()))


def obstacle_energies(positions: np.ndarray, headings: np.ndarray, geom: AgentGeometry,
                      params: GaussianFieldParams, context: SceneContext) -> np.ndarray:
    """
    Obstacle factor values along one agent's trajectory.

    Only edge points inside a ball around each position are scored. The ball is
    sized from the nearest edge point so it always contains the maximizer.

    Args:
        positions: Array of shape (F, 2)
        headings: Array of shape (F,)
        geom: Agent footprint
        params: Field shape
        context: Scene whose road edges are scored

    Returns:
        numpy.ndarray: Values of shape (F,)
    """
    tree = context.edge_tree
    if tree is None:
        return np.zeros(len(positions))
    points = context.edge_points
    sigma_long, sigma_lat = params.sigmas_for(geom)
    ratio = max(sigma_long, sigma_lat) / min(sigma_long, sigma_lat)

    nearest, _ = tree.query(positions)
    radii = nearest * ratio * (1.0 + 1e-9) + 1e-9
    neighbours = tree.query_ball_point(positions, radii)
    counts = np.array([len(indices) for indices in neighbours])
    owners = np.repeat(np.arange(len(positions)), counts)
    indices = np.concatenate([np.asarray(i, dtype=int) for i in neighbours])

    distances = mahalanobis_sq(points[indices] - positions[owners], headings[owners], sigma_long, sigma_lat)
    best = np.full(len(positions), np.inf)
    np.minimum.at(best, owners, distances)
    return params.amplitude * np.exp(-0.5 * best)


def collision_energies(positions: np.ndarray, headings: np.ndarray, geoms: Sequence[AgentGeometry],
                       params: GaussianFieldParams) -> np.ndarray:
    """
    Collision factor values for every ordered agent pair and timestep.

    Args:
        positions: Array of shape (N, F, 2)
        headings: Array of shape (N, F)
        geoms: Footprints of the N agents
        params: Field shape

    Returns:
        numpy.ndarray: Array of shape (N, N, F); entry [i, j, t] is f_C(s_i^t, s_j^t),
        zero on the diagonal
    """
    num_agents = len(geoms)
    if num_agents < 2:
        return np.zeros((num_agents, num_agents, positions.shape[1]))
    ccps = np.stack([
        box_points(positions[j], headings[j], geom.length, geom.width)
        for j, geom in enumerate(geoms)
    ])                                                    # (N, F, 9, 2)
    sigmas = np.array([params.sigmas_for(geom) for geom in geoms])
    offsets = ccps[None, :, :, :, :] - positions[:, None, :, None, :]   # (i, j, F, 9, 2)
    cos_h = np.cos(headings)[:, None, :, None]
    sin_h = np.sin(headings)[:, None, :, None]
    u = cos_h * offsets[..., 0] + sin_h * offsets[..., 1]
    v = -sin_h * offsets[..., 0] + cos_h * offsets[..., 1]
    distances = (u / sigmas[:, 0, None, None, None]) ** 2 + (v / sigmas[:, 1, None, None, None]) ** 2
    energies = params.amplitude * np.exp(-0.5 * distances.min(axis=-1))
    energies[np.arange(num_agents), np.arange(num_agents), :] = 0.0
    return energies


def _joint_headings(joint: Sequence[Trajectory], context: SceneContext,
                    initial_headings: Optional[Sequence[float]]) -> np.ndarray:
    if initial_headings is None:
        initial_headings = [history_heading(history) for history in context.histories]
    return np.stack([
        headings_along(traj.states, heading) for traj, heading in zip(joint, initial_headings)
    ])


def interaction_terms(joint: Sequence[Trajectory], context: SceneContext, weights: FactorWeights,
                      params: GaussianFieldParams,
                      initial_headings: Optional[Sequence[float]] = None) -> Dict[str, float]:
    """
    Weighted obstacle and collision subtotals of a joint rollout.

    Args:
        joint: One trajectory per scene agent, all of the same length
        context: Scene with road edges and agent footprints
        weights: Factor weights
        params: Field shape
        initial_headings: Per-agent heading before the first state; defaults to
            the final heading of each logged history

    Returns:
        dict: Subtotals keyed obstacle, collision

    Raises:
        ContractError: If the trajectories disagree in length or agent count
    """
    if len(joint) != context.num_agents:
        raise ContractError(f"expected {context.num_agents} trajectories, got {len(joint)}")
    if len({len(traj) for traj in joint}) > 1:
        raise ContractError("all trajectories of a joint rollout must have the same length")
    if not joint:
        return {'obstacle': 0.0, 'collision': 0.0}

    positions = np.stack([traj.positions for traj in joint])
    headings = _joint_headings(joint, context, initial_headings)

    obstacle = 0.0
    if context.edge_tree is not None and weights.w_obstacle > 0:
        for i, geom in enumerate(context.agents):
            obstacle += float(np.sum(obstacle_energies(positions[i], headings[i], geom, params, context)))

    collision = 0.0
    if weights.w_collision > 0:
        collision = float(np.sum(collision_energies(positions, headings, context.agents, params)))

    return {
        'obstacle': weights.w_obstacle * obstacle,
        'collision': weights.w_collision * collision,
    }


def interaction_energy(joint: Sequence[Trajectory], context: SceneContext, weights: FactorWeights,
                       params: GaussianFieldParams,
                       initial_headings: Optional[Sequence[float]] = None) -> float:
    """Negative log of the obstacle and collision factors of a joint rollout."""
    terms = interaction_terms(joint, context, weights, params, initial_headings)
    return terms['obstacle'] + terms['collision']


def energy_breakdown(joint: Sequence[Trajectory], anchors: Sequence[Trajectory], goals,
                     context: SceneContext, weights: FactorWeights, params: GaussianFieldParams,
                     initial_headings: Optional[Sequence[float]] = None) -> Dict[str, float]:
    """
    All six factor subtotals of a joint rollout, summed over agents.

    Returns:
        dict: motion, goal, linear, angular, obstacle and collision subtotals
    """
    breakdown = {'motion': 0.0, 'goal': 0.0, 'linear': 0.0, 'angular': 0.0}
    for traj, anchor, goal in zip(joint, anchors, goals):
        for name, value in smoothing_terms(traj, anchor, goal, weights).items():
            breakdown[name] += value
    breakdown.update(interaction_terms(joint, context, weights, params, initial_headings))
    return breakdown
