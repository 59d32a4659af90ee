"""
File: metrics.py
Path: trajsim/metrics.py
Purpose: Desk-scale realism metrics over simulated rollouts
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

Collision and offroad use the actual oriented boxes (separating-axis test and
point-in-polygon), never the Gaussian field energies the simulator optimizes.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from trajsim.core import SceneContext, box_corners, headings_along, history_heading
from trajsim.errors import InputError
from trajsim.simulation import SimulationOutput


HISTOGRAM_BINS = 10

# Look-ahead of the time-to-collision metric; conflict-free agents report this value
TTC_HORIZON = 5.0


@dataclass(frozen=True)
class DistributionSummary:
    """Mean, spread and histogram of one kinematic quantity."""
    count: int
    mean: Optional[float]
    std: Optional[float]
    minimum: Optional[float]
    maximum: Optional[float]
    histogram_counts: tuple = ()
    histogram_edges: tuple = ()

    @classmethod
    def from_values(cls, values: np.ndarray, bins: int = HISTOGRAM_BINS) -> 'DistributionSummary':
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return cls(0, None, None, None, None)
        counts, edges = np.histogram(values, bins=bins)
        return cls(
            count=int(values.size),
            mean=float(values.mean()),
            std=float(values.std()),
            minimum=float(values.min()),
            maximum=float(values.max()),
            histogram_counts=tuple(int(c) for c in counts),
            histogram_edges=tuple(float(e) for e in edges),
        )

    def as_dict(self) -> Dict:
        return {
            'count': self.count,
            'mean': self.mean,
            'std': self.std,
            'min': self.minimum,
            'max': self.maximum,
            'histogram_counts': list(self.histogram_counts),
            'histogram_edges': list(self.histogram_edges),
        }


@dataclass(frozen=True)
class MetricsReport:
    """
    Aggregate metrics of a simulation output.

    Rates are fractions of (sample, agent, step) triples. offroad_rate is None
    when the scene declares no drivable area; min_ade is None without a logged
    future; the distance fields are None when undefined for the scene.
    time_to_collision summarizes the constant-velocity time until each agent's
    box first overlaps another, capped at TTC_HORIZON; it is empty and
    time_to_collision_min is None for scenes with fewer than two agents.
    """
    num_samples: int
    num_agents: int
    num_steps: int
    collision_rate: float
    offroad_rate: Optional[float]
    speed: DistributionSummary
    acceleration: DistributionSummary
    angular_speed: DistributionSummary
    angular_acceleration: DistributionSummary
    distance_to_object_mean: Optional[float]
    distance_to_object_min: Optional[float]
    distance_to_road_edge_mean: Optional[float]
    distance_to_road_edge_min: Optional[float]
    min_ade: Optional[float]
    time_to_collision: DistributionSummary = DistributionSummary(0, None, None, None, None)
    time_to_collision_min: Optional[float] = None

    def as_dict(self) -> Dict:
        """Field order is fixed so reports diff cleanly."""
        return {
            'num_samples': self.num_samples,
            'num_agents': self.num_agents,
            'num_steps': self.num_steps,
            'collision_rate': self.collision_rate,
            'offroad_rate': self.offroad_rate,
            'min_ade': self.min_ade,
            'speed': self.speed.as_dict(),
            'acceleration': self.acceleration.as_dict(),
            'angular_speed': self.angular_speed.as_dict(),
            'angular_acceleration': self.angular_acceleration.as_dict(),
            'distance_to_object_mean': self.distance_to_object_mean,
            'distance_to_object_min': self.distance_to_object_min,
            'time_to_collision': self.time_to_collision.as_dict(),
            'time_to_collision_min': self.time_to_collision_min,
            'distance_to_road_edge_mean': self.distance_to_road_edge_mean,
            'distance_to_road_edge_min': self.distance_to_road_edge_min,
        }


# ===================================================================
# Geometry
# ===================================================================

def _edge_axes(corners: np.ndarray) -> np.ndarray:
    """Unit normals of the two distinct edge directions of each box, shape (..., 2, 2)."""
    edges = np.stack([corners[..., 1, :] - corners[..., 0, :], corners[..., 2, :] - corners[..., 1, :]], axis=-2)
    norms = np.linalg.norm(edges, axis=-1, keepdims=True)
    return edges / np.where(norms > 0, norms, 1.0)


def sat_penetration(corners_a: np.ndarray, corners_b: np.ndarray) -> np.ndarray:
    """
    Smallest interval overlap of two convex quadrilaterals over their edge normals.

    Non-negative values mean the boxes overlap (touching counts); a negative
    value is the width of a separating gap along some axis.

    Args:
        corners_a: Corners of shape (..., 4, 2), polygon order
        corners_b: Corners of shape (..., 4, 2), polygon order

    Returns:
        numpy.ndarray: Penetration depths of shape (...)
    """
    corners_a = np.asarray(corners_a, dtype=float)
    corners_b = np.asarray(corners_b, dtype=float)
    axes = np.concatenate([_edge_axes(corners_a), _edge_axes(corners_b)], axis=-2)
    proj_a = np.einsum('...kd,...pd->...kp', axes, corners_a)
    proj_b = np.einsum('...kd,...pd->...kp', axes, corners_b)
    overlap = np.minimum(proj_a.max(-1) - proj_b.min(-1), proj_b.max(-1) - proj_a.min(-1))
    return overlap.min(-1)


def boxes_overlap(corners_a: np.ndarray, corners_b: np.ndarray) -> np.ndarray:
    """Separating-axis overlap test, vectorized over leading dimensions."""
    return sat_penetration(corners_a, corners_b) >= 0.0


def point_in_polygon(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """
    Even-odd ray casting test.

    Args:
        points: Query points of shape (..., 2)
        polygon: Vertices of shape (P, 2), implicitly closed

    Returns:
        numpy.ndarray: Boolean array of shape (...)
    """
    points = np.asarray(points, dtype=float)
    polygon = np.asarray(polygon, dtype=float)
    px = points[..., 0, None]
    py = points[..., 1, None]
    x1, y1 = polygon[:, 0], polygon[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    straddles = (y1 > py) != (y2 > py)
    with np.errstate(divide='ignore', invalid='ignore'):
        crossing_x = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    crossings = straddles & (px < crossing_x)
    return (np.count_nonzero(crossings, axis=-1) % 2) == 1


def inside_drivable_area(points: np.ndarray, polygons: Sequence[np.ndarray]) -> np.ndarray:
    """True where a point lies inside any of the polygons."""
    points = np.asarray(points, dtype=float)
    inside = np.zeros(points.shape[:-1], dtype=bool)
    for polygon in polygons:
        inside |= point_in_polygon(points, polygon)
    return inside


def point_segment_distances(points: np.ndarray, polylines: Sequence[np.ndarray]) -> np.ndarray:
    """Distance from each point (..., 2) to the nearest segment of any polyline."""
    points = np.asarray(points, dtype=float)
    starts = np.concatenate([np.asarray(line, dtype=float)[:-1] for line in polylines])
    ends = np.concatenate([np.asarray(line, dtype=float)[1:] for line in polylines])
    flat = points.reshape(-1, 2)
    seg = ends - starts
    seg_len_sq = np.einsum('sd,sd->s', seg, seg)
    rel = flat[:, None, :] - starts[None, :, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        along = np.where(seg_len_sq > 0, np.einsum('psd,sd->ps', rel, seg) / seg_len_sq, 0.0)
    along = np.clip(along, 0.0, 1.0)
    nearest = starts[None, :, :] + along[..., None] * seg[None, :, :]
    distances = np.linalg.norm(flat[:, None, :] - nearest, axis=-1).min(axis=1)
    return distances.reshape(points.shape[:-1])


# ===================================================================
# Metrics
# ===================================================================

def _check_shapes(output: SimulationOutput, context: SceneContext):
    num_agents = output.samples.shape[1]
    if num_agents != context.num_agents:
        raise InputError(f"Shape mismatch: rollouts hold {num_agents} agents, scenario has {context.num_agents}")
    scene_ids = tuple(geom.agent_id for geom in context.agents)
    if output.agent_ids != scene_ids:
        raise InputError("Shape mismatch: rollout agent ids do not match the scenario")


def sample_headings(output: SimulationOutput, context: SceneContext) -> np.ndarray:
    """Headings of every simulated state, shape (K, N, T), carried forward from the history."""
    num_samples, num_agents, num_steps = output.shape
    headings = np.zeros((num_samples, num_agents, num_steps))
    for i in range(num_agents):
        initial = history_heading(context.histories[i])
        for k in range(num_samples):
            headings[k, i] = headings_along(output.samples[k, i], initial)
    return headings


def collision_flags(output: SimulationOutput, context: SceneContext,
                    headings: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Boolean (K, N, T): agent i overlaps at least one other agent at step t.
    """
    num_samples, num_agents, num_steps = output.shape
    headings = sample_headings(output, context) if headings is None else headings
    flags = np.zeros((num_samples, num_agents, num_steps), dtype=bool)
    corners = [
        box_corners(output.samples[:, i, :, :2], headings[:, i], geom.length, geom.width)
        for i, geom in enumerate(context.agents)
    ]
    for i in range(num_agents):
        for j in range(i + 1, num_agents):
            hit = boxes_overlap(corners[i], corners[j])
            flags[:, i] |= hit
            flags[:, j] |= hit
    return flags


def time_to_collision(output: SimulationOutput, context: SceneContext,
                      headings: Optional[np.ndarray] = None, horizon: float = TTC_HORIZON) -> Optional[np.ndarray]:
    """
    Constant-velocity time to collision, shape (K, N, T).

    Every agent is extrapolated from its state at step t along its velocity
    with the heading held fixed. The result is the first multiple of dt at
    which agent i's box overlaps another agent's box, 0 for boxes already in
    contact, and ``horizon`` when no overlap occurs within it.

    Returns:
        numpy.ndarray or None: None for scenes with fewer than two agents
    """
    num_samples, num_agents, num_steps = output.shape
    if num_agents < 2:
        return None
    headings = sample_headings(output, context) if headings is None else headings
    positions = output.samples[..., :2]
    velocities = output.samples[..., 2:]

    ttc = np.full((num_samples, num_agents, num_steps), np.inf)
    for tau in np.arange(int(round(horizon / output.dt)) + 1) * output.dt:
        moved = positions + tau * velocities
        corners = [
            box_corners(moved[:, i], headings[:, i], geom.length, geom.width)
            for i, geom in enumerate(context.agents)
        ]
        for i in range(num_agents):
            for j in range(i + 1, num_agents):
                hit = boxes_overlap(corners[i], corners[j])
                for agent in (i, j):
                    ttc[:, agent] = np.where(hit & np.isinf(ttc[:, agent]), tau, ttc[:, agent])
        if not np.isinf(ttc).any():
            break
    return np.minimum(ttc, horizon)


def offroad_flags(output: SimulationOutput, context: SceneContext,
                  headings: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
    """Boolean (K, N, T): some box corner lies outside the drivable area; None without one."""
    if not context.drivable_area:
        return None
    num_samples, num_agents, num_steps = output.shape
    headings = sample_headings(output, context) if headings is None else headings
    flags = np.zeros((num_samples, num_agents, num_steps), dtype=bool)
    for i, geom in enumerate(context.agents):
        corners = box_corners(output.samples[:, i, :, :2], headings[:, i], geom.length, geom.width)
        flags[:, i] = ~inside_drivable_area(corners, context.drivable_area).all(axis=-1)
    return flags


def min_ade(samples: np.ndarray, logged_future: Sequence[np.ndarray]) -> float:
    """
    Minimum over samples of the average displacement error.

    Args:
        samples: Simulated states of shape (K, N, T, 4)
        logged_future: Per-agent logged states of length >= T

    Returns:
        float: min_k (1 / (N * T)) * sum over agents and steps of ||pos - logged||

    Raises:
        InputError: If the logged future is shorter than T or covers other agents
    """
    samples = np.asarray(samples, dtype=float)
    _, num_agents, num_steps, _ = samples.shape
    if len(logged_future) != num_agents:
        raise InputError(f"Logged future covers {len(logged_future)} agents, rollouts hold {num_agents}")
    logged = []
    for index, future in enumerate(logged_future):
        future = np.asarray(future, dtype=float)
        if len(future) < num_steps:
            raise InputError(f"Logged future of agent {index} has {len(future)} steps, rollouts have {num_steps}")
        logged.append(future[:num_steps, :2])
    logged = np.stack(logged)
    errors = np.linalg.norm(samples[..., :2] - logged[None], axis=-1)
    return float(errors.mean(axis=(1, 2)).min())


def _kinematics(output: SimulationOutput, context: SceneContext, headings: np.ndarray) -> Dict[str, np.ndarray]:
    """Speed, acceleration, angular speed and angular acceleration samples."""
    dt = output.dt
    samples = output.samples
    num_samples = samples.shape[0]
    last_history = np.stack([history[-1] for history in context.histories]) if context.num_agents else \
        np.zeros((0, 4))
    previous = np.broadcast_to(last_history[None, :, None, :], (num_samples,) + last_history.shape[:1] + (1, 4))
    states = np.concatenate([previous, samples], axis=2)

    initial_headings = np.array([history_heading(history) for history in context.histories])
    previous_headings = np.broadcast_to(initial_headings[None, :, None], (num_samples, len(initial_headings), 1))
    all_headings = np.concatenate([previous_headings, headings], axis=2)

    speed = np.hypot(samples[..., 2], samples[..., 3])
    acceleration = np.linalg.norm(np.diff(states[..., 2:], axis=2), axis=-1) / dt
    turn = np.angle(np.exp(1j * np.diff(all_headings, axis=2)))
    angular_speed = turn / dt
    angular_acceleration = np.diff(angular_speed, axis=2) / dt
    return {
        'speed': speed,
        'acceleration': acceleration,
        'angular_speed': np.abs(angular_speed),
        'angular_acceleration': np.abs(angular_acceleration),
    }


def _object_distances(output: SimulationOutput) -> Optional[np.ndarray]:
    positions = output.samples[..., :2]
    if positions.shape[1] < 2:
        return None
    offsets = positions[:, :, None] - positions[:, None, :]
    distances = np.linalg.norm(offsets, axis=-1)
    num_agents = positions.shape[1]
    distances[:, np.arange(num_agents), np.arange(num_agents)] = np.inf
    return distances.min(axis=2)


def compute_metrics(output: SimulationOutput, context: SceneContext,
                    logged_future: Optional[Sequence[np.ndarray]] = None,
                    require_min_ade: bool = False) -> MetricsReport:
    """
    Compute the metrics report of a simulation output.

    Args:
        output: Simulated samples
        context: Scene the samples were simulated in
        logged_future: Per-agent logged future, enables min_ade
        require_min_ade: Fail instead of reporting None when no logged future is given

    Returns:
        MetricsReport: Rates, kinematic summaries and displacement error

    Raises:
        InputError: On shape mismatch or a missing logged future when min_ade is required
    """
    _check_shapes(output, context)
    num_samples, num_agents, num_steps = output.shape
    total = num_samples * num_agents * num_steps
    headings = sample_headings(output, context)

    collision_rate = float(collision_flags(output, context, headings).sum() / total) if total else 0.0
    offroad = offroad_flags(output, context, headings)
    offroad_rate = None if offroad is None else (float(offroad.sum() / total) if total else 0.0)

    if logged_future is None and require_min_ade:
        raise InputError("min_ade requested but the scenario has no logged future")
    ade = None if logged_future is None or num_agents == 0 else min_ade(output.samples, logged_future)

    kinematics = _kinematics(output, context, headings)

    objects = _object_distances(output)
    ttc = time_to_collision(output, context, headings)
    edges = None
    if context.road_edges and num_agents:
        edges = point_segment_distances(output.samples[..., :2], context.road_edges)

    return MetricsReport(
        num_samples=num_samples,
        num_agents=num_agents,
        num_steps=num_steps,
        collision_rate=collision_rate,
        offroad_rate=offroad_rate,
        speed=DistributionSummary.from_values(kinematics['speed']),
        acceleration=DistributionSummary.from_values(kinematics['acceleration']),
        angular_speed=DistributionSummary.from_values(kinematics['angular_speed']),
        angular_acceleration=DistributionSummary.from_values(kinematics['angular_acceleration']),
        distance_to_object_mean=None if objects is None else float(objects.mean()),
        distance_to_object_min=None if objects is None else float(objects.min()),
        distance_to_road_edge_mean=None if edges is None else float(edges.mean()),
        distance_to_road_edge_min=None if edges is None else float(edges.min()),
        min_ade=ade,
        time_to_collision=DistributionSummary.from_values(() if ttc is None else ttc),
        time_to_collision_min=None if ttc is None or ttc.size == 0 else float(ttc.min()),
    )


def aggregate_collision_rate(reports: List[MetricsReport]) -> float:
    """Collision rate over several reports, weighted by their (sample, agent, step) counts."""
    totals = [r.num_samples * r.num_agents * r.num_steps for r in reports]
    if not sum(totals):
        return 0.0
    return float(sum(r.collision_rate * n for r, n in zip(reports, totals)) / sum(totals))
