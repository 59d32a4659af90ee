"""
File: proposer.py
Path: trajsim/proposer.py
Purpose: Pluggable sources of per-rollout anchors and goals
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

A proposer plays the role of the learned trajectory model in the inner loop:
given the scene, the recent history of every agent and a horizon F, it returns
one joint Proposal. All backends are pure functions of their inputs and seed.
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from trajsim.core import Proposal, SceneContext, Trajectory, fill_velocities, history_heading
from trajsim.errors import ContractError, InputError
from trajsim.validators import validate_choice, validate_non_negative


class ProposerKind:
    """Available proposal backends."""
    CONSTANT_VELOCITY = 'constant_velocity'
    GOAL_DIRECTED = 'goal_directed'
    REPLAY = 'replay'

    ALL = (CONSTANT_VELOCITY, GOAL_DIRECTED, REPLAY)


@dataclass(frozen=True)
class ProposerConfig:
    """Backend selection and its sampling noise."""
    kind: str = ProposerKind.CONSTANT_VELOCITY
    position_noise_sigma: float = 0.0
    goal_jitter_sigma: float = 0.0
    speed_scale_range: Tuple[float, float] = (1.0, 1.0)
    replay_path: Optional[str] = None

    def __post_init__(self):
        checks = [
            validate_choice(self.kind, 'kind', ProposerKind.ALL),
            validate_non_negative(self.position_noise_sigma, 'position_noise_sigma'),
            validate_non_negative(self.goal_jitter_sigma, 'goal_jitter_sigma'),
        ]
        for is_valid, error in checks:
            if not is_valid:
                raise ContractError(error)
        low, high = self.speed_scale_range
        if not 0 < low <= high:
            raise ContractError("speed_scale_range must satisfy 0 < min <= max")
        object.__setattr__(self, 'speed_scale_range', (float(low), float(high)))
        if self.kind == ProposerKind.REPLAY and not self.replay_path:
            raise ContractError("replay proposer needs a replay_path")

    def as_dict(self) -> Dict:
        values = asdict(self)
        values['speed_scale_range'] = list(self.speed_scale_range)
        return values


def _check_request(context: SceneContext, history: Sequence[np.ndarray], horizon: int):
    if horizon < 2:
        raise ContractError("proposal horizon must be at least 2")
    if len(history) != context.num_agents:
        raise ContractError(f"expected histories for {context.num_agents} agents, got {len(history)}")
    for index, states in enumerate(history):
        if len(states) == 0:
            raise InputError(f"agent {index} has an empty history")


class Proposer:
    """Interface shared by all backends."""

    kind = None

    def __init__(self, config: ProposerConfig):
        self.config = config

    def propose(self, context: SceneContext, history: Sequence[np.ndarray], horizon: int,
                rng_seed: int, rollout_index: int = 0) -> Proposal:
        """
        Sample anchors and goals for every agent.

        Args:
            context: Static scene
            history: Per-agent arrays of shape (H, 4), most recent state last
            horizon: Number of future steps F
            rng_seed: Seed for this rollout
            rollout_index: Index j of the rollout within the MPS call

        Returns:
            Proposal: N anchor trajectories of length F and N goals, in scene order
        """
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.config.kind}>"


class ConstantVelocityProposer(Proposer):
    """Linear extrapolation of each agent's last state with i.i.d. position noise."""

    kind = ProposerKind.CONSTANT_VELOCITY

    def propose(self, context, history, horizon, rng_seed, rollout_index=0):
        _check_request(context, history, horizon)
        rng = np.random.default_rng(rng_seed)
        dt = context.dt
        offsets = np.arange(1, horizon + 1)[:, None] * dt
        sigma = self.config.position_noise_sigma
        anchors = []
        for states in history:
            last = np.asarray(states[-1], dtype=float)
            positions = last[:2] + offsets * last[2:]
            if sigma > 0:
                positions = positions + rng.normal(0.0, sigma, size=positions.shape)
            velocities = np.broadcast_to(last[2:], positions.shape)
            anchors.append(Trajectory(np.hstack([positions, velocities]), dt))
        goals = np.array([anchor.states[-1, :2] for anchor in anchors])
        return Proposal(tuple(anchors), goals)


def arc_path(start: np.ndarray, heading: float, target: np.ndarray,
             distances: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Points along the circular arc leaving ``start`` tangent to ``heading`` through ``target``.

    Falls back to a straight segment when the target lies on the heading line.

    Args:
        start: Start point (x, y)
        heading: Tangent direction at the start, radians
        target: End point of the path
        distances: Arc lengths at which to sample, clipped to the path length

    Returns:
        tuple: (points of shape (S, 2), unit tangents of shape (S, 2), path length)
    """
    cos_h, sin_h = math.cos(heading), math.sin(heading)
    dx, dy = target[0] - start[0], target[1] - start[1]
    lon = cos_h * dx + sin_h * dy
    lat = -sin_h * dx + cos_h * dy
    span_sq = lon * lon + lat * lat
    if span_sq == 0.0:
        points = np.broadcast_to(start, (len(distances), 2)).copy()
        tangents = np.broadcast_to([cos_h, sin_h], (len(distances), 2)).copy()
        return points, tangents, 0.0

    span = math.sqrt(span_sq)
    if abs(lat) <= 1e-9 * span:
        direction = np.array([dx, dy]) / span
        s = np.minimum(distances, span)[:, None]
        return start + s * direction, np.broadcast_to(direction, (len(distances), 2)).copy(), span

    curvature = 2.0 * lat / span_sq
    length = 2.0 * math.atan2(lat, lon) / curvature
    s = np.minimum(distances, length)
    angle = curvature * s
    local_x = np.sin(angle) / curvature
    local_y = (1.0 - np.cos(angle)) / curvature
    points = np.stack([
        start[0] + cos_h * local_x - sin_h * local_y,
        start[1] + sin_h * local_x + cos_h * local_y,
    ], axis=-1)
    tangents = np.stack([np.cos(heading + angle), np.sin(heading + angle)], axis=-1)
    return points, tangents, length


class GoalDirectedProposer(Proposer):
    """
    Constant-speed straight or single-arc paths toward a jittered intent point.

    The intent comes from the scenario; agents without one aim at their own
    constant-velocity position one step past the horizon. Agents that reach
    the goal early stay on it, and the returned goal is the last anchor when
    the path is longer than the horizon can cover.
    """

    kind = ProposerKind.GOAL_DIRECTED

    def propose(self, context, history, horizon, rng_seed, rollout_index=0):
        _check_request(context, history, horizon)
        rng = np.random.default_rng(rng_seed)
        dt = context.dt
        low, high = self.config.speed_scale_range
        jitter = self.config.goal_jitter_sigma
        steps = np.arange(1, horizon + 1)
        anchors, goals = [], []

        for index, states in enumerate(history):
            states = np.asarray(states, dtype=float)
            last = states[-1]
            start = last[:2]
            intent = context.intents[index]
            if intent is None:
                intent = start + last[2:] * (horizon + 1) * dt
            target = np.asarray(intent, dtype=float) + rng.normal(0.0, 1.0, size=2) * jitter
            speed = math.hypot(last[2], last[3]) * rng.uniform(low, high)

            points, tangents, length = arc_path(start, history_heading(states), target, speed * dt * steps)
            moving = (speed * dt * steps < length)[:, None]
            velocities = np.where(moving, tangents * speed, 0.0)
            anchors.append(Trajectory(np.hstack([points, velocities]), dt))
            goals.append(target if speed * dt * horizon >= length else points[-1])

        return Proposal(tuple(anchors), np.array(goals))


class ReplayProposer(Proposer):
    """
    Replays proposals stored in a proposals file.

    Rollout j of every MPS call reads stored proposal j. Stored anchors and
    goals are relative to the scene's logged current state: each call
    translates them by every agent's displacement since then, so later calls
    continue from the simulated positions. Anchors given as positions only get
    finite-differenced velocities, starting from each agent's current position.
    """

    kind = ProposerKind.REPLAY

    def __init__(self, config: ProposerConfig):
        super().__init__(config)
        from trajsim.scenario_io import load_proposals
        try:
            self.records: List[Dict] = load_proposals(config.replay_path)
        except FileNotFoundError as e:
            raise InputError(f"Replay file not found: {config.replay_path}") from e

    def propose(self, context, history, horizon, rng_seed, rollout_index=0):
        _check_request(context, history, horizon)
        if rollout_index >= len(self.records):
            raise InputError(
                f"replay file {self.config.replay_path} holds {len(self.records)} proposals, "
                f"rollout {rollout_index} requested"
            )
        record = self.records[rollout_index]
        if len(record['anchors']) != context.num_agents:
            raise InputError(f"stored proposal {rollout_index} covers {len(record['anchors'])} agents, "
                             f"scene has {context.num_agents}")

        anchors, shifts = [], []
        for states, logged, rows in zip(history, context.histories, record['anchors']):
            if len(rows) < horizon:
                raise InputError(f"stored proposal {rollout_index} has {len(rows)} steps, horizon is {horizon}")
            current = np.asarray(states[-1], dtype=float)[:2]
            shift = current - np.asarray(logged[-1], dtype=float)[:2]
            rows = np.array(rows[:horizon], dtype=float)
            rows[:, :2] += shift
            if rows.shape[1] == 2:
                rows = fill_velocities(rows, context.dt, start=current)
            anchors.append(Trajectory(rows, context.dt))
            shifts.append(shift)

        full_length = all(len(rows) == horizon for rows in record['anchors'])
        if full_length:
            goals = record['goals'] + np.array(shifts).reshape(-1, 2)
        else:
            goals = np.array([anchor.states[-1, :2] for anchor in anchors])
        return Proposal(tuple(anchors), goals)


_BACKENDS = {
    ProposerKind.CONSTANT_VELOCITY: ConstantVelocityProposer,
    ProposerKind.GOAL_DIRECTED: GoalDirectedProposer,
    ProposerKind.REPLAY: ReplayProposer,
}


def create_proposer(config: ProposerConfig) -> Proposer:
    """
    Create the proposer backend named by a configuration.

    Args:
        config: Proposer configuration

    Returns:
        Proposer: Configured backend

    Raises:
        InputError: If a replay file is missing or malformed
    """
    return _BACKENDS[config.kind](config)
