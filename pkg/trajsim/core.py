"""
File: core.py
Path: trajsim/core.py
Purpose: Domain types and geometric primitives shared by every simulator module
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

All types here are immutable values; arrays handed out by them are read-only.
"""

import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from trajsim.errors import ContractError, InputError
from trajsim.validators import validate_geometry, validate_positive


EPSILON_SPEED = 1e-3          # m/s, below this the heading is carried forward
DEFAULT_DT = 0.1              # s, 10 Hz
DEFAULT_LENGTH = 4.8          # m
DEFAULT_WIDTH = 2.0           # m
EDGE_SPACING = 0.5            # m, road-edge densification step
HISTORY_WINDOW = 11           # 1 s of past at 10 Hz plus the current frame

# Box offsets in the agent frame, in units of (length / 2, width / 2):
# 4 corners in polygon order, 4 edge midpoints, then the center.
_BOX_UNIT_OFFSETS = np.array([
    [1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0],
    [1.0, 0.0], [0.0, -1.0], [-1.0, 0.0], [0.0, 1.0],
    [0.0, 0.0],
])


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def as_state_array(state) -> np.ndarray:
    """Return an [x, y, vx, vy] float array for an AgentState or any 4-sequence."""
    if isinstance(state, AgentState):
        return state.as_array()
    return np.asarray(state, dtype=float)


@dataclass(frozen=True)
class AgentState:
    """2D position (m) and velocity (m/s) of one agent at one timestep."""
    x: float
    y: float
    vx: float
    vy: float

    def __post_init__(self):
        for name in ('x', 'y', 'vx', 'vy'):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InputError(f"AgentState.{name} must be finite, got {value}")

    @classmethod
    def from_array(cls, row) -> 'AgentState':
        x, y, vx, vy = (float(v) for v in row)
        return cls(x, y, vx, vy)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.vx, self.vy], dtype=float)

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class AgentGeometry:
    """Footprint of an agent; length is measured along the heading."""
    length: float = DEFAULT_LENGTH
    width: float = DEFAULT_WIDTH
    agent_id: str = ''

    def __post_init__(self):
        is_valid, error = validate_geometry(self.length, self.width)
        if not is_valid:
            raise ContractError(f"Invalid geometry for agent '{self.agent_id}': {error}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Fixed-step sequence of agent states.

    Attributes:
        states: Array of shape (F, 4) holding [x, y, vx, vy] rows
        dt: Step between consecutive states in seconds
    """
    states: np.ndarray
    dt: float = DEFAULT_DT

    def __post_init__(self):
        states = np.array(self.states, dtype=float)
        if states.ndim != 2 or states.shape[1] != 4 or states.shape[0] < 1:
            raise ContractError(f"Trajectory states must have shape (F, 4) with F >= 1, got {states.shape}")
        if not np.all(np.isfinite(states)):
            raise InputError("Trajectory states must be finite")
        is_valid, error = validate_positive(self.dt, 'dt')
        if not is_valid:
            raise ContractError(error)
        object.__setattr__(self, 'states', _frozen(states))

    @classmethod
    def from_states(cls, states: Sequence[AgentState], dt: float = DEFAULT_DT) -> 'Trajectory':
        return cls(np.array([s.as_array() for s in states]), dt)

    def __len__(self) -> int:
        return self.states.shape[0]

    def state(self, t: int) -> AgentState:
        """Return the state at 0-based index t."""
        return AgentState.from_array(self.states[t])

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :2]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, 2:]

    def prefix(self, count: int) -> 'Trajectory':
        """Return the first ``count`` states as a new trajectory."""
        if not 1 <= count <= len(self):
            raise ContractError(f"prefix length {count} outside 1..{len(self)}")
        return Trajectory(self.states[:count], self.dt)


@dataclass(frozen=True, eq=False)
class SceneContext:
    """
    Static world of one scenario.

    Attributes:
        road_edges: Polylines as arrays of shape (P, 2), P >= 2
        agents: Geometry of each agent, in scene order
        histories: Logged past of each agent as arrays of shape (H, 4), H >= 1
        dt: Simulation step in seconds
        drivable_area: Polygons whose union is the drivable interior (may be empty)
        intents: Optional intent point per agent used by goal-directed proposals
    """
    road_edges: Tuple[np.ndarray, ...]
    agents: Tuple[AgentGeometry, ...]
    histories: Tuple[np.ndarray, ...]
    dt: float = DEFAULT_DT
    drivable_area: Tuple[np.ndarray, ...] = ()
    intents: Tuple[Optional[np.ndarray], ...] = field(default=())

    def __post_init__(self):
        is_valid, error = validate_positive(self.dt, 'dt')
        if not is_valid:
            raise ContractError(error)

        edges = []
        for index, edge in enumerate(self.road_edges):
            edge = np.array(edge, dtype=float)
            if edge.ndim != 2 or edge.shape[1] != 2 or edge.shape[0] < 2:
                raise InputError(f"road_edges[{index}] must have at least 2 points")
            if not np.all(np.isfinite(edge)):
                raise InputError(f"road_edges[{index}] must be finite")
            edges.append(_frozen(edge))

        if len(self.histories) != len(self.agents):
            raise ContractError("histories must cover exactly the scene agents")
        histories = []
        for index, history in enumerate(self.histories):
            history = np.array(history, dtype=float)
            if history.ndim != 2 or history.shape[1] != 4 or history.shape[0] < 1:
                raise InputError(f"agent {index} must have a non-empty history of [x, y, vx, vy] rows")
            if not np.all(np.isfinite(history)):
                raise InputError(f"agent {index} history must be finite")
            histories.append(_frozen(history))

        polygons = []
        for index, polygon in enumerate(self.drivable_area):
            polygon = np.array(polygon, dtype=float)
            if polygon.ndim != 2 or polygon.shape[1] != 2 or polygon.shape[0] < 3:
                raise InputError(f"drivable_area[{index}] must have at least 3 points")
            polygons.append(_frozen(polygon))

        intents = list(self.intents) or [None] * len(self.agents)
        if len(intents) != len(self.agents):
            raise ContractError("intents must cover exactly the scene agents")
        intents = [None if p is None else _frozen(np.array(p, dtype=float)) for p in intents]

        object.__setattr__(self, 'road_edges', tuple(edges))
        object.__setattr__(self, 'agents', tuple(self.agents))
        object.__setattr__(self, 'histories', tuple(histories))
        object.__setattr__(self, 'drivable_area', tuple(polygons))
        object.__setattr__(self, 'intents', tuple(intents))

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    @cached_property
    def edge_points(self) -> np.ndarray:
        """Road-edge points densified to at most EDGE_SPACING apart, shape (M, 2)."""
        return _frozen(densify_polylines(self.road_edges, EDGE_SPACING))

    @cached_property
    def edge_tree(self) -> Optional[cKDTree]:
        """KD-tree over ``edge_points``; None for a map without road edges."""
        if len(self.edge_points) == 0:
            return None
        return cKDTree(self.edge_points)


@dataclass(frozen=True, eq=False)
class Proposal:
    """
    Anchors and goals for every agent of one rollout.

    Attributes:
        anchors: One trajectory of length F per agent, in scene order
        goals: Array of shape (N, 2)
    """
    anchors: Tuple[Trajectory, ...]
    goals: np.ndarray

    def __post_init__(self):
        goals = np.array(self.goals, dtype=float).reshape(-1, 2)
        if goals.shape[0] != len(self.anchors):
            raise ContractError("anchors and goals must cover the same agents")
        lengths = {len(anchor) for anchor in self.anchors}
        if len(lengths) > 1:
            raise ContractError("all anchor trajectories must share one horizon")
        object.__setattr__(self, 'anchors', tuple(self.anchors))
        object.__setattr__(self, 'goals', _frozen(goals))

    @property
    def horizon(self) -> int:
        return len(self.anchors[0]) if self.anchors else 0


def heading_of(state, fallback: float = 0.0) -> float:
    """
    Heading of an agent derived from its velocity direction.

    Args:
        state: AgentState or [x, y, vx, vy]
        fallback: Heading returned when speed <= EPSILON_SPEED

    Returns:
        float: Heading in radians
    """
    _, _, vx, vy = as_state_array(state)
    if math.hypot(vx, vy) <= EPSILON_SPEED:
        return float(fallback)
    return math.atan2(vy, vx)


def headings_along(states: np.ndarray, initial_heading: float = 0.0) -> np.ndarray:
    """
    Headings along a state sequence, carrying the last moving heading forward.

    Args:
        states: Array of shape (F, 4)
        initial_heading: Heading used until the first above-threshold state

    Returns:
        numpy.ndarray: Headings of shape (F,)
    """
    states = np.asarray(states, dtype=float)
    velocities = states[:, 2:]
    moving = np.hypot(velocities[:, 0], velocities[:, 1]) > EPSILON_SPEED
    raw = np.arctan2(velocities[:, 1], velocities[:, 0])
    last_moving = np.maximum.accumulate(np.where(moving, np.arange(len(states)), -1))
    return np.where(last_moving >= 0, raw[np.maximum(last_moving, 0)], float(initial_heading))


def history_heading(history: np.ndarray) -> float:
    """Final heading of a logged or simulated history (0.0 if it never moved)."""
    return float(headings_along(history, 0.0)[-1])


def box_points(positions: np.ndarray, headings: np.ndarray, length: float, width: float) -> np.ndarray:
    """
    Vectorized collision checking points of oriented boxes.

    Args:
        positions: Centers of shape (..., 2)
        headings: Headings of shape (...)
        length: Box length along the heading
        width: Box width across the heading

    Returns:
        numpy.ndarray: Points of shape (..., 9, 2); corners first, center last
    """
    positions = np.asarray(positions, dtype=float)
    headings = np.asarray(headings, dtype=float)
    local = _BOX_UNIT_OFFSETS * np.array([0.5 * length, 0.5 * width])
    cos_h = np.expand_dims(np.cos(headings), -1)
    sin_h = np.expand_dims(np.sin(headings), -1)
    world_x = cos_h * local[:, 0] - sin_h * local[:, 1]
    world_y = sin_h * local[:, 0] + cos_h * local[:, 1]
    offsets = np.stack([world_x, world_y], axis=-1)
    return positions[..., None, :] + offsets


def oriented_box_points(state, geom: AgentGeometry, fallback_heading: float = 0.0) -> np.ndarray:
    """
    The 9 collision checking points of one agent.

    Args:
        state: AgentState or [x, y, vx, vy]
        geom: Agent footprint
        fallback_heading: Heading used when the agent is (nearly) stationary

    Returns:
        numpy.ndarray: Array of shape (9, 2): 4 corners, 4 edge midpoints, center
    """
    row = as_state_array(state)
    heading = heading_of(row, fallback_heading)
    return box_points(row[:2], heading, geom.length, geom.width)


def box_corners(positions: np.ndarray, headings: np.ndarray, length: float, width: float) -> np.ndarray:
    """Corners of oriented boxes in polygon order, shape (..., 4, 2)."""
    return box_points(positions, headings, length, width)[..., :4, :]


def densify_polylines(polylines: Sequence[np.ndarray], max_spacing: float = EDGE_SPACING) -> np.ndarray:
    """
    Resample polylines so consecutive points are at most ``max_spacing`` apart.

    Original vertices are kept.

    Args:
        polylines: Arrays of shape (P, 2)
        max_spacing: Largest allowed gap in meters

    Returns:
        numpy.ndarray: All points stacked, shape (M, 2)
    """
    chunks = []
    for line in polylines:
        line = np.asarray(line, dtype=float)
        starts, ends = line[:-1], line[1:]
        lengths = np.hypot(*(ends - starts).T)
        pieces = np.maximum(np.ceil(lengths / max_spacing).astype(int), 1)
        for start, end, count in zip(starts, ends, pieces):
            fractions = np.arange(count)[:, None] / count
            chunks.append(start + fractions * (end - start))
        chunks.append(line[-1:])
    if not chunks:
        return np.zeros((0, 2))
    return np.concatenate(chunks)


def fill_velocities(positions: np.ndarray, dt: float, start: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Build full states from positions by finite differencing.

    Args:
        positions: Array of shape (F, 2)
        dt: Step in seconds
        start: Position preceding the first row; forward difference is used without it

    Returns:
        numpy.ndarray: States of shape (F, 4)
    """
    positions = np.asarray(positions, dtype=float)
    if start is not None:
        previous = np.vstack([np.asarray(start, dtype=float)[None, :2], positions[:-1]])
        velocities = (positions - previous) / dt
    elif len(positions) > 1:
        steps = np.diff(positions, axis=0) / dt
        velocities = np.vstack([steps[:1], steps])
    else:
        velocities = np.zeros_like(positions)
    return np.hstack([positions, velocities])


def derive_seed(master_seed: int, *keys) -> int:
    """
    Deterministically derive a child seed from a master seed and a key path.

    Args:
        master_seed: Parent seed
        *keys: Indices and purpose tags, e.g. ``(j, 'proposal')``

    Returns:
        int: Seed in [0, 2**63)
    """
    payload = repr((int(master_seed),) + tuple(keys)).encode('utf-8')
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, 'little') & ((1 << 63) - 1)
