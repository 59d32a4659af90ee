"""
File: scenario_io.py
Path: trajsim/scenario_io.py
Purpose: Scenario, rollout and proposal file formats plus synthetic scenario generators
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

Scenario files are JSON. Floats are written with repr precision, so the text
form is lossless. Rollout files are JSON as well, or an .npz archive (exact
binary) whose header carries the same metadata as the JSON form.
"""

import io
import json
import math
import os
import zipfile
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from trajsim.core import DEFAULT_DT, DEFAULT_LENGTH, DEFAULT_WIDTH, AgentGeometry, Proposal, SceneContext
from trajsim.errors import ContractError, InputError, ScenarioFormatError, SchemaVersionError
from trajsim.events import SimEvent, log_sim_event
from trajsim.simulation import SimulationOutput, StepDiagnostics
from trajsim.validators import (
    validate_choice, validate_geometry, validate_non_negative, validate_point,
    validate_polyline, validate_positive, validate_positive_int, validate_state_row,
)


SCHEMA_VERSION = 1
SUPPORTED_VERSIONS = (SCHEMA_VERSION,)

SCENARIO_KIND = 'scenario'
ROLLOUT_KIND = 'rollouts'
PROPOSALS_KIND = 'proposals'

# Fixed member timestamp keeps .npz archives byte-identical across runs
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass(frozen=True, eq=False)
class ScenarioFile:
    """
    A parsed scenario.

    Attributes:
        context: Validated static scene
        logged_future: Per-agent logged future states of shape (T_log, 4), or None
        schema_version: Version the file declared
    """
    context: SceneContext
    logged_future: Optional[Tuple[np.ndarray, ...]] = None
    schema_version: int = SCHEMA_VERSION


@dataclass(frozen=True, eq=False)
class RolloutFile:
    """A loaded rollout file: the simulation output plus its parameter echo."""
    output: SimulationOutput
    params: Dict
    proposer: Dict
    proposals: Optional[List[Dict]] = None
    schema_version: int = SCHEMA_VERSION


# ===================================================================
# JSON plumbing
# ===================================================================

def _read_json(path: str) -> Dict:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"File not found: {path}")
    with open(path, 'r', encoding='utf-8') as handle:
        text = handle.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioFormatError(f"Invalid JSON in {path}: {e.msg}", line=e.lineno)
    if not isinstance(raw, dict):
        raise ScenarioFormatError(f"Top level of {path} must be an object")
    return raw


def _write_json(payload: Dict, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(dumps_canonical(payload))


def dumps_canonical(payload: Dict) -> str:
    """Canonical text form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, indent=2, sort_keys=True) + '\n'


def _check_version(raw: Dict, expected_kind: str):
    if 'schema_version' not in raw:
        raise ScenarioFormatError("Missing schema_version", field='schema_version')
    version = raw['schema_version']
    if version not in SUPPORTED_VERSIONS:
        raise SchemaVersionError(f"Unsupported schema_version {version!r}, expected one of {SUPPORTED_VERSIONS}",
                                 field='schema_version')
    kind = raw.get('kind', SCENARIO_KIND)
    if kind != expected_kind:
        raise ScenarioFormatError(f"Expected a {expected_kind} file, got {kind!r}", field='kind')


def _require(raw: Dict, key: str, path: str):
    if key not in raw:
        raise ScenarioFormatError("Missing required field", field=f"{path}{key}")
    return raw[key]


def _parse_rows(rows: Any, field: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise ScenarioFormatError("Expected a non-empty list of [x, y, vx, vy] rows", field=field)
    for index, row in enumerate(rows):
        is_valid, error = validate_state_row(row, f"{field}[{index}]")
        if not is_valid:
            raise ScenarioFormatError(error, field=f"{field}[{index}]")
    return np.array(rows, dtype=float).reshape(-1, 4)


def _parse_polylines(raw: Any, field: str, min_points: int) -> List[np.ndarray]:
    if not isinstance(raw, list):
        raise ScenarioFormatError("Expected a list of polylines", field=field)
    lines = []
    for index, points in enumerate(raw):
        name = f"{field}[{index}]"
        is_valid, error = validate_polyline(points, name)
        if is_valid and len(points) < min_points:
            is_valid, error = False, f"{name} must have at least {min_points} points"
        if not is_valid:
            raise ScenarioFormatError(error, field=name)
        lines.append(np.array(points, dtype=float))
    return lines


# ===================================================================
# Scenario files
# ===================================================================

def parse_scenario(raw: Dict) -> ScenarioFile:
    """
    Validate a decoded scenario document.

    Args:
        raw: Decoded JSON object

    Returns:
        ScenarioFile: Parsed scenario

    Raises:
        SchemaVersionError: If schema_version is unknown
        ScenarioFormatError: If a field, schema_version included, is missing or invalid; ``field`` names it
    """
    _check_version(raw, SCENARIO_KIND)

    dt = raw.get('dt', DEFAULT_DT)
    is_valid, error = validate_positive(dt, 'dt')
    if not is_valid:
        raise ScenarioFormatError(error, field='dt')

    agents_raw = _require(raw, 'agents', '')
    if not isinstance(agents_raw, list):
        raise ScenarioFormatError("Expected a list of agents", field='agents')

    geoms, histories, intents, futures = [], [], [], []
    seen_ids = set()
    for index, agent in enumerate(agents_raw):
        path = f"agents[{index}]"
        if not isinstance(agent, dict):
            raise ScenarioFormatError("Expected an object", field=path)

        agent_id = str(agent.get('id', f"agent_{index}"))
        if agent_id in seen_ids:
            raise ScenarioFormatError(f"Duplicate agent id '{agent_id}'", field=f"{path}.id")
        seen_ids.add(agent_id)

        length = agent.get('length', DEFAULT_LENGTH)
        width = agent.get('width', DEFAULT_WIDTH)
        is_valid, error = validate_geometry(length, width)
        if not is_valid:
            bad_field = 'width' if error.startswith('width') else 'length'
            raise ScenarioFormatError(error, field=f"{path}.{bad_field}")
        geoms.append(AgentGeometry(float(length), float(width), agent_id))

        histories.append(_parse_rows(_require(agent, 'history', f"{path}."), f"{path}.history"))

        intent = agent.get('intent')
        if intent is not None:
            is_valid, error = validate_point(intent, f"{path}.intent")
            if not is_valid:
                raise ScenarioFormatError(error, field=f"{path}.intent")
            intent = np.array(intent, dtype=float)
        intents.append(intent)

        future = agent.get('future')
        futures.append(None if future is None else _parse_rows(future, f"{path}.future"))

    road_edges = _parse_polylines(raw.get('road_edges', []), 'road_edges', 2)
    drivable_area = _parse_polylines(raw.get('drivable_area', []), 'drivable_area', 3)

    logged_future = None
    if any(future is not None for future in futures):
        if any(future is None for future in futures):
            raise ScenarioFormatError("Either every agent or no agent has a logged future", field='agents')
        if len({len(future) for future in futures}) > 1:
            raise ScenarioFormatError("Logged futures must share one length", field='agents')
        logged_future = tuple(futures)

    context = SceneContext(
        road_edges=tuple(road_edges),
        agents=tuple(geoms),
        histories=tuple(histories),
        dt=float(dt),
        drivable_area=tuple(drivable_area),
        intents=tuple(intents),
    )
    return ScenarioFile(context=context, logged_future=logged_future, schema_version=raw['schema_version'])


def load_scenario(path: str) -> ScenarioFile:
    """
    Load and validate a scenario file.

    Args:
        path: Path to a scenario JSON file

    Returns:
        ScenarioFile: Scene context and optional logged future

    Raises:
        FileNotFoundError: If the file does not exist
        ScenarioFormatError: On malformed content, with line or field diagnostics
    """
    scenario = parse_scenario(_read_json(path))
    log_sim_event(SimEvent.SCENARIO_LOADED,
                  details=f"{path}: {scenario.context.num_agents} agents, "
                          f"{len(scenario.context.road_edges)} road edges")
    return scenario


def scenario_to_dict(scenario: ScenarioFile) -> Dict:
    """Canonical document form of a scenario (every default written out)."""
    context = scenario.context
    agents = []
    for index, geom in enumerate(context.agents):
        agent = {
            'id': geom.agent_id,
            'length': float(geom.length),
            'width': float(geom.width),
            'history': context.histories[index].tolist(),
            'intent': None if context.intents[index] is None else context.intents[index].tolist(),
        }
        if scenario.logged_future is not None:
            agent['future'] = np.asarray(scenario.logged_future[index]).tolist()
        agents.append(agent)
    return {
        'schema_version': SCHEMA_VERSION,
        'kind': SCENARIO_KIND,
        'dt': float(context.dt),
        'agents': agents,
        'road_edges': [edge.tolist() for edge in context.road_edges],
        'drivable_area': [polygon.tolist() for polygon in context.drivable_area],
    }


def canonicalize(raw: Dict) -> str:
    """Canonical text of a decoded scenario document."""
    return dumps_canonical(scenario_to_dict(parse_scenario(raw)))


def save_scenario(scenario: ScenarioFile, path: str) -> str:
    """
    Write a scenario in canonical form.

    Returns:
        str: Path written
    """
    _write_json(scenario_to_dict(scenario), path)
    log_sim_event(SimEvent.FILE_WRITTEN, details=path)
    return path


# ===================================================================
# Proposals
# ===================================================================

def proposals_to_list(proposals: Sequence[Proposal]) -> List[Dict]:
    return [
        {
            'anchors': [anchor.states.tolist() for anchor in proposal.anchors],
            'goals': np.asarray(proposal.goals).tolist(),
        }
        for proposal in proposals
    ]


def _parse_proposals(raw: Any, field: str) -> List[Dict]:
    if not isinstance(raw, list) or not raw:
        raise ScenarioFormatError("Expected a non-empty list of proposals", field=field)
    records = []
    for index, entry in enumerate(raw):
        path = f"{field}[{index}]"
        if not isinstance(entry, dict):
            raise ScenarioFormatError("Expected an object", field=path)
        anchors = []
        for agent, rows in enumerate(_require(entry, 'anchors', f"{path}.")):
            name = f"{path}.anchors[{agent}]"
            array = np.array(rows, dtype=float) if isinstance(rows, list) else None
            if array is None or array.ndim != 2 or array.shape[1] not in (2, 4) or len(array) < 2:
                raise ScenarioFormatError("Anchors must be a list of [x, y] or [x, y, vx, vy] rows", field=name)
            if not np.all(np.isfinite(array)):
                raise ScenarioFormatError("Anchors must be finite", field=name)
            anchors.append(array)
        goals = np.array(_require(entry, 'goals', f"{path}."), dtype=float)
        if goals.shape != (len(anchors), 2) or not np.all(np.isfinite(goals)):
            raise ScenarioFormatError("Goals must be one finite [x, y] point per agent", field=f"{path}.goals")
        records.append({'anchors': anchors, 'goals': goals})
    return records


def save_proposals(proposals: Sequence[Proposal], path: str, dt: float = DEFAULT_DT) -> str:
    """
    Write a standalone proposals file readable by the replay proposer.

    Returns:
        str: Path written
    """
    payload = {
        'schema_version': SCHEMA_VERSION,
        'kind': PROPOSALS_KIND,
        'dt': float(dt),
        'proposals': proposals_to_list(proposals),
    }
    _write_json(payload, path)
    log_sim_event(SimEvent.FILE_WRITTEN, details=f"{path} ({len(proposals)} proposals)")
    return path


def load_proposals(path: str) -> List[Dict]:
    """
    Read proposals from a proposals file or from the proposals section of a rollout file.

    Args:
        path: Proposals JSON, rollout JSON or rollout .npz

    Returns:
        list: One dict per rollout index with 'anchors' (per-agent arrays of
        shape (F, 2) or (F, 4)) and 'goals' (array of shape (N, 2))

    Raises:
        FileNotFoundError: If the file does not exist
        InputError: If the file has no proposals
    """
    if path.endswith('.npz'):
        header = _read_npz(path)[0]
    else:
        header = _read_json(path)
    kind = header.get('kind')
    if kind == PROPOSALS_KIND:
        _check_version(header, PROPOSALS_KIND)
    else:
        _check_version(header, ROLLOUT_KIND)
        if not header.get('proposals'):
            raise InputError(f"Rollout file {path} has no proposals section")
    return _parse_proposals(header.get('proposals'), 'proposals')


# ===================================================================
# Rollout files
# ===================================================================

def _rollout_header(output: SimulationOutput, params: Optional[Dict], proposer: Optional[Dict],
                    proposals: Optional[Sequence[Proposal]]) -> Dict:
    header = {
        'schema_version': SCHEMA_VERSION,
        'kind': ROLLOUT_KIND,
        'agent_ids': list(output.agent_ids),
        'dt': float(output.dt),
        'master_seed': int(output.master_seed),
        'shape': list(output.samples.shape),
        'params': params or {},
        'proposer': proposer or {},
        'diagnostics': [[step.as_dict() for step in steps] for steps in output.diagnostics],
    }
    if proposals:
        header['proposals'] = proposals_to_list(proposals)
    return header


def save_rollouts(output: SimulationOutput, path: str, params: Optional[Dict] = None,
                  proposer: Optional[Dict] = None, proposals: Optional[Sequence[Proposal]] = None) -> str:
    """
    Write a rollout file.

    A path ending in .npz is written as an exact binary archive; anything else is
    JSON text. Both carry the seeds, the parameter echo and the per-call
    diagnostics.

    Args:
        output: Simulation output
        path: Destination path
        params: Parameter echo, typically SimParams.as_dict()
        proposer: Proposer configuration echo
        proposals: Optional proposals to store for replay

    Returns:
        str: Path written
    """
    header = _rollout_header(output, params, proposer, proposals)
    if path.endswith('.npz'):
        _write_npz(header, output.samples, path)
    else:
        header['samples'] = output.samples.tolist()
        _write_json(header, path)
    log_sim_event(SimEvent.FILE_WRITTEN, details=f"{path} (samples {tuple(output.samples.shape)})")
    return path


def _write_npz(header: Dict, samples: np.ndarray, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    members = {
        'header.npy': np.array(dumps_canonical(header)),
        'samples.npy': np.ascontiguousarray(samples, dtype='<f8'),
    }
    with zipfile.ZipFile(path, 'w', compression=zipfile.ZIP_STORED) as archive:
        for name, array in members.items():
            buffer = io.BytesIO()
            np.save(buffer, array, allow_pickle=False)
            info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
            archive.writestr(info, buffer.getvalue())


def _read_npz(path: str) -> Tuple[Dict, np.ndarray]:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"File not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            header = json.loads(archive['header'].item())
            samples = np.array(archive['samples'])
    except (KeyError, ValueError, OSError, zipfile.BadZipFile) as e:
        raise ScenarioFormatError(f"Unreadable rollout archive {path}: {e}")
    return header, samples


def load_rollouts(path: str) -> RolloutFile:
    """
    Load a rollout file written by save_rollouts.

    Raises:
        FileNotFoundError: If the file does not exist
        ScenarioFormatError: On malformed content
        SchemaVersionError: On an unknown schema_version
    """
    if path.endswith('.npz'):
        header, samples = _read_npz(path)
    else:
        header = _read_json(path)
        samples = None
    _check_version(header, ROLLOUT_KIND)

    if samples is None:
        try:
            samples = np.array(_require(header, 'samples', ''), dtype=float)
        except (TypeError, ValueError):
            raise ScenarioFormatError("Samples must be a K x N x T x 4 numeric array", field='samples')
    if samples.ndim != 4 or samples.shape[3] != 4:
        raise ScenarioFormatError(f"Samples must have shape (K, N, T, 4), got {samples.shape}", field='samples')
    if list(samples.shape) != header.get('shape', list(samples.shape)):
        raise ScenarioFormatError("Samples do not match the declared shape", field='shape')

    try:
        diagnostics = tuple(
            tuple(StepDiagnostics(entry['step'], entry['horizon'], entry['selected'], tuple(entry['energies']))
                  for entry in steps)
            for steps in header.get('diagnostics', [])
        )
    except (KeyError, TypeError) as e:
        raise ScenarioFormatError(f"Malformed diagnostics entry: {e}", field='diagnostics')
    try:
        output = SimulationOutput(
            samples=samples,
            agent_ids=tuple(_require(header, 'agent_ids', '')),
            dt=float(header.get('dt', DEFAULT_DT)),
            master_seed=int(header.get('master_seed', 0)),
            diagnostics=diagnostics,
        )
    except (ContractError, InputError) as e:
        raise ScenarioFormatError(str(e), field='samples')

    proposals = header.get('proposals')
    return RolloutFile(
        output=output,
        params=header.get('params', {}),
        proposer=header.get('proposer', {}),
        proposals=_parse_proposals(proposals, 'proposals') if proposals else None,
        schema_version=header['schema_version'],
    )


# ===================================================================
# Synthetic scenario generators
# ===================================================================

class ScenarioKind:
    """Synthetic scene layouts."""
    HEAD_ON = 'head_on'
    CROSSING = 'crossing'
    MERGE = 'merge'
    STATIONARY = 'stationary'

    ALL = (HEAD_ON, CROSSING, MERGE, STATIONARY)


@dataclass(frozen=True)
class GeneratorParams:
    """
    Knobs of the synthetic scene generators.

    Attributes:
        num_agents: Agents in crossing (at most 4) and stationary scenes
        speed: Nominal speed in m/s
        separation: Head-on gap between the two centers, in meters
        lane_width: Lane width in meters; road edges sit a lane away from the centerline
        history_length: Logged frames per agent, current frame included
        future_length: Logged future steps per agent
        dt: Step in seconds
        extent: Half length of the generated road, in meters
        jitter: Scale of the seeded perturbation of speeds and offsets
    """
    num_agents: int = 4
    speed: float = 10.0
    separation: float = 60.0
    lane_width: float = 3.5
    history_length: int = 11
    future_length: int = 80
    dt: float = DEFAULT_DT
    extent: float = 150.0
    jitter: float = 1.0

    def __post_init__(self):
        checks = [
            validate_positive_int(self.num_agents, 'num_agents'),
            validate_non_negative(self.speed, 'speed'),
            validate_positive(self.separation, 'separation'),
            validate_positive(self.lane_width, 'lane_width'),
            validate_positive_int(self.history_length, 'history_length'),
            validate_positive_int(self.future_length, 'future_length'),
            validate_positive(self.dt, 'dt'),
            validate_positive(self.extent, 'extent'),
            validate_non_negative(self.jitter, 'jitter'),
        ]
        for is_valid, error in checks:
            if not is_valid:
                raise ContractError(error)

    def as_dict(self) -> Dict:
        return asdict(self)


def _straight_track(position, velocity, count: int, dt: float, first: int) -> np.ndarray:
    """Constant-velocity states at frames first .. first + count - 1 relative to the current one."""
    frames = np.arange(first, first + count)[:, None] * dt
    positions = np.asarray(position, dtype=float) + frames * np.asarray(velocity, dtype=float)
    return np.hstack([positions, np.broadcast_to(velocity, positions.shape)])


def _straight_road(extent: float, low: float, high: float) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    edges = [np.array([[-extent, low], [extent, low]]), np.array([[-extent, high], [extent, high]])]
    area = [np.array([[-extent, low], [extent, low], [extent, high], [-extent, high]])]
    return edges, area


def _cross_road(extent: float, half: float) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    edges = [
        np.array([[sx * extent, sy * half], [sx * half, sy * half], [sx * half, sy * extent]])
        for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)
    ]
    area = [
        np.array([[-extent, -half], [extent, -half], [extent, half], [-extent, half]]),
        np.array([[-half, -extent], [half, -extent], [half, extent], [-half, extent]]),
    ]
    return edges, area


def _head_on(params: GeneratorParams, rng: np.random.Generator):
    half = 0.5 * params.separation
    speeds = params.speed + params.jitter * rng.uniform(-0.5, 0.5, size=2)
    lateral = params.jitter * rng.uniform(-0.3, 0.3, size=2)
    starts = [np.array([-half, lateral[0]]), np.array([half, lateral[1]])]
    velocities = [np.array([speeds[0], 0.0]), np.array([-speeds[1], 0.0])]
    edges, area = _straight_road(params.extent, -params.lane_width, params.lane_width)
    return starts, velocities, edges, area


def _crossing(params: GeneratorParams, rng: np.random.Generator):
    if params.num_agents > 4:
        raise ContractError("crossing scenes hold at most 4 agents")
    offset = 0.5 * params.lane_width
    base = 0.5 * params.separation
    # Keep-right lanes; arm i starts 15 m further out than arm i - 1
    arms = [
        (np.array([1.0, 0.0]), np.array([0.0, -offset])),
        (np.array([0.0, 1.0]), np.array([offset, 0.0])),
        (np.array([-1.0, 0.0]), np.array([0.0, offset])),
        (np.array([0.0, -1.0]), np.array([-offset, 0.0])),
    ]
    starts, velocities = [], []
    for index in range(params.num_agents):
        direction, lane = arms[index]
        distance = base + 15.0 * index + params.jitter * rng.uniform(-1.0, 1.0)
        starts.append(lane - direction * distance)
        velocities.append(direction * params.speed)
    edges, area = _cross_road(params.extent, params.lane_width)
    return starts, velocities, edges, area


def _merge(params: GeneratorParams, rng: np.random.Generator):
    gap = 10.0 + params.jitter * rng.uniform(0.0, 2.0)
    starts = [np.array([-0.5 * params.separation, 0.0]),
              np.array([-0.5 * params.separation - gap, params.lane_width])]
    velocities = [np.array([params.speed, 0.0]), np.array([params.speed, 0.0])]
    edges, area = _straight_road(params.extent, -0.5 * params.lane_width, 1.5 * params.lane_width)
    return starts, velocities, edges, area


def _stationary(params: GeneratorParams, rng: np.random.Generator):
    columns = math.ceil(params.num_agents / 2)
    starts = []
    for index in range(params.num_agents):
        column, row = divmod(index, 2)
        x = 8.0 * (column - 0.5 * (columns - 1)) + params.jitter * rng.uniform(-0.5, 0.5)
        starts.append(np.array([x, row * params.lane_width]))
    velocities = [np.zeros(2) for _ in starts]
    edges, area = _straight_road(params.extent, -params.lane_width, 2.0 * params.lane_width)
    return starts, velocities, edges, area


_LAYOUTS = {
    ScenarioKind.HEAD_ON: _head_on,
    ScenarioKind.CROSSING: _crossing,
    ScenarioKind.MERGE: _merge,
    ScenarioKind.STATIONARY: _stationary,
}


def generate_scenario(kind: str, params: Optional[GeneratorParams] = None, seed: int = 0) -> ScenarioFile:
    """
    Build a synthetic scenario.

    Histories and logged futures are constant-velocity tracks through the
    current frame, except the merging agent whose logged future drifts into the
    main lane. Intents are the logged end points.

    Args:
        kind: One of ScenarioKind.ALL
        params: Generator parameters (defaults when None)
        seed: Seed of the perturbation; equal seeds give identical scenes

    Returns:
        ScenarioFile: Scene, logged future included

    Raises:
        ContractError: On an unknown kind or invalid parameters
    """
    is_valid, error = validate_choice(kind, 'kind', ScenarioKind.ALL)
    if not is_valid:
        raise ContractError(error)
    params = params or GeneratorParams()
    rng = np.random.default_rng(seed)
    starts, velocities, edges, area = _LAYOUTS[kind](params, rng)

    dt = params.dt
    histories, futures, intents, geoms = [], [], [], []
    for index, (start, velocity) in enumerate(zip(starts, velocities)):
        histories.append(_straight_track(start, velocity, params.history_length, dt, 1 - params.history_length))
        future = _straight_track(start, velocity, params.future_length, dt, 1)
        if kind == ScenarioKind.MERGE and index == 1:
            # Lateral blend into the main lane over the first half of the future
            blend = np.clip(np.arange(1, params.future_length + 1) / (0.5 * params.future_length), 0.0, 1.0)
            future[:, 1] = start[1] * (1.0 - blend)
            future[:, 3] = np.diff(np.concatenate([[start[1]], future[:, 1]])) / dt
        futures.append(future)
        intents.append(future[-1, :2].copy())
        geoms.append(AgentGeometry(agent_id=f"agent_{index}"))

    context = SceneContext(
        road_edges=tuple(edges),
        agents=tuple(geoms),
        histories=tuple(histories),
        dt=dt,
        drivable_area=tuple(area),
        intents=tuple(intents),
    )
    return ScenarioFile(context=context, logged_future=tuple(futures))
