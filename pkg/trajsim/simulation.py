"""
File: simulation.py
Path: trajsim/simulation.py
Purpose: Closed-loop outer loop producing K independent multi-agent rollouts of T steps
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

Each sample replans with mps_step every chunk and only ever conditions on the
logged history plus states it simulated itself; logged futures never reach
this module.
"""

from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Dict, List, Tuple

import numpy as np

from trajsim.core import HISTORY_WINDOW, Proposal, SceneContext, derive_seed
from trajsim.errors import ContractError, InputError, TrajsimError, SimulationError
from trajsim.events import SimEvent, log_sim_event
from trajsim.proposer import Proposer
from trajsim.rollout import MpsParams, mps_step, rollout_energies
from trajsim.validators import validate_positive_int


@dataclass(frozen=True)
class SimParams:
    """Outer-loop parameters."""
    num_samples: int = 32
    total_steps: int = 80
    mps: MpsParams = field(default_factory=MpsParams)
    master_seed: int = 0
    history_window: int = HISTORY_WINDOW

    def __post_init__(self):
        checks = [
            validate_positive_int(self.num_samples, 'num_samples'),
            validate_positive_int(self.total_steps, 'total_steps'),
            validate_positive_int(self.history_window, 'history_window'),
        ]
        for is_valid, error in checks:
            if not is_valid:
                raise ContractError(error)
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int):
            raise ContractError("master_seed must be an integer")

    def as_dict(self) -> Dict:
        values = asdict(self)
        values['mps'] = self.mps.as_dict()
        return values

    @classmethod
    def from_dict(cls, values: Dict) -> 'SimParams':
        values = dict(values)
        values['mps'] = MpsParams.from_dict(values.get('mps', {}))
        return cls(**values)


@dataclass(frozen=True)
class StepDiagnostics:
    """Record of one mps_step call inside a sample."""
    step: int
    horizon: int
    selected: int
    energies: Tuple[float, ...]

    def as_dict(self) -> Dict:
        return {'step': self.step, 'horizon': self.horizon, 'selected': self.selected,
                'energies': list(self.energies)}


@dataclass(frozen=True, eq=False)
class SimulationOutput:
    """
    Result of the outer loop.

    Attributes:
        samples: Array of shape (K, N, T, 4)
        agent_ids: Scene agent identifiers, in scene order
        dt: Step in seconds
        master_seed: Seed the sample seeds were derived from
        diagnostics: Per sample, one StepDiagnostics per mps_step call
    """
    samples: np.ndarray
    agent_ids: Tuple[str, ...]
    dt: float
    master_seed: int = 0
    diagnostics: Tuple[Tuple[StepDiagnostics, ...], ...] = ()

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 4 or samples.shape[3] != 4:
            raise ContractError(f"samples must have shape (K, N, T, 4), got {samples.shape}")
        if samples.shape[1] != len(self.agent_ids):
            raise ContractError("agent_ids must match the sample agent dimension")
        if not np.all(np.isfinite(samples)):
            raise InputError("simulated states must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        object.__setattr__(self, 'agent_ids', tuple(self.agent_ids))
        object.__setattr__(self, 'diagnostics', tuple(tuple(steps) for steps in self.diagnostics))

    @property
    def shape(self) -> Tuple[int, int, int]:
        num_samples, num_agents, num_steps, _ = self.samples.shape
        return num_samples, num_agents, num_steps

    @property
    def mps_calls(self) -> List[int]:
        """Number of mps_step calls made by each sample."""
        return [len(steps) for steps in self.diagnostics]


def init_trajectory(context: SceneContext) -> List[np.ndarray]:
    """
    Initial conditioning window of every agent: its logged history.

    Args:
        context: Scene whose histories start the simulation

    Returns:
        list: Per-agent arrays of shape (H, 4), copies of the logged histories

    Raises:
        InputError: If an agent has no history
    """
    windows = []
    for index, history in enumerate(context.histories):
        if len(history) == 0:
            raise InputError(f"agent {index} has no logged history")
        windows.append(np.array(history, dtype=float))
    return windows


def planning_horizon(params: SimParams, produced: int) -> int:
    """Horizon used when ``produced`` steps already exist: shrinks near T, never below 2."""
    remaining = params.total_steps - produced
    return max(2, min(params.mps.horizon, remaining))


def simulate_sample(context: SceneContext, proposer: Proposer, params: SimParams,
                    sample: int, rollout_threads: int = 1) -> Tuple[np.ndarray, Tuple[StepDiagnostics, ...]]:
    """
    Run one closed-loop sample.

    Args:
        context: Static scene
        proposer: Anchor and goal source
        params: Outer-loop parameters
        sample: Sample index k
        rollout_threads: Threads the J rollouts of each call are spread over

    Returns:
        tuple: (states of shape (N, T, 4), diagnostics per mps_step call)

    Raises:
        SimulationError: Wrapping any error raised by mps_step, with (k, t)
    """
    if context.num_agents == 0:
        return np.zeros((0, params.total_steps, 4)), ()

    sample_seed = derive_seed(params.master_seed, sample, 'sample')
    histories = init_trajectory(context)
    simulated = np.zeros((context.num_agents, params.total_steps, 4))
    produced = 0
    diagnostics = []

    pool = ThreadPoolExecutor(max_workers=rollout_threads) if rollout_threads > 1 else None
    log_sim_event(SimEvent.SAMPLE_STARTED, sample=sample)
    try:
        while produced < params.total_steps:
            step = produced + 1
            horizon = planning_horizon(params, produced)
            window = [history[-params.history_window:] for history in histories]
            try:
                outcome = mps_step(context, window, proposer, params.mps,
                                   derive_seed(sample_seed, step, 'mps'), horizon=horizon, executor=pool)
            except TrajsimError as error:
                raise SimulationError(str(error), sample, step, cause=error) from error

            count = min(len(outcome.chunk[0]), params.total_steps - produced)
            for index, traj in enumerate(outcome.chunk):
                states = traj.states[:count]
                simulated[index, produced:produced + count] = states
                histories[index] = np.vstack([histories[index], states])[-params.history_window:]
            diagnostics.append(StepDiagnostics(step, horizon, outcome.selected,
                                               tuple(rollout_energies(outcome.results))))
            log_sim_event(SimEvent.MPS_STEP, sample=sample, step=step,
                          details=f"horizon {horizon}, committed {count} states from rollout {outcome.selected}")
            produced += count
    finally:
        if pool is not None:
            pool.shutdown()

    log_sim_event(SimEvent.SAMPLE_FINISHED, sample=sample, details=f"{len(diagnostics)} MPS calls")
    return simulated, tuple(diagnostics)


def simulate(context: SceneContext, proposer: Proposer, params: SimParams, workers: int = 1,
             rollout_threads: int = 1) -> SimulationOutput:
    """
    Run K independent closed-loop samples.

    Samples are spread over ``workers`` processes; inside a sample the J
    rollouts of each call are spread over ``rollout_threads`` threads. Results
    depend on neither: every sample and rollout derives its own seed from the
    master seed and results are gathered in index order.

    Args:
        context: Static scene
        proposer: Anchor and goal source
        params: Outer-loop parameters
        workers: Number of worker processes (1 runs in-process)
        rollout_threads: Threads per sample for the J rollouts (1 runs serially)

    Returns:
        SimulationOutput: K x N x T states plus per-call diagnostics
    """
    run = partial(simulate_sample, context, proposer, params, rollout_threads=rollout_threads)
    sample_ids = range(params.num_samples)
    if workers > 1 and params.num_samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, sample_ids))
    else:
        outcomes = [run(k) for k in sample_ids]

    samples = np.stack([states for states, _ in outcomes])
    output = SimulationOutput(
        samples=samples,
        agent_ids=tuple(geom.agent_id for geom in context.agents),
        dt=context.dt,
        master_seed=params.master_seed,
        diagnostics=tuple(diagnostics for _, diagnostics in outcomes),
    )
    log_sim_event(SimEvent.SIMULATION_FINISHED,
                  details=f"{params.num_samples} samples x {context.num_agents} agents x {params.total_steps} steps")
    return output


def first_call_proposals(context: SceneContext, proposer: Proposer, params: SimParams,
                         sample: int = 0) -> List[Proposal]:
    """
    Regenerate the J proposals of the first mps_step call of one sample.

    Uses the same seed derivation as simulate, so a replay proposer fed with the
    result reproduces that call.
    """
    sample_seed = derive_seed(params.master_seed, sample, 'sample')
    call_seed = derive_seed(sample_seed, 1, 'mps')
    window = [history[-params.history_window:] for history in init_trajectory(context)]
    horizon = planning_horizon(params, 0)
    return [
        proposer.propose(context, window, horizon, derive_seed(call_seed, j, 'proposal'), rollout_index=j)
        for j in range(params.mps.num_rollouts)
    ]
