"""
File: rollout.py
Path: trajsim/rollout.py
Purpose: Model predictive simulation step: propose, smooth, score and select a joint rollout
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

from concurrent.futures import Executor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from trajsim.core import SceneContext, Trajectory, derive_seed, history_heading
from trajsim.errors import ContractError, InputError, NumericalError
from trajsim.events import SimEvent, log_sim_event
from trajsim.factors import (
    FactorWeights, GaussianFieldParams, interaction_energy, smoothing_energy,
)
from trajsim.proposer import Proposer
from trajsim.solver import SolveReport, SolverParams, smooth_trajectory
from trajsim.validators import validate_choice, validate_positive, validate_positive_int


class Selection:
    """How the committed rollout is picked from the J candidates."""
    SOFTMIN = 'softmin'
    UNIFORM = 'uniform'

    ALL = (SOFTMIN, UNIFORM)


class EnergyMode:
    """Which factors make up the rollout energy used for selection."""
    FULL = 'full'
    INTERACTION = 'interaction'

    ALL = (FULL, INTERACTION)


@dataclass(frozen=True)
class MpsParams:
    """
    Parameters of one model predictive simulation step.

    softmin_temperature left as None falls back to weights.softmin_temperature.
    Energies are divided by N * F before the softmin when normalize_energies is set.
    """
    num_rollouts: int = 60
    horizon: int = 80
    chunk_size: int = 10
    softmin_temperature: Optional[float] = None
    weights: FactorWeights = field(default_factory=FactorWeights)
    solver: SolverParams = field(default_factory=SolverParams)
    field_params: GaussianFieldParams = field(default_factory=GaussianFieldParams)
    selection: str = Selection.SOFTMIN
    energy_mode: str = EnergyMode.FULL
    goal_in_smoothing: bool = True
    normalize_energies: bool = True

    def __post_init__(self):
        checks = [
            validate_positive_int(self.num_rollouts, 'num_rollouts'),
            validate_positive_int(self.horizon, 'horizon', minimum=2),
            validate_positive_int(self.chunk_size, 'chunk_size'),
            validate_choice(self.selection, 'selection', Selection.ALL),
            validate_choice(self.energy_mode, 'energy_mode', EnergyMode.ALL),
        ]
        if self.softmin_temperature is not None:
            checks.append(validate_positive(self.softmin_temperature, 'softmin_temperature'))
        for is_valid, error in checks:
            if not is_valid:
                raise ContractError(error)
        if self.chunk_size > self.horizon:
            raise ContractError("chunk_size must not exceed the horizon")

    @property
    def temperature(self) -> float:
        if self.softmin_temperature is not None:
            return self.softmin_temperature
        return self.weights.softmin_temperature

    @property
    def smoothing_weights(self) -> FactorWeights:
        """Weights used by the Gauss-Newton stage and the smoothing energy."""
        if self.goal_in_smoothing:
            return self.weights
        return replace(self.weights, w_goal=0.0)

    def as_dict(self) -> Dict:
        values = asdict(self)
        values['softmin_temperature'] = self.temperature
        return values

    @classmethod
    def from_dict(cls, values: Dict) -> 'MpsParams':
        values = dict(values)
        values['weights'] = FactorWeights(**values.get('weights', {}))
        values['solver'] = SolverParams(**values.get('solver', {}))
        values['field_params'] = GaussianFieldParams(**values.get('field_params', {}))
        return cls(**values)


@dataclass(frozen=True, eq=False)
class RolloutResult:
    """
    One smoothed and scored joint rollout.

    Attributes:
        index: Rollout index j
        trajectories: Smoothed trajectory per agent, length F
        energy: Rollout energy E^j (before normalization)
        smoothing_energy: Sum of per-agent smoothing energies
        interaction_energy: Obstacle plus collision energy
        smoothing_reports: Solver report per agent
        anchors: Proposed anchors per agent
        goals: Proposed goals, shape (N, 2)
    """
    index: int
    trajectories: Tuple[Trajectory, ...]
    energy: float
    smoothing_energy: float
    interaction_energy: float
    smoothing_reports: Tuple[SolveReport, ...]
    anchors: Tuple[Trajectory, ...] = ()
    goals: np.ndarray = None


class MpsOutcome(NamedTuple):
    """Return value of mps_step."""
    chunk: Tuple[Trajectory, ...]
    results: List[RolloutResult]
    selected: int


def softmin_probabilities(energies: Sequence[float], temperature: float) -> np.ndarray:
    """
    Selection probabilities proportional to exp(-E / temperature).

    +inf energies get probability 0.

    Raises:
        InputError: If the list is empty, holds NaN or -inf, or every energy is +inf
    """
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        raise InputError("softmin needs at least one energy")
    if np.any(np.isnan(energies)) or np.any(energies == -np.inf):
        raise InputError("softmin energies must not be NaN or -inf")
    if not temperature > 0:
        raise ContractError("softmin temperature must be greater than zero")
    finite = np.isfinite(energies)
    if not np.any(finite):
        raise InputError("softmin needs at least one finite energy")
    probabilities = np.zeros_like(energies)
    probabilities[finite] = softmax(-energies[finite] / temperature)
    return probabilities


def softmin_sample(energies: Sequence[float], temperature: float, rng_seed: int) -> int:
    """
    Draw an index with probability proportional to exp(-E / temperature).

    Args:
        energies: Candidate energies
        temperature: Softmin temperature (> 0)
        rng_seed: Seed of the draw

    Returns:
        int: Selected index
    """
    probabilities = softmin_probabilities(energies, temperature)
    draw = np.random.default_rng(rng_seed).random()
    cumulative = np.cumsum(probabilities)
    index = int(np.searchsorted(cumulative, draw * cumulative[-1], side='right'))
    # Guard the right edge against rounding and skip zero-probability entries
    index = min(index, len(probabilities) - 1)
    while probabilities[index] == 0.0:
        index -= 1
    return index


def score_rollout(trajectories: Sequence[Trajectory], anchors: Sequence[Trajectory], goals: np.ndarray,
                  context: SceneContext, params: MpsParams,
                  initial_headings: Sequence[float]) -> Tuple[float, float, float]:
    """
    Energy of frozen smoothed trajectories, recomputed from scratch.

    Returns:
        tuple: (energy, smoothing energy, interaction energy)
    """
    weights = params.smoothing_weights
    smoothing = 0.0
    for traj, anchor, goal in zip(trajectories, anchors, goals):
        smoothing += smoothing_energy(traj, anchor, goal, weights)
    interaction = interaction_energy(trajectories, context, params.weights, params.field_params, initial_headings)
    energy = interaction if params.energy_mode == EnergyMode.INTERACTION else smoothing + interaction
    return energy, smoothing, interaction


def run_rollout(context: SceneContext, histories: Sequence[np.ndarray], proposer: Proposer,
                params: MpsParams, horizon: int, rng_seed: int, index: int,
                initial_headings: Sequence[float]) -> RolloutResult:
    """
    Propose, smooth every agent independently, then score the joint rollout.

    Args:
        context: Static scene
        histories: Per-agent conditioning window
        proposer: Anchor and goal source
        params: Step parameters
        horizon: Planning horizon F for this call
        rng_seed: Seed of the MPS call; rollout seeds derive from it
        index: Rollout index j
        initial_headings: Per-agent heading at the end of the history

    Returns:
        RolloutResult: Smoothed trajectories and energies
    """
    proposal = proposer.propose(context, histories, horizon, derive_seed(rng_seed, index, 'proposal'),
                                rollout_index=index)
    weights = params.smoothing_weights

    trajectories, reports = [], []
    for anchor, goal in zip(proposal.anchors, proposal.goals):
        smoothed, report = smooth_trajectory(anchor, anchor, goal, weights, context.dt, params.solver)
        trajectories.append(smoothed)
        reports.append(report)
        if not report.converged:
            log_sim_event(SimEvent.SOLVE_NOT_CONVERGED,
                          details=f"rollout {index}: {report.termination_reason} after {report.iterations} iterations")

    energy, smoothing, interaction = score_rollout(
        trajectories, proposal.anchors, proposal.goals, context, params, initial_headings)
    return RolloutResult(
        index=index,
        trajectories=tuple(trajectories),
        energy=energy,
        smoothing_energy=smoothing,
        interaction_energy=interaction,
        smoothing_reports=tuple(reports),
        anchors=proposal.anchors,
        goals=proposal.goals,
    )


def select_rollout(results: Sequence[RolloutResult], num_agents: int, horizon: int,
                   params: MpsParams, rng_seed: int) -> int:
    """
    Pick the committed rollout index.

    Raises:
        NumericalError: If no rollout has a finite energy
    """
    energies = np.array([result.energy for result in results], dtype=float)
    finite = np.isfinite(energies)
    if not np.any(finite):
        log_sim_event(SimEvent.NUMERICAL_FAILURE, details="every rollout energy is non-finite", success=False)
        raise NumericalError("every rollout energy is non-finite")
    if not np.all(finite):
        log_sim_event(SimEvent.NUMERICAL_FAILURE,
                      details=f"{int(np.sum(~finite))} rollout energies are non-finite and were excluded")
        energies = np.where(finite, energies, np.inf)

    select_seed = derive_seed(rng_seed, 'select')
    if params.selection == Selection.UNIFORM:
        candidates = np.flatnonzero(finite)
        return int(candidates[np.random.default_rng(select_seed).integers(len(candidates))])

    if params.normalize_energies:
        energies = energies / float(max(1, num_agents * horizon))
    return softmin_sample(energies, params.temperature, select_seed)


def mps_step(context: SceneContext, histories: Sequence[np.ndarray], proposer: Proposer,
             params: MpsParams, rng_seed: int, horizon: Optional[int] = None,
             executor: Optional[Executor] = None) -> MpsOutcome:
    """
    One model predictive simulation step.

    For each of the J rollouts: sample a proposal, initialize every agent at its
    anchors, smooth each agent independently, then score the frozen joint
    trajectories. A rollout is selected by softmin over the energies and its
    first chunk_size states are returned.

    Args:
        context: Static scene
        histories: Per-agent simulated past, arrays of shape (H, 4)
        proposer: Anchor and goal source
        params: Step parameters
        rng_seed: Seed of this call; rollout j uses a seed derived from (rng_seed, j)
        horizon: Planning horizon override (defaults to params.horizon)
        executor: Optional thread pool the J rollouts are mapped over

    Returns:
        MpsOutcome: per-agent chunk trajectories, all J RolloutResults in index
        order and the selected index

    Raises:
        ContractError: If the histories do not match the scene
        NumericalError: If every rollout energy is non-finite
    """
    horizon = params.horizon if horizon is None else horizon
    if horizon < 2:
        raise ContractError("planning horizon must be at least 2")
    if len(histories) != context.num_agents:
        raise ContractError(f"expected histories for {context.num_agents} agents, got {len(histories)}")
    for index, history in enumerate(histories):
        if len(history) == 0:
            raise InputError(f"agent {index} has an empty history")

    chunk_size = min(params.chunk_size, horizon)
    initial_headings = [history_heading(np.asarray(history)) for history in histories]

    def rollout(index: int) -> RolloutResult:
        return run_rollout(context, histories, proposer, params, horizon, rng_seed, index, initial_headings)

    indices = range(params.num_rollouts)
    if executor is not None:
        results = list(executor.map(rollout, indices))
    else:
        results = [rollout(index) for index in indices]

    selected = select_rollout(results, context.num_agents, horizon, params, rng_seed)
    winner = results[selected]
    chunk = tuple(traj.prefix(chunk_size) for traj in winner.trajectories)

    log_sim_event(
        SimEvent.ROLLOUT_SELECTED,
        details=f"rollout {selected} of {len(results)}, energy {winner.energy:.6g}, horizon {horizon}",
    )
    return MpsOutcome(chunk, results, selected)


def rollout_energies(results: Sequence[RolloutResult]) -> List[float]:
    """Energies of a list of results, in rollout order."""
    return [float(result.energy) for result in results]
