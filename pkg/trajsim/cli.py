"""
File: cli.py
Path: trajsim/cli.py
Purpose: Command-line subcommands: simulate, metrics, gen-scenario, inspect
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17

Exit codes: 0 success, 1 usage, 2 input data, 3 numerical failure.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from trajsim import __version__
from trajsim.config import (
    build_proposer_config, build_sim_params, output_dir, resolve_settings,
)
from trajsim.core import derive_seed
from trajsim.errors import (
    ContractError, InputError, NumericalError, SimulationError, TrajsimError, UsageError,
)
from trajsim.events import configure_logging, sim_logger
from trajsim.factors import energy_breakdown
from trajsim.metrics import compute_metrics
from trajsim.proposer import ProposerKind, create_proposer
from trajsim.reports import (
    generate_metrics_pdf, write_breakdown_csv, write_energies_csv, write_positions_csv,
)
from trajsim.rollout import EnergyMode, Selection, mps_step
from trajsim.scenario_io import (
    SCHEMA_VERSION, GeneratorParams, ScenarioKind, dumps_canonical, generate_scenario,
    load_rollouts, load_scenario, save_rollouts, save_scenario,
)
from trajsim.simulation import (
    first_call_proposals, init_trajectory, planning_horizon, simulate,
)


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class CliArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports bad flags as UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    """
    Everything a subcommand needs, resolved and validated before work begins.

    Attributes:
        subcommand: One of simulate, metrics, gen-scenario, inspect
        paths: Input paths keyed by role (scenario, rollouts, config)
        settings: Resolved settings (defaults < config file < flags)
        output_dir: Directory outputs are written to
        options: Subcommand-specific flags
    """
    subcommand: str
    paths: Dict[str, str] = field(default_factory=dict)
    settings: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = 'exports'
    options: Dict[str, Any] = field(default_factory=dict)

    def validate_paths(self):
        """Raise UsageError for any referenced input that does not exist."""
        for role, path in self.paths.items():
            if path and not os.path.isfile(path):
                raise UsageError(f"{role} file not found: {path}")

    def output_path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)


# ===================================================================
# Argument parsing
# ===================================================================

# flag dest -> settings key
_SETTING_FLAGS = {
    'K': 'K', 'T': 'T', 'J': 'J', 'chunk': 'CHUNK', 'horizon': 'HORIZON',
    'temperature': 'TEMPERATURE', 'w_motion': 'W_MOTION', 'w_goal': 'W_GOAL',
    'w_linear': 'W_LINEAR', 'w_angular': 'W_ANGULAR', 'w_obstacle': 'W_OBSTACLE',
    'w_collision': 'W_COLLISION', 'proposer': 'PROPOSER', 'position_noise': 'POSITION_NOISE',
    'goal_jitter': 'GOAL_JITTER', 'speed_scale_min': 'SPEED_SCALE_MIN',
    'speed_scale_max': 'SPEED_SCALE_MAX', 'replay': 'REPLAY_PATH', 'selection': 'SELECTION',
    'energy_mode': 'ENERGY_MODE', 'goal_in_smoothing': 'GOAL_IN_SMOOTHING', 'seed': 'SEED',
    'workers': 'WORKERS', 'rollout_threads': 'ROLLOUT_THREADS',
}


def _add_simulation_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('simulation parameters (override the config file)')
    group.add_argument('--config', help='KEY=VALUE config file')
    group.add_argument('--K', type=int, help='Number of samples (default: 32)')
    group.add_argument('--T', type=int, help='Steps per sample (default: 80)')
    group.add_argument('--J', type=int, help='Rollouts per MPS call (default: 60)')
    group.add_argument('--chunk', type=int, help='Steps committed per MPS call (default: 10)')
    group.add_argument('--horizon', type=int, help='Planning horizon (default: 80)')
    group.add_argument('--temperature', type=float, help='Softmin temperature (default: 1.0)')
    for name, default in (('motion', 1.0), ('goal', 1.0), ('linear', 1.0), ('angular', 2.0),
                          ('obstacle', 1.0), ('collision', 1.0)):
        group.add_argument(f'--w-{name}', dest=f'w_{name}', type=float,
                           help=f'Weight of the {name} factor (default: {default})')
    group.add_argument('--proposer', choices=ProposerKind.ALL, help='Proposal backend (default: goal_directed)')
    group.add_argument('--position-noise', type=float, help='Anchor position noise sigma, meters')
    group.add_argument('--goal-jitter', type=float, help='Goal jitter sigma, meters')
    group.add_argument('--speed-scale-min', type=float, help='Lower speed scale of goal-directed proposals')
    group.add_argument('--speed-scale-max', type=float, help='Upper speed scale of goal-directed proposals')
    group.add_argument('--replay', help='Proposals or rollout file for the replay proposer')
    group.add_argument('--selection', choices=Selection.ALL, help='Rollout selection (default: softmin)')
    group.add_argument('--energy-mode', choices=EnergyMode.ALL, help='Selection energy (default: full)')
    group.add_argument('--no-goal-in-smoothing', dest='goal_in_smoothing', action='store_false', default=None,
                       help='Leave the goal factor out of the smoothing stage')
    group.add_argument('--seed', type=int, help='Master seed (default: 0)')
    group.add_argument('--workers', type=int, help='Worker processes over samples (default: TRAJSIM_WORKERS or 1)')
    group.add_argument('--rollout-threads', type=int,
                       help='Threads per sample over the J rollouts of each MPS call (default: 1)')


def build_parser() -> CliArgumentParser:
    """Build the trajsim argument parser."""
    parser = CliArgumentParser(prog='trajsim', description='trajsim - closed-loop multi-agent trajectory simulator')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--verbose', '-v', action='store_true', help='Log every MPS call')
    subparsers = parser.add_subparsers(dest='subcommand', parser_class=CliArgumentParser)
    subparsers.required = True

    sim = subparsers.add_parser('simulate', help='Run K closed-loop samples on a scenario')
    sim.add_argument('scenario', help='Scenario JSON file')
    sim.add_argument('--out', help='Output directory (default: TRAJSIM_OUTPUT_DIR or exports)')
    sim.add_argument('--name', default='rollouts', help='Base name of the rollout file (default: rollouts)')
    sim.add_argument('--binary', action='store_true', help='Write the rollout file as an exact .npz archive')
    sim.add_argument('--plot-data', action='store_true', help='Also write positions.csv and energies.csv')
    sim.add_argument('--dump-proposals', action='store_true',
                     help='Store the proposals of the first MPS call of sample 0 for replay')
    _add_simulation_flags(sim)

    met = subparsers.add_parser('metrics', help='Compute metrics of a rollout file')
    met.add_argument('scenario', help='Scenario JSON file')
    met.add_argument('rollouts', help='Rollout file (.json or .npz)')
    met.add_argument('--out', help='Output directory (default: TRAJSIM_OUTPUT_DIR or exports)')
    met.add_argument('--pdf', action='store_true', help='Also write a PDF summary')
    met.add_argument('--require-min-ade', action='store_true',
                     help='Fail when the scenario has no logged future')

    gen = subparsers.add_parser('gen-scenario', help='Write a synthetic scenario')
    gen.add_argument('kind', choices=ScenarioKind.ALL)
    gen.add_argument('output', help='Scenario file to write')
    gen.add_argument('--seed', type=int, default=0, help='Generator seed (default: 0)')
    defaults = GeneratorParams()
    gen.add_argument('--num-agents', type=int, default=defaults.num_agents)
    gen.add_argument('--speed', type=float, default=defaults.speed)
    gen.add_argument('--separation', type=float, default=defaults.separation)
    gen.add_argument('--lane-width', type=float, default=defaults.lane_width)
    gen.add_argument('--future-length', type=int, default=defaults.future_length)
    gen.add_argument('--jitter', type=float, default=defaults.jitter)

    ins = subparsers.add_parser('inspect', help='Factor-energy breakdown of the first MPS call')
    ins.add_argument('scenario', help='Scenario JSON file')
    ins.add_argument('--sample', type=int, default=0, help='Sample index k whose first call is inspected')
    ins.add_argument('--out', help='Output directory for breakdown.csv')
    ins.add_argument('--csv', action='store_true', help='Also write breakdown.csv')
    _add_simulation_flags(ins)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Resolve parsed arguments into a validated RunConfig."""
    values = vars(args)
    overrides = {key: values.get(dest) for dest, key in _SETTING_FLAGS.items() if dest in values}
    paths = {}
    if values.get('config'):
        paths['config'] = values['config']
    if values.get('scenario'):
        paths['scenario'] = values['scenario']
    if values.get('rollouts'):
        paths['rollouts'] = values['rollouts']
    if values.get('replay'):
        paths['replay'] = values['replay']

    config = RunConfig(subcommand=args.subcommand, paths=paths, output_dir=output_dir(values.get('out')))
    config.validate_paths()
    if args.subcommand in ('simulate', 'inspect'):
        config.settings = resolve_settings(overrides, values.get('config'))
        replay = config.settings.get('REPLAY_PATH')
        if replay and not os.path.isfile(replay):
            raise UsageError(f"replay file not found: {replay}")
    skip = set(_SETTING_FLAGS) | {'subcommand', 'config', 'scenario', 'rollouts', 'out', 'verbose'}
    config.options = {key: value for key, value in values.items() if key not in skip}
    if args.subcommand == 'gen-scenario':
        config.options['seed'] = values['seed']
    return config


# ===================================================================
# Subcommands
# ===================================================================

def write_manifest(config: RunConfig, extra: Dict[str, Any], name: str = 'manifest.json') -> str:
    """Write the reproducibility manifest of a run."""
    manifest = {
        'trajsim_version': __version__,
        'subcommand': config.subcommand,
        'schema_version': SCHEMA_VERSION,
        'inputs': dict(sorted(config.paths.items())),
        'settings': config.settings,
        'options': config.options,
    }
    manifest.update(extra)
    os.makedirs(config.output_dir, exist_ok=True)
    path = config.output_path(name)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(dumps_canonical(manifest))
    return path


def run_simulate(config: RunConfig) -> int:
    """Simulate a scenario and write the rollout file (plus plot data and manifest)."""
    scenario = load_scenario(config.paths['scenario'])
    params = build_sim_params(config.settings)
    proposer_config = build_proposer_config(config.settings)
    proposer = create_proposer(proposer_config)
    workers = max(1, config.settings['WORKERS'])
    rollout_threads = max(1, config.settings['ROLLOUT_THREADS'])

    proposals = None
    if config.options.get('dump_proposals'):
        proposals = first_call_proposals(scenario.context, proposer, params)

    output = simulate(scenario.context, proposer, params, workers=workers, rollout_threads=rollout_threads)

    suffix = '.npz' if config.options.get('binary') else '.json'
    rollout_path = config.output_path(config.options.get('name', 'rollouts') + suffix)
    save_rollouts(output, rollout_path, params=params.as_dict(), proposer=proposer_config.as_dict(),
                  proposals=proposals)
    written = [rollout_path]
    if config.options.get('plot_data'):
        written.append(write_positions_csv(output, config.output_path('positions.csv')))
        written.append(write_energies_csv(output, config.output_path('energies.csv')))

    write_manifest(config, {
        'master_seed': params.master_seed,
        'sample_seeds': [derive_seed(params.master_seed, k, 'sample') for k in range(params.num_samples)],
        'params': params.as_dict(),
        'proposer': proposer_config.as_dict(),
        'outputs': written,
    })

    calls = output.mps_calls
    print(f"Simulated {params.num_samples} samples x {len(output.agent_ids)} agents x {params.total_steps} steps "
          f"({calls[0] if calls else 0} MPS calls per sample)")
    for path in written:
        print(f"  wrote {path}")
    return EXIT_OK


def run_metrics(config: RunConfig) -> int:
    """Compute, print and write the metrics report of a rollout file."""
    scenario = load_scenario(config.paths['scenario'])
    rollouts = load_rollouts(config.paths['rollouts'])
    report = compute_metrics(rollouts.output, scenario.context, scenario.logged_future,
                             require_min_ade=bool(config.options.get('require_min_ade')))

    text = json.dumps(report.as_dict(), indent=2)
    print(text)
    os.makedirs(config.output_dir, exist_ok=True)
    metrics_path = config.output_path('metrics.json')
    with open(metrics_path, 'w', encoding='utf-8') as handle:
        handle.write(text + '\n')
    written = [metrics_path]
    if config.options.get('pdf'):
        written.append(generate_metrics_pdf(report, config.output_path('metrics.pdf'),
                                            source=config.paths['rollouts']))
    write_manifest(config, {
        'rollout_master_seed': rollouts.output.master_seed,
        'rollout_schema_version': rollouts.schema_version,
        'outputs': written,
    }, name='metrics_manifest.json')
    return EXIT_OK


def run_gen_scenario(config: RunConfig) -> int:
    """Write a synthetic scenario file."""
    options = config.options
    try:
        params = GeneratorParams(
            num_agents=options['num_agents'],
            speed=options['speed'],
            separation=options['separation'],
            lane_width=options['lane_width'],
            future_length=options['future_length'],
            jitter=options['jitter'],
        )
        scenario = generate_scenario(options['kind'], params, seed=options['seed'])
    except ContractError as e:
        raise UsageError(str(e))
    path = save_scenario(scenario, options['output'])
    config.output_dir = os.path.dirname(path) or '.'
    write_manifest(config, {'generator': params.as_dict(), 'outputs': [path]},
                   name='gen_scenario_manifest.json')
    print(f"Wrote {options['kind']} scenario with {scenario.context.num_agents} agents to {path}")
    return EXIT_OK


def inspect_rows(scenario_context, proposer, params, sample: int = 0) -> List[Dict]:
    """Factor subtotals of every rollout of the first MPS call of a sample."""
    sample_seed = derive_seed(params.master_seed, sample, 'sample')
    window = [history[-params.history_window:] for history in init_trajectory(scenario_context)]
    horizon = planning_horizon(params, 0)
    outcome = mps_step(scenario_context, window, proposer, params.mps,
                       derive_seed(sample_seed, 1, 'mps'), horizon=horizon)
    rows = []
    for result in outcome.results:
        breakdown = energy_breakdown(result.trajectories, result.anchors, result.goals, scenario_context,
                                     params.mps.smoothing_weights, params.mps.field_params)
        row = {'rollout': result.index, 'selected': int(result.index == outcome.selected),
               'total': result.energy}
        row.update(breakdown)
        rows.append(row)
    return rows


def run_inspect(config: RunConfig) -> int:
    """Print per-rollout factor-energy breakdowns of one MPS call."""
    scenario = load_scenario(config.paths['scenario'])
    params = build_sim_params(config.settings)
    proposer = create_proposer(build_proposer_config(config.settings))
    rows = inspect_rows(scenario.context, proposer, params, sample=config.options.get('sample', 0))

    columns = ['rollout', 'selected', 'total', 'motion', 'goal', 'linear', 'angular', 'obstacle', 'collision']
    print(' '.join(f"{name:>10}" for name in columns))
    for row in rows:
        cells = [f"{row['rollout']:>10d}", f"{'*' if row['selected'] else '':>10}"]
        cells += [f"{row[name]:>10.4g}" for name in columns[2:]]
        print(' '.join(cells))

    if config.options.get('csv'):
        path = write_breakdown_csv(rows, config.output_path('breakdown.csv'))
        write_manifest(config, {'params': params.as_dict(), 'outputs': [path]}, name='inspect_manifest.json')
        print(f"  wrote {path}")
    return EXIT_OK


_HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    'simulate': run_simulate,
    'metrics': run_metrics,
    'gen-scenario': run_gen_scenario,
    'inspect': run_inspect,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the documented exit status."""
    if isinstance(error, SimulationError):
        cause = error.cause or error.__cause__
        if cause is not None:
            return exit_code_for(cause)
    if isinstance(error, (UsageError, FileNotFoundError)):
        return EXIT_USAGE
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(error, (InputError, OSError)):
        return EXIT_INPUT
    if isinstance(error, ContractError):
        return EXIT_USAGE
    return EXIT_INPUT


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        int: Exit status
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"Error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    configure_logging(verbose=args.verbose)
    try:
        config = config_from_args(args)
        return _HANDLERS[args.subcommand](config)
    except (TrajsimError, OSError) as e:
        code = exit_code_for(e)
        sim_logger.debug("Run failed", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return code
