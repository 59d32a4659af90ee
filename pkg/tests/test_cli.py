"""
End-to-end tests of the trajsim command line.
"""

import json
import os

import numpy as np
import pytest

from trajsim.cli import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, exit_code_for, inspect_rows, main
from trajsim.core import SceneContext
from trajsim.errors import (
    ContractError, InputError, NumericalError, ScenarioFormatError, SimulationError, UsageError,
)
from trajsim.proposer import ProposerConfig, ProposerKind, create_proposer
from trajsim.rollout import MpsParams
from trajsim.scenario_io import generate_scenario, load_rollouts, load_scenario, save_rollouts, save_scenario
from trajsim.simulation import SimParams, SimulationOutput, simulate


SMALL = ['--K', '2', '--T', '20', '--J', '4', '--chunk', '10', '--horizon', '20', '--seed', '7']


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv('TRAJSIM_WORKERS', raising=False)
    monkeypatch.delenv('TRAJSIM_OUTPUT_DIR', raising=False)


@pytest.fixture
def scenario_path(tmp_path):
    path = str(tmp_path / 'head_on.json')
    assert main(['gen-scenario', 'head_on', path, '--seed', '3']) == EXIT_OK
    return path


def _read(path):
    with open(path, 'rb') as handle:
        return handle.read()


def test_gen_scenario_writes_loadable_file(scenario_path, tmp_path):
    scenario = load_scenario(scenario_path)
    assert scenario.context.num_agents == 2
    assert len(scenario.logged_future[0]) == 80
    assert os.path.isfile(tmp_path / 'gen_scenario_manifest.json')


def test_gen_scenario_rejects_bad_parameters(tmp_path):
    assert main(['gen-scenario', 'crossing', str(tmp_path / 'x.json'), '--num-agents', '6']) == EXIT_USAGE


def test_simulate_is_reproducible(scenario_path, tmp_path):
    for run in ('a', 'b'):
        assert main(['simulate', scenario_path, '--out', str(tmp_path / run)] + SMALL) == EXIT_OK
    assert _read(tmp_path / 'a' / 'rollouts.json') == _read(tmp_path / 'b' / 'rollouts.json')

    assert main(['simulate', scenario_path, '--out', str(tmp_path / 'c'), '--workers', '2'] + SMALL) == EXIT_OK
    assert _read(tmp_path / 'a' / 'rollouts.json') == _read(tmp_path / 'c' / 'rollouts.json')

    assert main(['simulate', scenario_path, '--out', str(tmp_path / 'd'), '--rollout-threads', '3'] + SMALL) == EXIT_OK
    assert _read(tmp_path / 'a' / 'rollouts.json') == _read(tmp_path / 'd' / 'rollouts.json')



def test_simulate_binary_output_is_reproducible(scenario_path, tmp_path):
    for run in ('a', 'b'):
        assert main(['simulate', scenario_path, '--out', str(tmp_path / run), '--binary'] + SMALL) == EXIT_OK
    assert _read(tmp_path / 'a' / 'rollouts.npz') == _read(tmp_path / 'b' / 'rollouts.npz')
    as_json = str(tmp_path / 'json')
    assert main(['simulate', scenario_path, '--out', as_json] + SMALL) == EXIT_OK
    np.testing.assert_array_equal(load_rollouts(str(tmp_path / 'a' / 'rollouts.npz')).output.samples,
                                  load_rollouts(os.path.join(as_json, 'rollouts.json')).output.samples)


def test_simulate_writes_diagnostics_and_manifest(scenario_path, tmp_path, capsys):
    out = str(tmp_path / 'run')
    assert main(['simulate', scenario_path, '--out', out, '--plot-data'] + SMALL) == EXIT_OK
    loaded = load_rollouts(os.path.join(out, 'rollouts.json'))
    assert loaded.output.shape == (2, 2, 20)
    assert loaded.output.mps_calls == [2, 2]
    assert loaded.params['mps']['num_rollouts'] == 4
    assert loaded.proposer['kind'] == ProposerKind.GOAL_DIRECTED

    with open(os.path.join(out, 'manifest.json'), encoding='utf-8') as handle:
        manifest = json.load(handle)
    assert manifest['master_seed'] == 7
    assert len(manifest['sample_seeds']) == 2
    assert manifest['settings']['K'] == 2
    assert os.path.isfile(os.path.join(out, 'positions.csv'))
    assert os.path.isfile(os.path.join(out, 'energies.csv'))
    assert '2 MPS calls per sample' in capsys.readouterr().out


def test_single_rollout_matches_library(scenario_path, tmp_path):
    out = str(tmp_path / 'run')
    args = ['--K', '1', '--T', '20', '--J', '1', '--chunk', '10', '--horizon', '20', '--seed', '5']
    assert main(['simulate', scenario_path, '--out', out] + args) == EXIT_OK

    scenario = load_scenario(scenario_path)
    proposer = create_proposer(ProposerConfig(kind=ProposerKind.GOAL_DIRECTED, goal_jitter_sigma=2.0,
                                              speed_scale_range=(0.9, 1.1)))
    params = SimParams(num_samples=1, total_steps=20, mps=MpsParams(num_rollouts=1, horizon=20, chunk_size=10),
                       master_seed=5)
    expected = simulate(scenario.context, proposer, params)
    np.testing.assert_array_equal(load_rollouts(os.path.join(out, 'rollouts.json')).output.samples,
                                  expected.samples)


def test_config_file_and_flags(scenario_path, tmp_path):
    config = tmp_path / 'run.env'
    config.write_text("K=1\nJ=3\nT=20\nHORIZON=20\nSEED=7\n")
    out = str(tmp_path / 'run')
    assert main(['simulate', scenario_path, '--out', out, '--config', str(config), '--K', '2']) == EXIT_OK
    loaded = load_rollouts(os.path.join(out, 'rollouts.json'))
    assert loaded.output.shape == (2, 2, 20)
    assert loaded.params['mps']['num_rollouts'] == 3


def test_dumped_proposals_replay_through_the_cli(scenario_path, tmp_path):
    args = ['--K', '1', '--T', '10', '--J', '5', '--chunk', '10', '--horizon', '30', '--seed', '2']
    first = str(tmp_path / 'first')
    assert main(['simulate', scenario_path, '--out', first, '--dump-proposals'] + args) == EXIT_OK
    dumped = os.path.join(first, 'rollouts.json')
    replayed = str(tmp_path / 'replayed')
    assert main(['simulate', scenario_path, '--out', replayed, '--proposer', 'replay', '--replay', dumped]
                + args) == EXIT_OK
    np.testing.assert_array_equal(load_rollouts(dumped).output.samples,
                                  load_rollouts(os.path.join(replayed, 'rollouts.json')).output.samples)


def test_metrics_of_logged_future(tmp_path, capsys):
    scenario = generate_scenario('head_on', seed=1)
    scenario_path = save_scenario(scenario, str(tmp_path / 'scene.json'))
    samples = np.stack([future[:20] for future in scenario.logged_future])[None]
    output = SimulationOutput(samples=samples, agent_ids=('agent_0', 'agent_1'), dt=scenario.context.dt)
    rollout_path = save_rollouts(output, str(tmp_path / 'logged.json'))

    out = str(tmp_path / 'metrics')
    assert main(['metrics', scenario_path, rollout_path, '--out', out, '--pdf']) == EXIT_OK
    with open(os.path.join(out, 'metrics.json'), encoding='utf-8') as handle:
        report = json.load(handle)
    assert report['min_ade'] == 0.0
    assert report['num_steps'] == 20
    assert os.path.getsize(os.path.join(out, 'metrics.pdf')) > 0
    assert '"collision_rate"' in capsys.readouterr().out


def test_metrics_shape_mismatch_is_an_input_error(scenario_path, tmp_path):
    out = str(tmp_path / 'run')
    assert main(['simulate', scenario_path, '--out', out] + SMALL) == EXIT_OK
    crossing = str(tmp_path / 'crossing.json')
    assert main(['gen-scenario', 'crossing', crossing]) == EXIT_OK
    assert main(['metrics', crossing, os.path.join(out, 'rollouts.json'), '--out', out]) == EXIT_INPUT


def test_require_min_ade_without_future(scenario_path, tmp_path):
    out = str(tmp_path / 'run')
    assert main(['simulate', scenario_path, '--out', out] + SMALL) == EXIT_OK
    bare = tmp_path / 'bare.json'
    raw = json.loads(open(scenario_path).read())
    for agent in raw['agents']:
        agent.pop('future')
    bare.write_text(json.dumps(raw))
    rollouts = os.path.join(out, 'rollouts.json')
    assert main(['metrics', str(bare), rollouts, '--out', out]) == EXIT_OK
    assert main(['metrics', str(bare), rollouts, '--out', out, '--require-min-ade']) == EXIT_INPUT


def test_inspect_breakdown(scenario_path, tmp_path, capsys):
    out = str(tmp_path / 'inspect')
    assert main(['inspect', scenario_path, '--out', out, '--csv'] + SMALL) == EXIT_OK
    with open(os.path.join(out, 'breakdown.csv'), encoding='utf-8') as handle:
        lines = handle.read().splitlines()
    assert lines[0].startswith('rollout,selected,total')
    assert len(lines) == 1 + 4
    assert sum(line.split(',')[1] == '1' for line in lines[1:]) == 1
    assert 'collision' in capsys.readouterr().out


@pytest.mark.parametrize('argv', [
    ['simulate'],
    ['simulate', 'missing.json'],
    ['teleport'],
    ['simulate', '__SCENARIO__', '--K', 'two'],
    ['simulate', '__SCENARIO__', '--replay', 'nowhere.json', '--proposer', 'replay'],
])
def test_usage_errors(scenario_path, tmp_path, argv):
    argv = [scenario_path if arg == '__SCENARIO__' else arg for arg in argv]
    assert main(argv + ['--out', str(tmp_path / 'out')] if len(argv) > 1 else argv) == EXIT_USAGE


def test_unknown_config_key(scenario_path, tmp_path):
    config = tmp_path / 'bad.env'
    config.write_text("HORIZONN=40\n")
    assert main(['simulate', scenario_path, '--config', str(config), '--out', str(tmp_path)]) == EXIT_USAGE


def test_corrupt_scenario_is_an_input_error(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"schema_version": 1, "agents": [{"history": [[0, 0, "x", 0]]}]}')
    assert main(['simulate', str(path), '--out', str(tmp_path)] + SMALL) == EXIT_INPUT


@pytest.mark.parametrize('error, code', [
    (UsageError('flag'), EXIT_USAGE),
    (FileNotFoundError('gone'), EXIT_USAGE),
    (ContractError('horizon'), EXIT_USAGE),
    (InputError('nan'), EXIT_INPUT),
    (ScenarioFormatError('bad', field='dt'), EXIT_INPUT),
    (OSError('disk'), EXIT_INPUT),
    (NumericalError('diverged'), EXIT_NUMERICAL),
    (SimulationError('failed', 0, 1, cause=NumericalError('diverged')), EXIT_NUMERICAL),
    (SimulationError('failed', 2, 11, cause=InputError('replay')), EXIT_INPUT),
])
def test_exit_code_mapping(error, code):
    assert exit_code_for(error) == code


def test_inspect_rows_on_an_empty_scene(cv_proposer):
    context = SceneContext(road_edges=(), agents=(), histories=())
    params = SimParams(num_samples=1, total_steps=10, mps=MpsParams(num_rollouts=2, horizon=10, chunk_size=5))
    rows = inspect_rows(context, cv_proposer, params)
    assert [row['total'] for row in rows] == [0.0, 0.0]
    assert sum(row['selected'] for row in rows) == 1
