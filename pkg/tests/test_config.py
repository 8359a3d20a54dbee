from pathlib import Path

import pytest
import yaml

from grnsynth.pipeline.config import ArmConfig, RunConfig
from grnsynth.utils.config_loader import get_api_key, load_config
from grnsynth.utils.exceptions import ConfigError

from conftest import write_run_config


def load_dict(config_path):
    return yaml.safe_load(config_path.read_text())


def test_load_resolves_paths_against_the_config_file(tmp_path):
    config_path, _ = write_run_config(tmp_path)
    config = RunConfig.load(config_path)
    assert Path(config.dataset.matrix) == tmp_path / 'data' / 'linear_uniform.csv'
    assert Path(config.out_dir) == tmp_path / 'output'
    assert config.k == 2
    assert config.synthesis.n_cells is None
    assert config.metrics.forest.n_estimators == 10
    assert [arm.name for arm in config.arms] == ['truth', 'statistical', 'random', 'control', 'stage1']


def test_setting_labels(tmp_path):
    config = RunConfig.load(write_run_config(tmp_path)[0])
    assert config.setting_label(ArmConfig('a', 'statistical')) == '1B'
    assert config.setting_label(ArmConfig('b', 'llm')) == '1A'
    assert config.setting_label(ArmConfig('c', 'random')) == 'random'
    assert config.setting_label(ArmConfig('d', 'stage1')) == 'stage1-surrogate'
    assert config.setting_label(ArmConfig('e', 'control')) == 'control'


def test_human_file_requires_tf_list(tmp_path):
    config_path, _ = write_run_config(tmp_path, knowledge={'source': 'human_file'})
    with pytest.raises(ConfigError, match='tf_list'):
        RunConfig.load(config_path)


@pytest.mark.parametrize('mutate, message', [
    (lambda d: d.update(extra={}), 'Unknown configuration sections'),
    (lambda d: d['dataset'].update(colour='red'), "Unknown keys in 'dataset'"),
    (lambda d: d['run'].update(k=0), 'k must be'),
    (lambda d: d['arms'].append({'name': 'truth', 'grn_source': 'random'}), 'unique'),
    (lambda d: d['arms'].append({'name': 'x', 'grn_source': 'file'}), 'requires grn_file'),
    (lambda d: d['arms'].append({'name': 'y', 'grn_source': 'oracle'}), 'grn_source must be'),
    (lambda d: d['metrics'].update(space='zscore'), 'metrics.space'),
    (lambda d: d['dataset'].update(matrix='missing.csv'), 'matrix not found'),
    (lambda d: d.update(arms=[]), 'at least one arm'),
    (lambda d: d['metrics'].update(mmd={'bandwidths': 'silverman'}), 'metrics.mmd'),
])
def test_invalid_configurations(tmp_path, mutate, message):
    config_path, _ = write_run_config(tmp_path)
    data = load_dict(config_path)
    mutate(data)
    with pytest.raises(ConfigError, match=message):
        RunConfig.from_dict(data, base_dir=tmp_path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / 'absent.yaml')


def test_overrides(tmp_path):
    config = RunConfig.load(write_run_config(tmp_path, seeds=(0, 1))[0])
    overridden = config.with_overrides(seed=7, out_dir=tmp_path / 'other', parallel_arms=2)
    assert overridden.seeds == (7,)
    assert overridden.parallel_arms == 2
    assert Path(overridden.out_dir) == tmp_path / 'other'
    assert config.seeds == (0, 1)


def test_bandwidth_list_and_snapshot(tmp_path):
    config_path, _ = write_run_config(tmp_path, metrics={'mmd': {'bandwidths': [1, 5]}})
    config = RunConfig.load(config_path)
    assert config.metrics.mmd.bandwidths == (1.0, 5.0)
    snapshot = config.to_dict()
    assert snapshot['dataset']['name'] == 'LinearUniform'
    assert snapshot['metrics']['mmd']['bandwidths'] == (1.0, 5.0)


def test_config_file_must_hold_a_mapping(tmp_path):
    path = tmp_path / 'bad.yaml'
    path.write_text('- run\n- dataset\n')
    with pytest.raises(ConfigError, match='mapping'):
        load_config(path)
    path.write_text('run: [k: 1\n')
    with pytest.raises(ConfigError, match='Invalid YAML'):
        load_config(path)
    path.write_text('')
    assert load_config(path) == {}


def test_api_key_comes_from_the_environment(monkeypatch):
    monkeypatch.delenv('LLM4GRN_API_KEY', raising=False)
    monkeypatch.delenv('GRNSYNTH_API_KEY', raising=False)
    assert get_api_key() == ''
    monkeypatch.setenv('LLM4GRN_API_KEY', 'sk-test')
    assert get_api_key() == 'sk-test'


def test_package_named_api_key_is_a_fallback(monkeypatch):
    monkeypatch.delenv('LLM4GRN_API_KEY', raising=False)
    monkeypatch.setenv('GRNSYNTH_API_KEY', 'sk-fallback')
    assert get_api_key() == 'sk-fallback'
    monkeypatch.setenv('LLM4GRN_API_KEY', 'sk-primary')
    assert get_api_key() == 'sk-primary'
