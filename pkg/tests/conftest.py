"""
Shared fixtures: small matrices, partitions and scripted chat clients
"""

import numpy as np
import pytest
import yaml

from grnsynth.data_loader.expression_matrix import ExpressionMatrix
from grnsynth.grn.core import GeneVocabulary, TfPartition
from grnsynth.knowledge.client import ChatClient
from grnsynth.synthesis.linear_uniform import LinearUniformSpec, generate_linear_uniform, write_linear_uniform


def make_matrix(values, genes=None, barcodes=None, normalized='raw'):
    values = np.asarray(values, dtype=float)
    genes = genes or [f'G{j}' for j in range(values.shape[1])]
    barcodes = barcodes or [f'cell_{i}' for i in range(values.shape[0])]
    return ExpressionMatrix(values, tuple(barcodes), GeneVocabulary(tuple(genes)), normalized)


def make_partition(n_tfs, n_targets):
    return TfPartition(
        frozenset(f'TF{i:03d}' for i in range(1, n_tfs + 1)),
        frozenset(f'TG{i:03d}' for i in range(1, n_targets + 1)),
    )


class ScriptedClient(ChatClient):
    """Replies from a fixed list (or a callable on the prompt) and records prompts"""

    def __init__(self, replies):
        super().__init__('scripted')
        self.replies = replies
        self.prompts = []

    def complete(self, messages):
        prompt = messages[-1]['content']
        self.prompts.append(prompt)
        if callable(self.replies):
            return self.replies(prompt)
        return self.replies[min(len(self.prompts), len(self.replies)) - 1]


@pytest.fixture
def scripted_client():
    return ScriptedClient


@pytest.fixture
def small_partition():
    return make_partition(6, 10)


@pytest.fixture(scope='session')
def linear_uniform_small():
    """LinearUniform data with its true graph and weights"""
    spec = LinearUniformSpec(n_tfs=8, n_targets=12, k=3, n_cells=400, noise_scale=0.05, seed=7)
    matrix, grn, weights = generate_linear_uniform(spec, return_weights=True)
    return spec, matrix, grn, weights


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_run_config(root, arms=None, seeds=(0,), **sections):
    """Write a small LinearUniform workspace and its run configuration"""
    spec = LinearUniformSpec(n_tfs=6, n_targets=10, k=2, n_cells=200, seed=11)
    paths = write_linear_uniform(spec, root / 'data')
    config = {
        'run': {'k': 2, 'out_dir': 'output'},
        'dataset': {
            'name': 'LinearUniform',
            'matrix': 'data/linear_uniform.csv',
            'context': 'Linear benchmark.',
            'test_size': 50,
            'val_size': 30,
            'n_top_genes': 16,
            'min_cells_expressed': 1,
        },
        'knowledge': {'source': 'human_file', 'tf_list': 'data/linear_uniform_tfs.txt'},
        'gbm': {'n_trees': 20},
        'synthesis': {'replicates': 2},
        'metrics': {'forest': {'n_estimators': 10, 'repeats': 1}, 'n_pcs': 5},
        'seeds': list(seeds),
        'arms': arms if arms is not None else [
            {'name': 'truth', 'grn_source': 'file', 'grn_file': 'data/linear_uniform_grn.tsv'},
            {'name': 'statistical', 'grn_source': 'statistical'},
            {'name': 'random', 'grn_source': 'random'},
            {'name': 'control', 'grn_source': 'control'},
            {'name': 'stage1', 'grn_source': 'stage1'},
        ],
    }
    for name, section in sections.items():
        config[name] = section
    config_path = root / 'config.yaml'
    config_path.write_text(yaml.safe_dump(config, sort_keys=False))
    return config_path, paths
