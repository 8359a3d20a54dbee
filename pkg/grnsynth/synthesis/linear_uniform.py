"""
LinearUniform Benchmark Generator
Synthetic expression with a known bipartite causal graph: uniform TF
expression, linear targets with uniform edge weights and Gaussian noise
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from grnsynth.data_loader.expression_matrix import RAW, ExpressionMatrix
from grnsynth.data_loader.grn_io import write_grn
from grnsynth.data_loader.matrix_loader import write_matrix_csv
from grnsynth.grn.core import GeneVocabulary, TfPartition, random_grn
from grnsynth.utils.exceptions import InvalidSpecError
from grnsynth.utils.logger import setup_logger
from grnsynth.utils.seeding import derive_seed

logger = setup_logger(__name__)


@dataclass(frozen=True)
class LinearUniformSpec:
    """Size, coefficient range, noise and seed of a LinearUniform dataset"""

    n_tfs: int = 20
    n_targets: int = 50
    k: int = 5
    n_cells: int = 1000
    coeff_range: tuple = (0.5, 2.0)
    noise_scale: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'coeff_range', tuple(float(c) for c in self.coeff_range))
        if min(self.n_tfs, self.n_targets, self.k, self.n_cells) < 1:
            raise InvalidSpecError("Counts must be positive")
        if self.n_tfs < self.k:
            raise InvalidSpecError(f"n_tfs={self.n_tfs} < k={self.k}")
        if len(self.coeff_range) != 2 or not self.coeff_range[0] < self.coeff_range[1]:
            raise InvalidSpecError(f"coeff_range must be (low, high) with low < high: {self.coeff_range}")
        if self.noise_scale < 0:
            raise InvalidSpecError("noise_scale must be non-negative")

    @property
    def tf_symbols(self):
        return tuple(f"TF{i:03d}" for i in range(1, self.n_tfs + 1))

    @property
    def target_symbols(self):
        return tuple(f"TG{i:03d}" for i in range(1, self.n_targets + 1))


def generate_linear_uniform(spec, return_weights=False):
    """
    Generate a LinearUniform matrix and its ground-truth GRN

    Args:
        spec: LinearUniformSpec
        return_weights: Also return {target: weight vector over its sorted parents}

    Returns:
        tuple: (ExpressionMatrix, Grn) or (ExpressionMatrix, Grn, weights)
    """
    partition = TfPartition(frozenset(spec.tf_symbols), frozenset(spec.target_symbols))
    grn = random_grn(partition, spec.k, derive_seed(spec.seed, 'graph'))

    rng = np.random.default_rng(derive_seed(spec.seed, 'data'))
    tf_values = rng.uniform(0.0, 1.0, size=(spec.n_cells, spec.n_tfs))
    low, high = spec.coeff_range

    tf_column = {symbol: i for i, symbol in enumerate(spec.tf_symbols)}
    target_values = np.empty((spec.n_cells, spec.n_targets))
    weights = {}
    for j, target in enumerate(spec.target_symbols):
        parents = [tf_column[tf] for tf in grn.regulators[target]]
        w = rng.uniform(low, high, size=spec.k)
        weights[target] = w
        target_values[:, j] = tf_values[:, parents] @ w

    if spec.noise_scale > 0:
        target_values += rng.normal(0.0, spec.noise_scale, size=target_values.shape)
    target_values = np.clip(target_values, 0.0, None)

    matrix = ExpressionMatrix(
        values=np.hstack([tf_values, target_values]),
        barcodes=tuple(f"cell_{i}" for i in range(spec.n_cells)),
        genes=GeneVocabulary(spec.tf_symbols + spec.target_symbols),
        normalized=RAW,
    )
    logger.info(
        f"Generated LinearUniform data: {matrix.n_cells} cells, {spec.n_tfs} TFs, "
        f"{spec.n_targets} targets, k={spec.k}"
    )
    if return_weights:
        return matrix, grn, weights
    return matrix, grn


def write_linear_uniform(spec, out_dir):
    """
    Write a (matrix CSV, GRN TSV + sidecar, spec JSON) fixture triple

    Returns:
        dict: Paths keyed by 'matrix', 'grn', 'spec'
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix, grn = generate_linear_uniform(spec)

    paths = {
        'matrix': write_matrix_csv(matrix, out_dir / 'linear_uniform.csv'),
        'grn': write_grn(grn, out_dir / 'linear_uniform_grn.tsv'),
        'spec': out_dir / 'linear_uniform_spec.json',
    }
    with open(paths['spec'], 'w', encoding='utf-8') as f:
        json.dump(asdict(spec), f, indent=2)
        f.write('\n')
    # TF list doubles as the curated knowledge base for pipeline runs
    with open(out_dir / 'linear_uniform_tfs.txt', 'w', encoding='utf-8') as f:
        f.write('\n'.join(spec.tf_symbols) + '\n')
    paths['tfs'] = out_dir / 'linear_uniform_tfs.txt'
    return paths
