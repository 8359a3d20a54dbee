"""
Two-Stage Structural Causal Model
Stage 1 bootstraps joint TF expression rows from training cells; stage 2
predicts each target from its k GRN parents with a boosted regressor and
adds a resampled training residual
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np
from joblib import Parallel, delayed

from grnsynth.analytics.preprocessing import DEFAULT_LIBRARY_SCALE
from grnsynth.data_loader.expression_matrix import RAW, ExpressionMatrix
from grnsynth.grn.inference import fit_boosted_trees
from grnsynth.utils.exceptions import EmptyPoolError, SymbolMissingError
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class TargetModel:
    """Regression of one target on its parent TFs plus its residual pool"""

    parents: tuple
    model: object
    residuals: np.ndarray

    def predict(self, parent_values):
        return self.model.predict(parent_values)


@dataclass(frozen=True, eq=False)
class Scm:
    """Fitted two-stage generator conditioned on a GRN"""

    tf_symbols: tuple
    tf_pool: np.ndarray
    target_models: Mapping
    grn: object
    genes: object
    library_scale: float = DEFAULT_LIBRARY_SCALE


class StageOneDraw(NamedTuple):
    """Random choices of one sampling pass, kept so targets can be replayed"""

    tf_rows: np.ndarray
    residual_index: Mapping


def _fit_target(target, parents, train, cfg):
    features = train.columns(parents)
    response = train.column(target)
    fit = fit_boosted_trees(features, response, cfg.for_target(target))
    residuals = response - fit.model.predict(features)
    return target, TargetModel(parents=tuple(parents), model=fit.model, residuals=residuals)


def fit_scm(train, grn, cfg, library_scale=DEFAULT_LIBRARY_SCALE, n_jobs=1):
    """
    Fit the bootstrap controller and per-target generators

    Args:
        train: Raw training ExpressionMatrix containing every GRN symbol
        grn: Imposed Grn
        cfg: GbmConfig (per-target seeds are derived from cfg.seed)
        library_scale: Per-cell total of sampled cells
        n_jobs: Worker count for per-target fits

    Returns:
        Scm: Fitted generator
    """
    missing = sorted(s for s in grn.partition.symbols if s not in train.genes)
    if missing:
        raise SymbolMissingError(f"{len(missing)} GRN genes absent from training data: {missing[:5]}")

    tf_symbols = grn.partition.sorted_tfs
    targets = grn.partition.sorted_targets
    logger.info(f"Fitting SCM: {len(tf_symbols)} TFs, {len(targets)} target generators")

    fitted = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_fit_target)(target, grn.regulators[target], train, cfg) for target in targets
    )
    return Scm(
        tf_symbols=tf_symbols,
        tf_pool=train.columns(tf_symbols),
        target_models=dict(fitted),
        grn=grn,
        genes=train.genes.subset(grn.partition.symbols),
        library_scale=float(library_scale),
    )


def draw_stage_one(scm, n_cells, seed):
    """
    Draw TF rows and residual indices for n_cells cells

    Returns:
        StageOneDraw: TF rows (n_cells x |tfs|) and per-target residual indices
    """
    if n_cells < 1:
        raise ValueError(f"n_cells must be >= 1, got {n_cells}")
    if scm.tf_pool.shape[0] == 0:
        raise EmptyPoolError("TF bootstrap pool is empty")

    rng = np.random.default_rng(seed)
    tf_rows = scm.tf_pool[rng.integers(0, scm.tf_pool.shape[0], size=n_cells)]
    residual_index = {}
    for target in sorted(scm.target_models):
        pool_size = scm.target_models[target].residuals.shape[0]
        if pool_size == 0:
            raise EmptyPoolError(f"Residual pool for {target} is empty")
        residual_index[target] = rng.integers(0, pool_size, size=n_cells)
    return StageOneDraw(tf_rows, residual_index)


def simulate_targets(scm, tf_rows, residual_index):
    """
    Target values for given TF rows and residual draws (before clipping)

    Each target reads only its parent columns of tf_rows.

    Returns:
        dict: target -> values
    """
    tf_column = {symbol: i for i, symbol in enumerate(scm.tf_symbols)}
    values = {}
    for target in sorted(scm.target_models):
        model = scm.target_models[target]
        parent_values = tf_rows[:, [tf_column[p] for p in model.parents]]
        values[target] = model.predict(parent_values) + model.residuals[residual_index[target]]
    return values


def _assemble(genes, columns, library_scale, prefix):
    n_cells = len(next(iter(columns.values())))
    values = np.column_stack([columns[symbol] for symbol in genes.symbols])
    values = np.clip(values, 0.0, None)

    totals = values.sum(axis=1)
    empty = totals <= 0
    if empty.any():
        logger.warning(f"{int(empty.sum())} sampled cells are all zero and stay unscaled")
    scale = np.divide(library_scale, totals, out=np.zeros_like(totals), where=~empty)
    values = values * scale[:, None]

    return ExpressionMatrix(
        values=values,
        barcodes=tuple(f"{prefix}_{i}" for i in range(n_cells)),
        genes=genes,
        normalized=RAW,
    )


def sample_synthetic(scm, n_cells, seed):
    """
    Sample synthetic cells from a fitted SCM

    Args:
        scm: Scm
        n_cells: Number of cells
        seed: Integer seed

    Returns:
        ExpressionMatrix: n_cells x genes, clipped at 0 and library-scaled
    """
    draw = draw_stage_one(scm, n_cells, seed)
    columns = dict(zip(scm.tf_symbols, draw.tf_rows.T))
    columns.update(simulate_targets(scm, draw.tf_rows, draw.residual_index))
    matrix = _assemble(scm.genes, columns, scm.library_scale, 'synthetic')
    logger.info(f"Sampled {matrix.n_cells} synthetic cells (seed={seed})")
    return matrix


def sample_stage_one(train, partition, n_cells, seed, library_scale=DEFAULT_LIBRARY_SCALE):
    """
    Non-causal baseline: joint TF-row bootstrap with independently
    bootstrapped target columns

    Args:
        train: Raw training ExpressionMatrix
        partition: TfPartition
        n_cells: Number of cells
        seed: Integer seed
        library_scale: Per-cell total

    Returns:
        ExpressionMatrix: Structure-free synthetic cells
    """
    if n_cells < 1:
        raise ValueError(f"n_cells must be >= 1, got {n_cells}")
    if train.n_cells == 0:
        raise EmptyPoolError("Training matrix is empty")

    rng = np.random.default_rng(seed)
    tfs = partition.sorted_tfs
    tf_rows = train.columns(tfs)[rng.integers(0, train.n_cells, size=n_cells)]
    columns = dict(zip(tfs, tf_rows.T))
    for target in partition.sorted_targets:
        columns[target] = train.column(target)[rng.integers(0, train.n_cells, size=n_cells)]

    genes = train.genes.subset(partition.symbols)
    return _assemble(genes, columns, library_scale, 'stage1')
