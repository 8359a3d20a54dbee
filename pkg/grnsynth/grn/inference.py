"""
Statistical GRN Inference
Per-target gradient-boosted regression on TF expression; regulators are
ranked by total squared-error reduction and truncated to k per target
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.dummy import DummyRegressor
from sklearn.ensemble import GradientBoostingRegressor

from grnsynth.grn.core import validate_grn
from grnsynth.utils.exceptions import InvalidSpecError, ShapeMismatchError, TooFewTfsError
from grnsynth.utils.logger import setup_logger
from grnsynth.utils.seeding import derive_seed

logger = setup_logger(__name__)

IMPORTANCE_COLUMNS = ['TF', 'target', 'importance']


@dataclass(frozen=True)
class GbmConfig:
    """Gradient boosting hyperparameters"""

    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    subsample_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidSpecError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.max_depth < 1:
            raise InvalidSpecError(f"max_depth must be >= 1, got {self.max_depth}")
        if not 0 < self.learning_rate <= 1:
            raise InvalidSpecError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 0 < self.subsample_fraction <= 1:
            raise InvalidSpecError(
                f"subsample_fraction must be in (0, 1], got {self.subsample_fraction}"
            )

    def for_target(self, target):
        """Copy with the per-target seed derived from (seed, target symbol)"""
        return replace(self, seed=derive_seed(self.seed, target))


class BoostedFit(NamedTuple):
    model: object
    importances: np.ndarray
    degenerate: bool


def fit_boosted_trees(features, response, cfg):
    """
    Least-squares gradient boosting with depth-limited trees

    Importance of a feature is the total squared-error reduction of every
    split on it, summed over all trees. A zero-variance response yields all
    importances 0 and a constant model, flagged as degenerate.

    Args:
        features: Array of shape (n_cells, n_features)
        response: Array of shape (n_cells,)
        cfg: GbmConfig

    Returns:
        BoostedFit: (model, importances, degenerate)
    """
    features = np.asarray(features, dtype=np.float64)
    response = np.asarray(response, dtype=np.float64)
    if features.ndim != 2 or response.ndim != 1:
        raise ShapeMismatchError(
            f"Expected 2-D features and 1-D response, got {features.ndim}-D and {response.ndim}-D"
        )
    if features.shape[0] != response.shape[0]:
        raise ShapeMismatchError(
            f"{features.shape[0]} feature rows vs {response.shape[0]} responses"
        )
    if features.shape[0] < 2:
        raise ShapeMismatchError("Need at least 2 rows to fit")

    if np.ptp(response) == 0:
        model = DummyRegressor(strategy='mean').fit(features, response)
        return BoostedFit(model, np.zeros(features.shape[1]), True)

    model = GradientBoostingRegressor(
        loss='squared_error',
        n_estimators=cfg.n_trees,
        max_depth=cfg.max_depth,
        learning_rate=cfg.learning_rate,
        subsample=cfg.subsample_fraction,
        random_state=cfg.seed,
    )
    model.fit(features, response)

    importances = np.zeros(features.shape[1])
    for tree in model.estimators_.ravel():
        # unnormalized importances are per-sample reductions; scale back to totals
        root_weight = tree.tree_.weighted_n_node_samples[0]
        importances += tree.tree_.compute_feature_importances(normalize=False) * root_weight
    return BoostedFit(model, np.clip(importances, 0.0, None), False)


class ImportanceTable:
    """Importance score per (tf, target) pair"""

    def __init__(self, frame):
        """
        Args:
            frame: DataFrame with columns TF, target, importance
        """
        self.frame = frame[IMPORTANCE_COLUMNS].reset_index(drop=True)

    def top_k(self, k):
        """k highest-scoring TFs per target, ties broken by TF symbol"""
        ranked = self.frame.sort_values(
            ['target', 'importance', 'TF'], ascending=[True, False, True], kind='mergesort'
        )
        return ranked.groupby('target', sort=True).head(k)

    def to_tsv(self, path):
        """Audit dump: TF<TAB>target<TAB>importance"""
        self.frame.to_csv(path, sep='\t', index=False, float_format='%.10g', lineterminator='\n')
        logger.info(f"Wrote importance table: {path}")
        return path


def _score_target(target, tf_values, response, tfs, cfg):
    fit = fit_boosted_trees(tf_values, response, cfg.for_target(target))
    if fit.degenerate:
        logger.warning(f"Zero-variance response for {target}; all importances set to 0")
    return pd.DataFrame({'TF': tfs, 'target': target, 'importance': fit.importances})


def rank_regulators(train, partition, cfg, n_jobs=1):
    """
    Fit one boosted model per target and collect TF importances

    Args:
        train: ExpressionMatrix containing every partition symbol
        partition: TfPartition
        cfg: GbmConfig
        n_jobs: Worker count for per-target fits

    Returns:
        ImportanceTable: Scores merged in target symbol order
    """
    tfs = list(partition.sorted_tfs)
    targets = list(partition.sorted_targets)
    tf_values = train.columns(tfs)
    responses = train.columns(targets)

    logger.info(f"Ranking {len(tfs)} TFs for {len(targets)} targets with {n_jobs} worker(s)")
    frames = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_score_target)(target, tf_values, responses[:, j], tfs, cfg)
        for j, target in enumerate(targets)
    )
    return ImportanceTable(pd.concat(frames, ignore_index=True))


def infer_grn(train, partition, k, cfg, n_jobs=1, importance_path=None):
    """
    Infer a GRN keeping the k most important TFs per target

    Args:
        train: ExpressionMatrix (the pipeline passes lognorm data)
        partition: TfPartition with symbols present in train
        k: Regulators per target
        cfg: GbmConfig
        n_jobs: Worker count
        importance_path: Optional TSV path for the full importance table

    Returns:
        Grn: Validated graph with exactly k regulators per target
    """
    if len(partition.tfs) < k:
        raise TooFewTfsError(f"Need at least {k} TFs, partition has {len(partition.tfs)}")

    table = rank_regulators(train, partition, cfg, n_jobs=n_jobs)
    if importance_path is not None:
        table.to_tsv(importance_path)

    selected = table.top_k(k)
    return validate_grn(partition, selected[['TF', 'target']].itertuples(index=False, name=None), k)
