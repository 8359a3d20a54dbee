"""
Expression Preprocessing
Gene filtering, highly-variable gene selection, train/val/test splits,
library-size normalization and centroids
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

from grnsynth.data_loader.expression_matrix import LOGNORM, RAW, ExpressionMatrix
from grnsynth.utils.exceptions import (
    EmptyMatrixError,
    ExpressionDataError,
    TooFewCellsError,
    TooFewGenesError,
    ZeroLibraryError,
)
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_LIBRARY_SCALE = 10_000.0


@dataclass(frozen=True)
class SplitSpec:
    """Held-out split sizes and shuffle seed"""

    test_size: int
    val_size: int
    seed: int = 0

    def __post_init__(self):
        if self.test_size <= 0 or self.val_size <= 0:
            raise ExpressionDataError("Split sizes must be positive")


@dataclass(frozen=True)
class PreprocessConfig:
    """Gene filter threshold and number of highly variable genes kept

    min_cells_expressed=None means "use the test split size".
    """

    n_top_genes: int = 1000
    min_cells_expressed: Optional[int] = None

    def __post_init__(self):
        if self.n_top_genes <= 0:
            raise ExpressionDataError("n_top_genes must be positive")
        if self.min_cells_expressed is not None and self.min_cells_expressed <= 0:
            raise ExpressionDataError("min_cells_expressed must be positive")

    def threshold(self, split):
        return self.min_cells_expressed if self.min_cells_expressed is not None else split.test_size


class DataSplits(NamedTuple):
    train: ExpressionMatrix
    val: ExpressionMatrix
    test: ExpressionMatrix


def select_genes(m, cfg, split):
    """
    Filter lowly-expressed genes and rank the rest by dispersion

    Args:
        m: Raw-count ExpressionMatrix
        cfg: PreprocessConfig
        split: SplitSpec (supplies the default threshold)

    Returns:
        list: Retained gene symbols in the matrix's vocabulary order
    """
    threshold = cfg.threshold(split)
    expressed = (m.values > 0).sum(axis=0)
    stats = pd.DataFrame({
        'symbol': list(m.genes.symbols),
        'expressed_cells': expressed,
        'mean': m.values.mean(axis=0),
        'variance': m.values.var(axis=0, ddof=1) if m.n_cells > 1 else np.zeros(m.n_genes),
    })
    stats = stats[stats['expressed_cells'] >= threshold]
    logger.info(
        f"{len(stats)} of {m.n_genes} genes expressed in >= {threshold} cells"
    )
    if len(stats) < cfg.n_top_genes:
        raise TooFewGenesError(
            f"Only {len(stats)} genes pass the expression filter, need {cfg.n_top_genes}"
        )

    stats = stats.assign(dispersion=stats['variance'] / stats['mean'])
    ranked = stats.sort_values(['dispersion', 'symbol'], ascending=[False, True], kind='mergesort')
    keep = set(ranked['symbol'].head(cfg.n_top_genes))
    return [s for s in m.genes.symbols if s in keep]


def split_cells(n_cells, split):
    """
    Seeded disjoint train/val/test row indices

    Returns:
        tuple: (train, val, test) sorted index arrays
    """
    if split.test_size + split.val_size >= n_cells:
        raise TooFewCellsError(
            f"{n_cells} cells cannot hold test={split.test_size} + val={split.val_size} + train"
        )
    order = np.random.default_rng(split.seed).permutation(n_cells)
    test = np.sort(order[:split.test_size])
    val = np.sort(order[split.test_size:split.test_size + split.val_size])
    train = np.sort(order[split.test_size + split.val_size:])
    return train, val, test


def preprocess(m, cfg, split):
    """
    Filter genes, keep the top dispersed genes and split cells

    Genes are filtered once on the full matrix, before splitting.

    Args:
        m: Raw-count ExpressionMatrix
        cfg: PreprocessConfig
        split: SplitSpec

    Returns:
        DataSplits: (train, val, test) sharing one gene vocabulary
    """
    if m.normalized != RAW:
        raise ExpressionDataError("preprocess expects raw counts")

    genes = select_genes(m, cfg, split)
    filtered = m.select_genes(genes)
    train, val, test = split_cells(filtered.n_cells, split)

    splits = DataSplits(filtered.take_rows(train), filtered.take_rows(val), filtered.take_rows(test))
    logger.info(
        f"Split into train={splits.train.n_cells}, val={splits.val.n_cells}, "
        f"test={splits.test.n_cells} cells over {len(genes)} genes"
    )
    return splits


def library_normalize(values, scale=DEFAULT_LIBRARY_SCALE):
    """
    Rescale each row of a count array to sum to `scale`

    Rows that sum to zero raise ZeroLibraryError.
    """
    values = np.asarray(values, dtype=np.float64)
    totals = values.sum(axis=1)
    empty = np.flatnonzero(totals <= 0)
    if empty.size:
        raise ZeroLibraryError(f"{empty.size} cells have zero total count (first row {empty[0]})")
    return values / totals[:, None] * scale


def normalize_log1p(m, scale=DEFAULT_LIBRARY_SCALE):
    """
    Library-size normalize to `scale` then apply log1p

    Args:
        m: Raw ExpressionMatrix
        scale: Target library size per cell

    Returns:
        ExpressionMatrix: lognorm matrix
    """
    if m.normalized != RAW:
        raise ExpressionDataError("normalize_log1p expects a raw matrix")
    if scale <= 0:
        raise ExpressionDataError(f"Library scale must be positive, got {scale}")
    rescaled = library_normalize(m.values, scale)
    return ExpressionMatrix(np.log1p(rescaled), m.barcodes, m.genes, LOGNORM)


def centroid(m):
    """
    Per-gene mean over cells

    Args:
        m: ExpressionMatrix with at least one cell

    Returns:
        np.ndarray: Vector of length n_genes
    """
    if m.n_cells == 0:
        raise EmptyMatrixError("Centroid of an empty matrix")
    return m.values.mean(axis=0)


def subsample(m, n_cells, seed):
    """Seeded subsample of rows without replacement (all rows if n_cells >= n)"""
    if n_cells >= m.n_cells:
        return m
    rows = np.sort(np.random.default_rng(seed).choice(m.n_cells, size=n_cells, replace=False))
    return m.take_rows(rows)
