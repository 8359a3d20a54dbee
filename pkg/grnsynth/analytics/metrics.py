"""
Fidelity Metrics
Distances between real and synthetic cells: centroid cosine and Euclidean
distance, RBF-kernel MMD and a real-vs-synthetic random-forest AUROC
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist, cosine, euclidean, pdist
from scipy.stats import rankdata
from sklearn.ensemble import RandomForestClassifier
from sklearn.model_selection import train_test_split

from grnsynth.analytics.preprocessing import DEFAULT_LIBRARY_SCALE, centroid, subsample
from grnsynth.data_loader.expression_matrix import LOGNORM, RAW, ExpressionMatrix
from grnsynth.utils.exceptions import (
    EmptyMatrixError,
    MetricError,
    SingleClassError,
    TooFewCellsError,
    ZeroCentroidError,
)
from grnsynth.utils.logger import setup_logger
from grnsynth.utils.seeding import derive_seed

logger = setup_logger(__name__)

MEDIAN_HEURISTIC = 'median-heuristic'
METRIC_COLUMNS = ['cosine', 'euclidean', 'mmd', 'rf_auroc']
MIN_FOREST_CELLS = 20


@dataclass(frozen=True)
class MmdConfig:
    """
    Kernel settings for MMD

    bandwidths is either 'median-heuristic' or a sequence of positive
    RBF widths whose kernels are summed. max_cells caps each side by seeded
    subsampling before the kernel matrices are built.
    """

    bandwidths: Union[str, tuple] = MEDIAN_HEURISTIC
    estimator: str = 'biased'
    max_cells: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.bandwidths, str):
            if self.bandwidths != MEDIAN_HEURISTIC:
                raise MetricError(f"Unknown bandwidth rule: {self.bandwidths}")
        else:
            widths = tuple(float(b) for b in self.bandwidths)
            if not widths or min(widths) <= 0:
                raise MetricError("Explicit bandwidths must be a nonempty list of positive values")
            object.__setattr__(self, 'bandwidths', widths)
        if self.estimator != 'biased':
            raise MetricError(f"Only the biased estimator is supported, got {self.estimator}")

    def describe(self):
        if isinstance(self.bandwidths, str):
            return f"rbf/{self.bandwidths}/{self.estimator}"
        return f"rbf/{','.join(f'{b:g}' for b in self.bandwidths)}/{self.estimator}"


@dataclass(frozen=True)
class ForestConfig:
    """Real-vs-synthetic classifier settings"""

    n_estimators: int = 100
    max_depth: Optional[int] = None
    test_fraction: float = 0.3
    repeats: int = 2
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_estimators < 1 or self.repeats < 1:
            raise MetricError("n_estimators and repeats must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise MetricError(f"test_fraction must be in (0, 1), got {self.test_fraction}")


@dataclass(frozen=True)
class MetricSummary:
    """Mean and population standard deviation over repeats"""

    mean: float
    std: float
    n: int

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=np.float64)
        return cls(mean=float(values.mean()), std=float(values.std()), n=int(values.size))

    def __str__(self):
        return f"{self.mean:.4f} ± {self.std:.4f}"


@dataclass(frozen=True)
class MetricReport:
    """Fidelity of one arm's synthetic replicates against a real reference"""

    label: str
    reference: str
    cosine: MetricSummary
    euclidean: MetricSummary
    mmd: MetricSummary
    rf_auroc: MetricSummary
    n_repeats: int
    mmd_kernel: str
    space: str = LOGNORM

    def to_row(self):
        """Flat dict in Table-1 column order"""
        row = {'label': self.label, 'reference': self.reference}
        for name in METRIC_COLUMNS:
            summary = getattr(self, name)
            row[name] = summary.mean
            row[f'{name}_std'] = summary.std
        row['n_repeats'] = self.n_repeats
        row['mmd_kernel'] = self.mmd_kernel
        row['space'] = self.space
        return row

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        fields = dict(data)
        for name in METRIC_COLUMNS:
            fields[name] = MetricSummary(**fields[name])
        return cls(**fields)

    def write_json(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')
        return path


def _paired(r, s):
    r.require_same_genes(s)
    if r.n_cells == 0 or s.n_cells == 0:
        raise EmptyMatrixError("Metrics need cells on both sides")


def cosine_distance(r, s):
    """
    1 - cosine similarity of the two centroids

    Args:
        r: Real ExpressionMatrix
        s: Synthetic ExpressionMatrix on the same vocabulary

    Returns:
        float: Distance in [0, 2] (clamped at 0 against round-off)
    """
    _paired(r, s)
    mu_r, mu_s = centroid(r), centroid(s)
    if not np.linalg.norm(mu_r) or not np.linalg.norm(mu_s):
        raise ZeroCentroidError("Cosine distance is undefined for a zero centroid")
    return max(0.0, float(cosine(mu_r, mu_s)))


def euclidean_distance(r, s):
    """L2 distance between the centroids of r and s"""
    _paired(r, s)
    return float(euclidean(centroid(r), centroid(s)))


def median_bandwidth(x, y):
    """Median pairwise Euclidean distance of the pooled sample (1.0 if zero)"""
    distances = pdist(np.vstack([x, y]))
    width = float(np.median(distances)) if distances.size else 0.0
    if width <= 0:
        logger.warning("Median pairwise distance is 0; using bandwidth 1.0")
        return 1.0
    return width


def mmd_squared(x, y, bandwidths):
    """
    Biased quadratic MMD^2 with a sum of RBF kernels

    k(a, b) = sum over sigma of exp(-|a - b|^2 / (2 sigma^2))

    Args:
        x: Array (n, d)
        y: Array (m, d)
        bandwidths: Sequence of positive kernel widths

    Returns:
        float: MMD^2 clamped at 0
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    d_xx = cdist(x, x, 'sqeuclidean')
    d_yy = cdist(y, y, 'sqeuclidean')
    d_xy = cdist(x, y, 'sqeuclidean')

    total = 0.0
    for sigma in bandwidths:
        gamma = 1.0 / (2.0 * sigma * sigma)
        total += (
            np.exp(-gamma * d_xx).mean()
            + np.exp(-gamma * d_yy).mean()
            - 2.0 * np.exp(-gamma * d_xy).mean()
        )
    return max(0.0, float(total))


def mmd(r, s, cfg=None):
    """
    Kernel two-sample distance between real and synthetic cells

    Args:
        r: Real ExpressionMatrix (>= 2 cells)
        s: Synthetic ExpressionMatrix (>= 2 cells)
        cfg: MmdConfig

    Returns:
        float: Biased MMD^2 estimate
    """
    cfg = cfg or MmdConfig()
    _paired(r, s)
    if r.n_cells < 2 or s.n_cells < 2:
        raise EmptyMatrixError("MMD needs at least 2 cells on each side")
    if cfg.max_cells:
        r = subsample(r, cfg.max_cells, derive_seed(cfg.seed, 'mmd', 'real'))
        s = subsample(s, cfg.max_cells, derive_seed(cfg.seed, 'mmd', 'synthetic'))

    bandwidths = cfg.bandwidths
    if isinstance(bandwidths, str):
        bandwidths = (median_bandwidth(r.values, s.values),)
    return mmd_squared(r.values, s.values, bandwidths)


def auroc(scores, labels):
    """
    Rank-based (Mann-Whitney) AUROC, ties counted as 1/2

    Args:
        scores: Real-valued scores
        labels: 0/1 labels (1 = positive)

    Returns:
        float: AUROC in [0, 1]
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(int)
    if scores.shape != labels.shape:
        raise MetricError("scores and labels differ in length")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUROC needs both classes")

    ranks = rankdata(scores)
    u_statistic = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


def rf_auroc(r, s, cfg=None):
    """
    Held-out AUROC of a random forest separating real (1) from synthetic (0)

    Args:
        r: Real ExpressionMatrix (>= 20 cells)
        s: Synthetic ExpressionMatrix (>= 20 cells)
        cfg: ForestConfig

    Returns:
        MetricSummary: AUROC over cfg.repeats stratified splits
    """
    cfg = cfg or ForestConfig()
    _paired(r, s)
    if min(r.n_cells, s.n_cells) < MIN_FOREST_CELLS:
        raise TooFewCellsError(
            f"RF AUROC needs >= {MIN_FOREST_CELLS} cells per side, got {r.n_cells} and {s.n_cells}"
        )

    features = np.vstack([r.values, s.values])
    labels = np.concatenate([np.ones(r.n_cells, dtype=int), np.zeros(s.n_cells, dtype=int)])

    scores = []
    for repeat in range(cfg.repeats):
        seed = derive_seed(cfg.seed, 'rf', repeat)
        x_train, x_test, y_train, y_test = train_test_split(
            features, labels, test_size=cfg.test_fraction, stratify=labels, random_state=seed
        )
        forest = RandomForestClassifier(
            n_estimators=cfg.n_estimators,
            max_depth=cfg.max_depth,
            random_state=seed,
            n_jobs=cfg.n_jobs,
        )
        forest.fit(x_train, y_train)
        scores.append(auroc(forest.predict_proba(x_test)[:, 1], y_test))
    return MetricSummary.from_values(scores)


def to_metric_space(m, space=LOGNORM, scale=DEFAULT_LIBRARY_SCALE):
    """
    Matrix in the space metrics are computed in

    Raw matrices are library-normalized and log1p-transformed for the
    lognorm space; all-zero cells stay zero and are reported with a warning.
    """
    if space == RAW or m.normalized == LOGNORM:
        return m
    if space != LOGNORM:
        raise MetricError(f"Unknown metric space: {space}")
    totals = m.values.sum(axis=1)
    empty = totals <= 0
    if empty.any():
        first = m.barcodes[int(np.flatnonzero(empty)[0])]
        logger.warning(f"{int(empty.sum())} cells have zero library size (first {first}); left at zero")
    factor = np.divide(scale, totals, out=np.zeros_like(totals), where=~empty)
    return ExpressionMatrix(np.log1p(m.values * factor[:, None]), m.barcodes, m.genes, LOGNORM)


class MetricCalculator:
    """Computes every fidelity metric for a set of synthetic replicates"""

    def __init__(self, mmd_config=None, forest_config=None, space=LOGNORM,
                 library_scale=DEFAULT_LIBRARY_SCALE):
        """
        Initialize metric calculator

        Args:
            mmd_config: MmdConfig
            forest_config: ForestConfig
            space: 'lognorm' (default) or 'raw'
            library_scale: Library size used for lognorm conversion
        """
        self.mmd_config = mmd_config or MmdConfig()
        self.forest_config = forest_config or ForestConfig()
        self.space = space
        self.library_scale = library_scale

    def calculate_all(self, real, replicates, label, reference='test'):
        """
        Calculate all metrics of each replicate against the real cells

        Args:
            real: Real ExpressionMatrix
            replicates: List of synthetic ExpressionMatrix
            label: Arm label reported in the table
            reference: Name of the real reference set

        Returns:
            MetricReport: mean ± std over replicates
        """
        if not replicates:
            raise MetricError("No synthetic replicates to evaluate")
        real = to_metric_space(real, self.space, self.library_scale)
        values = {name: [] for name in METRIC_COLUMNS}

        for i, replicate in enumerate(replicates):
            synthetic = to_metric_space(replicate, self.space, self.library_scale)
            logger.info(f"[{label}] replicate {i + 1}/{len(replicates)}: {synthetic.n_cells} cells")

            logger.info("Calculating centroid distances...")
            values['cosine'].append(cosine_distance(real, synthetic))
            values['euclidean'].append(euclidean_distance(real, synthetic))

            logger.info("Calculating MMD...")
            values['mmd'].append(mmd(real, synthetic, self.mmd_config))

            logger.info("Calculating RF AUROC...")
            per_replicate = replace(self.forest_config, seed=derive_seed(self.forest_config.seed, i))
            values['rf_auroc'].append(rf_auroc(real, synthetic, per_replicate).mean)

        report = MetricReport(
            label=label,
            reference=reference,
            n_repeats=len(replicates),
            mmd_kernel=self.mmd_config.describe(),
            space=self.space,
            **{name: MetricSummary.from_values(values[name]) for name in METRIC_COLUMNS},
        )
        logger.info(
            f"[{label}] cosine={report.cosine} euclidean={report.euclidean} "
            f"mmd={report.mmd} rf_auroc={report.rf_auroc}"
        )
        return report


def evaluate_replicates(real, replicates, label, mmd_config=None, forest_config=None,
                        space=LOGNORM, reference='test'):
    """Convenience wrapper around MetricCalculator.calculate_all"""
    calculator = MetricCalculator(mmd_config, forest_config, space)
    return calculator.calculate_all(real, replicates, label, reference)
