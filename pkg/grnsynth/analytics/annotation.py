"""
Cell Type Annotation
Label transfer from annotated real cells to synthetic cells, cell-type
proportions and marker dot-plot data
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.decomposition import PCA
from sklearn.neighbors import NearestCentroid

from grnsynth.analytics.metrics import to_metric_space
from grnsynth.grn.core import normalize_symbol
from grnsynth.utils.exceptions import EmptyLabelError, UnknownMarkerError
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)

DEFAULT_N_PCS = 50


@dataclass(frozen=True, eq=False)
class CellTypeTable:
    """Per cell type: label, count, percentage (percentages sum to 100)"""

    frame: pd.DataFrame

    @property
    def percentages(self):
        return dict(zip(self.frame['label'], self.frame['percentage']))

    def to_csv(self, path):
        self.frame.to_csv(path, index=False, float_format='%.4f', lineterminator='\n')
        return path


def _check_labels(labels, n_cells):
    labels = np.asarray([str(label).strip() for label in labels], dtype=object)
    if labels.size != n_cells:
        raise EmptyLabelError(f"{labels.size} labels for {n_cells} cells")
    if labels.size == 0 or any(not label for label in labels):
        raise EmptyLabelError("Every annotated cell needs a nonempty label")
    return labels


def proportion_table(labels, categories=None):
    """
    Tabulate label counts and percentages

    Args:
        labels: Per-cell labels
        categories: Labels to report even when absent (count 0)

    Returns:
        CellTypeTable: Rows sorted by label
    """
    counts = pd.Series(list(labels), dtype=object).value_counts()
    names = sorted(set(counts.index) | set(categories if categories is not None else ()))
    total = int(counts.sum())
    frame = pd.DataFrame({
        'label': names,
        'count': [int(counts.get(name, 0)) for name in names],
    })
    frame['percentage'] = 100.0 * frame['count'] / total if total else 0.0
    return CellTypeTable(frame)


def annotate_and_proportions(real, labels, synthetic, n_pcs=DEFAULT_N_PCS):
    """
    Transfer labels from annotated real cells to synthetic cells

    PCA is fit on lognorm real cells; each synthetic cell takes the label of
    the nearest per-label centroid in PC space. A synthetic cell identical to
    a real cell takes that cell's label.

    Args:
        real: Real ExpressionMatrix
        labels: Per-cell labels of real
        synthetic: Synthetic ExpressionMatrix on the same vocabulary
        n_pcs: Principal components (capped by cells and genes)

    Returns:
        tuple: (synthetic labels array, CellTypeTable)
    """
    real.require_same_genes(synthetic)
    labels = _check_labels(labels, real.n_cells)
    real_values = to_metric_space(real).values
    synthetic_values = to_metric_space(synthetic).values

    n_components = max(1, min(n_pcs, real.n_cells, real.n_genes))
    pca = PCA(n_components=n_components, svd_solver='full')
    real_pcs = pca.fit_transform(real_values)
    classes = np.unique(labels)
    logger.info(
        f"Annotating {synthetic.n_cells} cells with {len(classes)} types in {n_components} PCs"
    )
    if len(classes) == 1:
        predicted = np.full(synthetic.n_cells, classes[0], dtype=object)
    else:
        classifier = NearestCentroid().fit(real_pcs, labels)
        predicted = classifier.predict(pca.transform(synthetic_values)).astype(object)

    known = {}
    for row, label in zip(real_values, labels):
        known.setdefault(row.tobytes(), label)
    copies = 0
    for i, row in enumerate(synthetic_values):
        label = known.get(row.tobytes())
        if label is not None:
            predicted[i] = label
            copies += 1
    if copies:
        logger.info(f"{copies} synthetic cells match a real cell exactly")

    return predicted, proportion_table(predicted, categories=classes)


def marker_summary(m, labels, markers):
    """
    Dot-plot data: mean expression and expressing fraction per type and marker

    Args:
        m: ExpressionMatrix (lognorm for the usual dot plot)
        labels: Per-cell labels
        markers: Marker gene symbols

    Returns:
        pd.DataFrame: Long form with columns cell_type, marker, mean, fraction
    """
    markers = [normalize_symbol(s) for s in markers]
    unknown = [s for s in markers if s not in m.genes]
    if unknown:
        raise UnknownMarkerError(f"Markers not in vocabulary: {unknown}")
    labels = _check_labels(labels, m.n_cells)

    values = m.columns(markers)
    rows = []
    for cell_type in sorted(set(labels)):
        subset = values[labels == cell_type]
        for j, marker in enumerate(markers):
            rows.append({
                'cell_type': cell_type,
                'marker': marker,
                'mean': float(subset[:, j].mean()),
                'fraction': float((subset[:, j] > 0).mean()),
            })
    return pd.DataFrame(rows, columns=['cell_type', 'marker', 'mean', 'fraction'])
