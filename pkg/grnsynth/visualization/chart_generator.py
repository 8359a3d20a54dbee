"""
Chart Generator
PCA projections of real vs synthetic cells, marker dot plots and GRN
overlap heatmaps using matplotlib, seaborn, and plotly
"""

from pathlib import Path

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import plotly.express as px  # noqa: E402
import seaborn as sns  # noqa: E402
from sklearn.decomposition import PCA  # noqa: E402

from grnsynth.analytics.metrics import to_metric_space  # noqa: E402
from grnsynth.utils.exceptions import EmptyMatrixError  # noqa: E402
from grnsynth.utils.logger import setup_logger  # noqa: E402

logger = setup_logger(__name__)

# Set style
sns.set_style("whitegrid")
plt.rcParams['svg.hashsalt'] = 'grnsynth'
plt.rcParams['svg.fonttype'] = 'none'

SAVE_METADATA = {'svg': {'Date': None}, 'png': {'Software': None}}
SOURCE_COLORS = {'real': 'steelblue', 'synthetic': 'coral'}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip('.').lower() or 'svg'
    fig.savefig(path, format=fmt, bbox_inches='tight', metadata=SAVE_METADATA.get(fmt))
    plt.close(fig)
    logger.info(f"Saved chart: {path}")
    return path


def projection_coordinates(real, synthetic, n_pcs=50):
    """
    PCA coordinates of real and synthetic cells, fit on the pooled lognorm data

    Args:
        real: Real ExpressionMatrix
        synthetic: Synthetic ExpressionMatrix on the same vocabulary
        n_pcs: Number of components kept

    Returns:
        pd.DataFrame: Columns source, barcode, PC1..PCn; real rows first
    """
    real.require_same_genes(synthetic)
    if real.n_cells == 0 or synthetic.n_cells == 0:
        raise EmptyMatrixError("Projection needs cells on both sides")

    pooled = np.vstack([to_metric_space(real).values, to_metric_space(synthetic).values])
    n_components = max(1, min(n_pcs, pooled.shape[0], pooled.shape[1]))
    coordinates = PCA(n_components=n_components, svd_solver='full').fit_transform(pooled)

    frame = pd.DataFrame(coordinates, columns=[f'PC{i + 1}' for i in range(n_components)])
    frame.insert(0, 'barcode', list(real.barcodes) + list(synthetic.barcodes))
    frame.insert(0, 'source', ['real'] * real.n_cells + ['synthetic'] * synthetic.n_cells)
    return frame


class ChartGenerator:
    """Chart generation manager"""

    def __init__(self, charts_path):
        """
        Initialize chart generator

        Args:
            charts_path: Output directory for charts
        """
        self.charts_path = Path(charts_path)
        self.charts_path.mkdir(parents=True, exist_ok=True)

    def plot_projection(self, real, synthetic, name='projection', n_pcs=50, interactive=False):
        """
        Scatter of the first two PCs, real vs synthetic, plus a coordinate CSV

        Args:
            real: Real ExpressionMatrix
            synthetic: Synthetic ExpressionMatrix
            name: File stem
            n_pcs: Components written to the CSV
            interactive: Also write a plotly HTML scatter

        Returns:
            dict: Paths keyed by 'svg', 'csv' (and 'html')
        """
        frame = projection_coordinates(real, synthetic, n_pcs)
        if 'PC2' not in frame:
            frame['PC2'] = 0.0

        csv_file = self.charts_path / f'{name}.csv'
        frame.to_csv(csv_file, index=False, float_format='%.10g', lineterminator='\n')
        logger.info(f"Saved projection coordinates: {csv_file}")

        fig, ax = plt.subplots(figsize=(7, 6))
        for source, color in SOURCE_COLORS.items():
            subset = frame[frame['source'] == source]
            ax.scatter(subset['PC1'], subset['PC2'], s=6, alpha=0.6, color=color,
                       label=f'{source} ({len(subset)})', rasterized=False)
        ax.set_title('Real vs synthetic cells (PCA)', fontsize=14, fontweight='bold')
        ax.set_xlabel('PC1')
        ax.set_ylabel('PC2')
        ax.legend(loc='best')
        paths = {'csv': csv_file, 'svg': _save(fig, self.charts_path / f'{name}.svg')}

        if interactive:
            html_file = self.charts_path / f'{name}.html'
            figure = px.scatter(frame, x='PC1', y='PC2', color='source', hover_data=['barcode'],
                                color_discrete_map=SOURCE_COLORS,
                                title='Real vs synthetic cells (PCA)')
            figure.write_html(str(html_file), include_plotlyjs='cdn')
            logger.info(f"Saved interactive projection: {html_file}")
            paths['html'] = html_file
        return paths

    def plot_dot(self, summary, name='marker_dotplot'):
        """
        Marker dot plot: dot size = expressing fraction, color = mean expression

        Args:
            summary: marker_summary DataFrame (cell_type, marker, mean, fraction)
            name: File stem

        Returns:
            Path: SVG file
        """
        if summary.empty:
            logger.warning("No marker data for dot plot")
            return None
        n_markers = summary['marker'].nunique()
        n_types = summary['cell_type'].nunique()
        fig, ax = plt.subplots(figsize=(1.0 + 0.6 * n_markers, 1.5 + 0.4 * n_types))
        sns.scatterplot(
            data=summary, x='marker', y='cell_type', size='fraction', hue='mean',
            sizes=(10, 250), size_norm=(0, 1), palette='Reds', edgecolor='grey', ax=ax,
        )
        ax.set_title('Marker expression by cell type', fontsize=12, fontweight='bold')
        ax.set_xlabel('Marker')
        ax.set_ylabel('Cell type')
        ax.tick_params(axis='x', rotation=45)
        ax.legend(bbox_to_anchor=(1.02, 1), loc='upper left', borderaxespad=0)
        return _save(fig, self.charts_path / f'{name}.svg')

    def plot_overlap_heatmap(self, table, name='grn_overlap'):
        """
        Heatmap of a pairwise GRN overlap table

        Args:
            table: Square DataFrame from overlap_matrix
            name: File stem

        Returns:
            Path: SVG file
        """
        size = 2.0 + 0.8 * len(table)
        fig, ax = plt.subplots(figsize=(size, size * 0.85))
        sns.heatmap(table.astype(float), annot=True, fmt='.2f', vmin=0, vmax=1,
                    cmap='viridis', square=True, ax=ax)
        ax.set_title('GRN edge overlap', fontsize=12, fontweight='bold')
        return _save(fig, self.charts_path / f'{name}.svg')
