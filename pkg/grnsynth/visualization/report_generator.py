"""
Report Generator
Creates Table-1 style CSV and Markdown summaries from run manifests and
the GRN overlap matrix for graphs sharing a partition
"""

from collections import defaultdict
from pathlib import Path
from typing import NamedTuple

import pandas as pd

from grnsynth.analytics.metrics import METRIC_COLUMNS, MetricReport
from grnsynth.data_loader.grn_io import read_grn
from grnsynth.grn.core import overlap_matrix, partition_digest
from grnsynth.utils.exceptions import IncompatibleManifestsError
from grnsynth.utils.logger import setup_logger
from grnsynth.visualization.chart_generator import ChartGenerator

logger = setup_logger(__name__)

BASELINE_SOURCES = ('control', 'stage1')
KB_GROUPS = {
    'human_file': 'Setting 1: human knowledge base',
    'llm': 'Setting 2: LLM knowledge base',
}
TABLE_COLUMNS = ['dataset', 'group', 'setting', 'arm', 'grn_source'] + [
    column for name in METRIC_COLUMNS for column in (name, f'{name}_std')
] + ['n_repeats']


class ReportResult(NamedTuple):
    table: pd.DataFrame
    best: dict
    paths: dict


class ReportGenerator:
    """Report generation manager"""

    def __init__(self, reports_path):
        """
        Initialize report generator

        Args:
            reports_path: Output directory for reports
        """
        self.reports_path = Path(reports_path)
        self.reports_path.mkdir(parents=True, exist_ok=True)
        self.charts = ChartGenerator(self.reports_path)

    @staticmethod
    def check_compatible(manifests):
        digests = {m.vocabulary_digest for m in manifests}
        if len(digests) > 1:
            raise IncompatibleManifestsError(
                f"Manifests cover {len(digests)} different gene vocabularies"
            )

    @staticmethod
    def build_table(manifests):
        """One row per (manifest, arm) with a finished MetricReport"""
        rows = []
        for manifest in manifests:
            for arm in manifest.arms:
                if not arm.report:
                    continue
                report = MetricReport.from_dict(arm.report).to_row()
                rows.append({
                    'dataset': manifest.dataset,
                    'group': KB_GROUPS.get(manifest.kb_source, manifest.kb_source),
                    'setting': arm.setting,
                    'arm': arm.name,
                    'grn_source': arm.grn_source,
                    **{column: report[column] for column in TABLE_COLUMNS if column in report},
                })
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)

    @staticmethod
    def mark_best(table):
        """
        Row index of the lowest value per dataset and metric, baselines excluded

        Returns:
            dict: (dataset, metric) -> row index
        """
        best = {}
        candidates = table[~table['grn_source'].isin(BASELINE_SOURCES)]
        for dataset, rows in candidates.groupby('dataset', sort=False):
            for name in METRIC_COLUMNS:
                if rows[name].notna().any():
                    best[(dataset, name)] = rows[name].idxmin()
        return best

    def generate_table_csv(self, table, name='table1'):
        """Write the Table-1 CSV"""
        csv_file = self.reports_path / f'{name}.csv'
        table.to_csv(csv_file, index=False, float_format='%.6g', lineterminator='\n')
        logger.info(f"Generated metrics table: {csv_file}")
        return csv_file

    def generate_markdown(self, table, best, name='table1'):
        """
        Markdown tables grouped by dataset and knowledge-base setting; the best
        non-baseline value of each column is bold
        """
        lines = []
        lines.append("# Synthetic data fidelity")
        lines.append("")
        lines.append("Lower is better for every column. Bold marks the best value per dataset, "
                     "excluding control and stage1-surrogate rows.")
        for dataset, dataset_rows in table.groupby('dataset', sort=False):
            lines.append("")
            lines.append(f"## {dataset}")
            for group, rows in dataset_rows.groupby('group', sort=False):
                lines.append("")
                lines.append(f"### {group}")
                lines.append("")
                lines.append("| Setting | Arm | GRN | Cosine | Euclidean | MMD | RF AUROC |")
                lines.append("|---|---|---|---|---|---|---|")
                for index, row in rows.iterrows():
                    cells = []
                    for metric in METRIC_COLUMNS:
                        text = f"{row[metric]:.4g} ± {row[f'{metric}_std']:.2g}"
                        if best.get((dataset, metric)) == index:
                            text = f"**{text}**"
                        cells.append(text)
                    lines.append(
                        f"| {row['setting']} | {row['arm']} | {row['grn_source']} | "
                        + " | ".join(cells) + " |"
                    )
        report_text = "\n".join(lines) + "\n"

        md_file = self.reports_path / f'{name}.md'
        with open(md_file, 'w', encoding='utf-8') as f:
            f.write(report_text)
        logger.info(f"Generated markdown report: {md_file}")
        return md_file

    def generate_overlap(self, manifests):
        """
        Overlap matrix (CSV + heatmap) for each group of >= 2 GRNs that share
        a partition and k

        Returns:
            dict: Group key -> CSV path
        """
        groups = defaultdict(dict)
        for manifest in manifests:
            for arm in manifest.arms:
                if not arm.grn_path or not Path(arm.grn_path).exists():
                    continue
                grn = read_grn(arm.grn_path)
                name = f"{manifest.dataset}/{arm.name}"
                groups[partition_digest(grn.partition, grn.k)][name] = grn

        paths = {}
        for key, grns in groups.items():
            if len(grns) < 2:
                continue
            table = overlap_matrix(grns)
            stem = f'grn_overlap_{key[:8]}'
            csv_file = self.reports_path / f'{stem}.csv'
            table.to_csv(csv_file, float_format='%.6f', lineterminator='\n')
            self.charts.plot_overlap_heatmap(table, stem)
            logger.info(f"Generated overlap matrix for {len(grns)} GRNs: {csv_file}")
            paths[key] = csv_file
        return paths

    def generate_all_reports(self, manifests):
        """
        Generate all reports

        Args:
            manifests: List of RunManifest

        Returns:
            ReportResult: (table, best marks, written paths)
        """
        if not manifests:
            raise IncompatibleManifestsError("No manifests to report on")
        self.check_compatible(manifests)
        logger.info(f"Generating reports for {len(manifests)} manifests...")

        table = self.build_table(manifests)
        best = self.mark_best(table)
        paths = {
            'csv': self.generate_table_csv(table),
            'markdown': self.generate_markdown(table, best),
            'overlap': self.generate_overlap(manifests),
        }
        logger.info("All reports generated successfully")
        return ReportResult(table, best, paths)


def make_report(manifests, out_dir):
    """Aggregate manifests into report files under out_dir"""
    return ReportGenerator(out_dir).generate_all_reports(manifests)
