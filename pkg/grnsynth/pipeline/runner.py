"""
Pipeline Runner
ingest -> partition -> GRN -> synthesize -> evaluate -> report for every
arm of a run configuration
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import pandas as pd

from grnsynth.analytics.annotation import annotate_and_proportions, marker_summary, proportion_table
from grnsynth.analytics.metrics import MetricCalculator, to_metric_space
from grnsynth.analytics.preprocessing import normalize_log1p, preprocess, subsample
from grnsynth.data_loader.grn_io import read_grn, read_tf_list, write_grn, write_tf_list
from grnsynth.data_loader.matrix_loader import load_matrix, read_labels, write_matrix_csv
from grnsynth.grn.core import TfPartition, density_table, partition_digest, random_grn
from grnsynth.grn.inference import infer_grn
from grnsynth.knowledge.client import build_client
from grnsynth.knowledge.knowledge_base import build_llm_grn, extract_tf_partition
from grnsynth.knowledge.prompts import REGULATOR_SELECTION, TF_EXTRACTION, load_template
from grnsynth.pipeline.config import LLM
from grnsynth.pipeline.manifest import ArmRecord, RunManifest, digest_outputs, vocabulary_digest
from grnsynth.synthesis.scm import fit_scm, sample_stage_one, sample_synthetic
from grnsynth.utils.exceptions import PartitionMismatchError, StageError
from grnsynth.utils.logger import setup_logger
from grnsynth.utils.seeding import derive_seed
from grnsynth.visualization.chart_generator import ChartGenerator
from grnsynth.visualization.report_generator import make_report

logger = setup_logger(__name__)

STAGES = ('ingest', 'partition', 'grn', 'synthesize', 'evaluate', 'report')
NO_GRN_SOURCES = ('control', 'stage1')


class PipelineRunner:
    """Runs every arm of one configuration and records a manifest"""

    def __init__(self, config, client=None, offline=False):
        """
        Initialize runner

        Args:
            config: RunConfig
            client: ChatClient to use instead of the configured one
            offline: Replay cached LLM exchanges only
        """
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.offline = offline
        self._client = client
        self._client_lock = threading.Lock()
        self._timing_lock = threading.Lock()
        self.manifest = None

    @property
    def client(self):
        with self._client_lock:
            if self._client is None:
                self._client = build_client(self.config.llm, offline=self.offline)
            return self._client

    @contextmanager
    def stage(self, name, arm=None):
        """Time a stage and wrap its failures in StageError"""
        key = name if arm is None else f"{name}:{arm}"
        logger.info("=" * 80)
        logger.info(f"STAGE {key}")
        logger.info("=" * 80)
        start = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except Exception as e:
            logger.error(f"Stage '{key}' failed: {e}", exc_info=True)
            raise StageError(name, e) from e
        finally:
            with self._timing_lock:
                self.manifest.timings[key] = round(time.perf_counter() - start, 3)

    # ------------------------------------------------------------ stages

    def ingest(self):
        """Load, filter and split the dataset; labels are aligned to the test split"""
        dataset = self.config.dataset
        self.manifest.record_input('matrix', dataset.matrix)
        self.manifest.record_input('labels', dataset.labels)
        self.manifest.record_input('context_file', dataset.context_file)

        matrix = load_matrix(dataset.matrix, dataset.format)
        splits = preprocess(matrix, dataset.preprocess(), dataset.split())
        self.manifest.vocabulary_digest = vocabulary_digest(splits.train.genes)

        data_dir = self.out_dir / 'data'
        data_dir.mkdir(parents=True, exist_ok=True)
        assignment = pd.DataFrame({
            'barcode': [b for part in splits for b in part.barcodes],
            'split': [name for name, part in zip(splits._fields, splits) for _ in part.barcodes],
        })
        assignment.to_csv(data_dir / 'splits.csv', index=False, lineterminator='\n')
        (data_dir / 'genes.txt').write_text('\n'.join(splits.train.genes.symbols) + '\n', encoding='utf-8')

        test_labels = None
        if dataset.labels:
            test_labels = read_labels(dataset.labels, splits.test.barcodes)
            proportion_table(test_labels).to_csv(data_dir / 'real_proportions.csv')
        return splits, test_labels

    def build_partition(self, genes):
        """TF/target partition from the curated list or by LLM extraction"""
        knowledge = self.config.knowledge
        if knowledge.source == LLM:
            template = load_template(knowledge.tf_template, TF_EXTRACTION) if knowledge.tf_template else None
            partition = extract_tf_partition(
                genes,
                self.config.dataset.context_text(),
                knowledge.window,
                knowledge.stride,
                self.client,
                validate_membership=knowledge.validate_membership,
                template=template,
                max_tfs=knowledge.max_tfs,
                max_workers=self.config.llm.max_concurrency,
            )
        else:
            self.manifest.record_input('tf_list', knowledge.tf_list)
            partition = TfPartition.from_tf_list(genes, read_tf_list(knowledge.tf_list))

        write_tf_list(partition.sorted_tfs, self.out_dir / 'partition' / 'tfs.txt')
        self.manifest.partition_digest = partition_digest(partition, self.config.k)
        self.manifest.k = self.config.k
        logger.info(f"Partition: {len(partition.tfs)} TFs, {len(partition.targets)} targets")
        return partition

    def build_grn(self, arm, seed, splits, partition, arm_dir):
        """GRN of one arm for one seed"""
        cfg = self.config
        source = arm.grn_source
        if source == 'llm':
            knowledge = cfg.knowledge
            template = (
                load_template(knowledge.regulator_template, REGULATOR_SELECTION)
                if knowledge.regulator_template else None
            )
            return build_llm_grn(
                partition, cfg.dataset.context_text(), cfg.k, self.client,
                max_retries=knowledge.max_retries, template=template,
                max_workers=cfg.llm.max_concurrency,
            )
        if source == 'statistical':
            gbm = replace(cfg.gbm, seed=derive_seed(cfg.gbm.seed, seed))
            train = normalize_log1p(splits.train, cfg.dataset.library_scale)
            return infer_grn(train, partition, cfg.k, gbm, n_jobs=cfg.n_jobs,
                             importance_path=arm_dir / f'importances_seed{seed}.tsv')
        if source == 'random':
            return random_grn(partition, cfg.k, derive_seed(seed, 'random-grn'))
        if source == 'file':
            grn = read_grn(arm.grn_file)
            if grn.partition != partition:
                raise PartitionMismatchError(
                    f"GRN file {arm.grn_file} was built on a different TF/target partition"
                )
            return grn
        raise ValueError(f"Arm {arm.name} has no GRN source")

    def synthesize(self, arm, seed, grn, splits, partition, arm_dir):
        """Synthetic (or control) replicates of one arm for one seed"""
        cfg = self.config
        n_cells = cfg.synthesis.n_cells or splits.test.n_cells
        scale = cfg.dataset.library_scale
        seeds = [derive_seed(seed, r) for r in range(cfg.synthesis.replicates)]

        if arm.grn_source == 'control':
            control_cells = cfg.synthesis.control_cells or splits.train.n_cells
            return [subsample(splits.train, control_cells, s) for s in seeds]
        if arm.grn_source == 'stage1':
            replicates = [sample_stage_one(splits.train, partition, n_cells, s, scale) for s in seeds]
        else:
            gbm = replace(cfg.gbm, seed=derive_seed(cfg.gbm.seed, seed))
            scm = fit_scm(splits.train, grn, gbm, library_scale=scale, n_jobs=cfg.n_jobs)
            replicates = [sample_synthetic(scm, n_cells, s) for s in seeds]

        for r, matrix in enumerate(replicates):
            write_matrix_csv(matrix, arm_dir / f'synthetic_seed{seed}_rep{r}.csv')
        return replicates

    def run_arm(self, arm, splits, partition):
        """
        GRN, synthesis and evaluation of one arm over all seeds

        Returns:
            tuple: (ArmRecord, first replicate, {seed: Grn})
        """
        cfg = self.config
        arm_dir = self.out_dir / 'arms' / arm.name
        arm_dir.mkdir(parents=True, exist_ok=True)
        record = ArmRecord(name=arm.name, grn_source=arm.grn_source, setting=cfg.setting_label(arm))

        grns = {}
        if arm.grn_source not in NO_GRN_SOURCES:
            with self.stage('grn', arm.name):
                for seed in cfg.seeds:
                    grns[seed] = self.build_grn(arm, seed, splits, partition, arm_dir)
                    path = write_grn(grns[seed], arm_dir / f'grn_seed{seed}.tsv')
                    if record.grn_path is None:
                        record.grn_path = str(path)

        replicates = []
        with self.stage('synthesize', arm.name):
            for seed in cfg.seeds:
                replicates.extend(
                    self.synthesize(arm, seed, grns.get(seed), splits, partition, arm_dir)
                )

        with self.stage('evaluate', arm.name):
            calculator = MetricCalculator(
                cfg.metrics.mmd, cfg.metrics.forest, cfg.metrics.space, cfg.dataset.library_scale
            )
            report = calculator.calculate_all(splits.test, replicates, label=arm.name)
            report.write_json(arm_dir / 'metrics.json')
            record.report = report.to_dict()
        return record, replicates[0], grns

    def plot_arm(self, arm_name, synthetic, splits, test_labels):
        """Projection, annotation and dot-plot outputs for one arm"""
        cfg = self.config
        arm_dir = self.out_dir / 'arms' / arm_name
        charts = ChartGenerator(arm_dir)
        if cfg.metrics.plots:
            charts.plot_projection(splits.test, synthetic, 'projection', cfg.metrics.n_pcs,
                                   interactive=cfg.metrics.interactive)
        if test_labels is None:
            return
        labels, table = annotate_and_proportions(splits.test, test_labels, synthetic, cfg.metrics.n_pcs)
        table.to_csv(arm_dir / 'proportions.csv')
        if cfg.metrics.markers:
            summary = marker_summary(to_metric_space(synthetic), labels, cfg.metrics.markers)
            summary.to_csv(arm_dir / 'dotplot.csv', index=False, float_format='%.6g', lineterminator='\n')
            if cfg.metrics.plots:
                charts.plot_dot(summary, 'dotplot')

    def run(self):
        """
        Execute the whole run

        Returns:
            RunManifest: Finished manifest (also written to out_dir)
        """
        cfg = self.config
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(
            config=cfg.to_dict(), dataset=cfg.dataset.name, kb_source=cfg.knowledge.source
        )
        logger.info("=" * 80)
        logger.info(f"Starting run for {cfg.dataset.name}: {len(cfg.arms)} arms, seeds {list(cfg.seeds)}")
        logger.info("=" * 80)

        try:
            with self.stage('ingest'):
                splits, test_labels = self.ingest()
            with self.stage('partition'):
                partition = self.build_partition(splits.train.genes)

            workers = max(1, min(cfg.parallel_arms, len(cfg.arms)))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(self.run_arm, arm, splits, partition) for arm in cfg.arms]
                results = [future.result() for future in futures]

            with self.stage('report'):
                all_grns = {}
                for record, first_replicate, grns in results:
                    self.manifest.arms.append(record)
                    self.plot_arm(record.name, first_replicate, splits, test_labels)
                    for seed, grn in grns.items():
                        all_grns[f'{record.name}/seed{seed}'] = grn
                report_dir = self.out_dir / 'report'
                make_report([self.manifest], report_dir)
                if all_grns:
                    density_table(all_grns).to_csv(report_dir / 'density.csv', index=False,
                                                   lineterminator='\n')
            self.manifest.status = 'ok'
        except StageError as e:
            self.manifest.mark_failed(e.stage, e.cause)
            raise
        finally:
            exclude = [cfg.llm.cache_path] if cfg.llm.cache_path else []
            self.manifest.outputs = digest_outputs(self.out_dir, exclude=exclude)
            self.manifest.write(self.out_dir)

        logger.info("=" * 80)
        logger.info("Run completed successfully!")
        logger.info("=" * 80)
        return self.manifest


def run_setting(config, client=None, offline=False):
    """Run one configuration end to end and return its manifest"""
    return PipelineRunner(config, client=client, offline=offline).run()
