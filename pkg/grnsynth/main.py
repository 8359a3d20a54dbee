"""
Main Pipeline Orchestrator
Command-line entry point for every toolkit step and the end-to-end run
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from grnsynth import __version__
from grnsynth.analytics.metrics import ForestConfig, MetricCalculator, MmdConfig
from grnsynth.analytics.preprocessing import (
    DEFAULT_LIBRARY_SCALE,
    PreprocessConfig,
    SplitSpec,
    normalize_log1p,
    preprocess,
)
from grnsynth.data_loader.grn_io import read_grn, read_tf_list, write_grn, write_tf_list
from grnsynth.data_loader.matrix_loader import load_matrix, write_matrix_csv
from grnsynth.grn.core import TfPartition, overlap_matrix, random_grn
from grnsynth.grn.inference import GbmConfig, infer_grn
from grnsynth.knowledge.client import LlmConfig, build_client
from grnsynth.knowledge.knowledge_base import build_llm_grn, extract_tf_partition
from grnsynth.pipeline.config import RunConfig, build_section
from grnsynth.pipeline.manifest import RunManifest
from grnsynth.pipeline.runner import run_setting
from grnsynth.synthesis.linear_uniform import LinearUniformSpec, write_linear_uniform
from grnsynth.synthesis.scm import fit_scm, sample_stage_one, sample_synthetic
from grnsynth.utils.config_loader import load_config
from grnsynth.utils.exceptions import ConfigError, GrnSynthError, StageError
from grnsynth.utils.logger import attach_run_log, detach_run_log, set_package_level, setup_logger
from grnsynth.utils.seeding import derive_seed
from grnsynth.visualization.chart_generator import ChartGenerator
from grnsynth.visualization.report_generator import make_report

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


# ---------------------------------------------------------------- helpers

def _out_dir(args):
    path = Path(args.out_dir or 'output')
    path.mkdir(parents=True, exist_ok=True)
    return path


def _seed(args):
    return 0 if args.seed is None else args.seed


def _context(args):
    if getattr(args, 'context_file', None):
        return Path(args.context_file).read_text(encoding='utf-8').strip()
    return getattr(args, 'context', '') or ''


def _llm_config(args):
    """LLM settings from the config file's llm section, with --cache override"""
    config = LlmConfig()
    if args.config:
        section = load_config(args.config).get('llm')
        config = build_section(LlmConfig, section, 'llm')
    if getattr(args, 'cache', None):
        config = replace(config, cache_path=args.cache)
    return config


def _partition(matrix, tf_path):
    return TfPartition.from_tf_list(matrix.genes, read_tf_list(tf_path))


# ---------------------------------------------------------------- commands

def cmd_ingest(args):
    matrix = load_matrix(args.matrix, args.format)
    splits = preprocess(
        matrix,
        PreprocessConfig(args.n_top_genes, args.min_cells_expressed),
        SplitSpec(args.test_size, args.val_size, _seed(args)),
    )
    out_dir = _out_dir(args)
    for name, part in zip(splits._fields, splits):
        write_matrix_csv(part, out_dir / f'{name}.csv')
    return EXIT_OK


def cmd_extract_tfs(args):
    matrix = load_matrix(args.matrix, args.format)
    client = build_client(_llm_config(args), offline=args.offline)
    partition = extract_tf_partition(
        matrix.genes, _context(args), args.window, args.stride, client,
        validate_membership=not args.no_validate, max_tfs=args.max_tfs,
    )
    write_tf_list(partition.sorted_tfs, _out_dir(args) / 'tfs.txt')
    return EXIT_OK


def cmd_infer_grn(args):
    train = load_matrix(args.matrix, args.format)
    partition = _partition(train, args.tfs)
    cfg = GbmConfig(n_trees=args.n_trees, max_depth=args.max_depth, seed=_seed(args))
    out_dir = _out_dir(args)
    grn = infer_grn(normalize_log1p(train), partition, args.k, cfg, n_jobs=args.n_jobs,
                    importance_path=out_dir / 'importances.tsv')
    write_grn(grn, out_dir / 'statistical_grn.tsv')
    return EXIT_OK


def cmd_random_grn(args):
    matrix = load_matrix(args.matrix, args.format)
    grn = random_grn(_partition(matrix, args.tfs), args.k, _seed(args))
    write_grn(grn, _out_dir(args) / f'random_grn_seed{_seed(args)}.tsv')
    return EXIT_OK


def cmd_llm_grn(args):
    matrix = load_matrix(args.matrix, args.format)
    client = build_client(_llm_config(args), offline=args.offline)
    grn = build_llm_grn(_partition(matrix, args.tfs), _context(args), args.k, client,
                        max_retries=args.max_retries)
    write_grn(grn, _out_dir(args) / 'llm_grn.tsv')
    return EXIT_OK


def cmd_overlap(args):
    grns = {Path(path).stem: read_grn(path) for path in args.grns}
    table = overlap_matrix(grns)
    print(table.to_string(float_format=lambda v: f'{v:.4f}'))
    out_dir = _out_dir(args)
    table.to_csv(out_dir / 'grn_overlap.csv', float_format='%.6f', lineterminator='\n')
    ChartGenerator(out_dir).plot_overlap_heatmap(table)
    return EXIT_OK


def cmd_synthesize(args):
    train = load_matrix(args.matrix, args.format)
    out_dir = _out_dir(args)
    seeds = [derive_seed(_seed(args), r) for r in range(args.replicates)]
    if args.stage1:
        partition = _partition(train, args.tfs)
        replicates = [sample_stage_one(train, partition, args.n_cells, s, args.library_scale)
                      for s in seeds]
    else:
        grn = read_grn(args.grn)
        scm = fit_scm(train, grn, GbmConfig(seed=_seed(args)), args.library_scale, args.n_jobs)
        replicates = [sample_synthetic(scm, args.n_cells, s) for s in seeds]
    for r, matrix in enumerate(replicates):
        write_matrix_csv(matrix, out_dir / f'synthetic_rep{r}.csv')
    return EXIT_OK


def cmd_evaluate(args):
    real = load_matrix(args.real, args.format)
    replicates = [load_matrix(path, args.format) for path in args.synthetic]
    mmd_config = MmdConfig(bandwidths=tuple(args.bandwidths)) if args.bandwidths else MmdConfig()
    forest = ForestConfig(repeats=args.forest_repeats, seed=_seed(args))
    report = MetricCalculator(mmd_config, forest, space=args.space).calculate_all(
        real, replicates, label=args.label
    )
    report.write_json(_out_dir(args) / f'{args.label}_metrics.json')
    print(report.to_row())
    return EXIT_OK


def cmd_report(args):
    manifests = [RunManifest.read(path) for path in args.manifests]
    result = make_report(manifests, _out_dir(args) / 'report')
    print(result.table.to_string(index=False))
    return EXIT_OK


def cmd_plot(args):
    real = load_matrix(args.real, args.format)
    synthetic = load_matrix(args.synthetic, args.format)
    ChartGenerator(_out_dir(args)).plot_projection(
        real, synthetic, args.name, args.n_pcs, interactive=args.interactive
    )
    return EXIT_OK


def cmd_run(args):
    if not args.config:
        raise ConfigError("run requires --config")
    config = RunConfig.load(args.config).with_overrides(
        seed=args.seed, out_dir=args.out_dir, parallel_arms=args.parallel_arms
    )
    handler = attach_run_log(Path(config.out_dir) / 'logs' / 'grnsynth.log', getattr(logging, args.log_level))
    try:
        manifest = run_setting(config, offline=args.offline)
    finally:
        detach_run_log(handler)
    logger.info(f"Run finished with {len(manifest.outputs)} output files")
    return EXIT_OK


def cmd_linear_uniform(args):
    spec = LinearUniformSpec(
        n_tfs=args.n_tfs, n_targets=args.n_targets, k=args.k, n_cells=args.n_cells,
        coeff_range=(args.coeff_low, args.coeff_high), noise_scale=args.noise_scale,
        seed=_seed(args),
    )
    write_linear_uniform(spec, _out_dir(args))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog='grnsynth',
        description='GRN-conditioned synthetic single-cell data toolkit',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--config', help='YAML run configuration')
    parser.add_argument('--seed', type=int, help='Seed (overrides config seeds)')
    parser.add_argument('--out-dir', help='Output directory')
    parser.add_argument('--offline', action='store_true', help='Replay cached LLM exchanges only')
    parser.add_argument('--parallel-arms', type=int, help='Arms run concurrently')
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)

    def with_matrix(p, flag='--matrix'):
        p.add_argument(flag, required=True, help='Expression matrix (CSV or MTX)')
        p.add_argument('--format', choices=['csv', 'mtx'])
        return p

    def with_context(p):
        p.add_argument('--context', default='', help='Dataset context text')
        p.add_argument('--context-file', help='File holding the dataset context')
        p.add_argument('--cache', help='JSON-lines LLM exchange cache')
        return p

    p = with_matrix(sub.add_parser('ingest', help='Filter genes and split cells'))
    p.add_argument('--test-size', type=int, default=1000)
    p.add_argument('--val-size', type=int, default=1000)
    p.add_argument('--n-top-genes', type=int, default=1000)
    p.add_argument('--min-cells-expressed', type=int)
    p.set_defaults(func=cmd_ingest)

    p = with_context(with_matrix(sub.add_parser('extract-tfs', help='LLM TF extraction')))
    p.add_argument('--window', type=int, default=20)
    p.add_argument('--stride', type=int, default=10)
    p.add_argument('--max-tfs', type=int)
    p.add_argument('--no-validate', action='store_true',
                   help='Accept proposals outside the queried window')
    p.set_defaults(func=cmd_extract_tfs)

    p = with_matrix(sub.add_parser('infer-grn', help='Statistical GRN inference'))
    p.add_argument('--tfs', required=True, help='TF list file')
    p.add_argument('--k', type=int, default=10)
    p.add_argument('--n-trees', type=int, default=100)
    p.add_argument('--max-depth', type=int, default=3)
    p.add_argument('--n-jobs', type=int, default=1)
    p.set_defaults(func=cmd_infer_grn)

    p = with_matrix(sub.add_parser('random-grn', help='Uniform random GRN'))
    p.add_argument('--tfs', required=True)
    p.add_argument('--k', type=int, default=10)
    p.set_defaults(func=cmd_random_grn)

    p = with_context(with_matrix(sub.add_parser('llm-grn', help='LLM regulator proposals')))
    p.add_argument('--tfs', required=True)
    p.add_argument('--k', type=int, default=10)
    p.add_argument('--max-retries', type=int, default=3)
    p.set_defaults(func=cmd_llm_grn)

    p = sub.add_parser('overlap', help='Pairwise GRN edge overlap')
    p.add_argument('grns', nargs='+', help='GRN TSV files with sidecars')
    p.set_defaults(func=cmd_overlap)

    p = with_matrix(sub.add_parser('synthesize', help='Sample synthetic cells'))
    p.add_argument('--grn', help='GRN TSV to impose')
    p.add_argument('--stage1', action='store_true', help='Structure-free baseline instead of an SCM')
    p.add_argument('--tfs', help='TF list (for --stage1)')
    p.add_argument('--n-cells', type=int, default=1000)
    p.add_argument('--replicates', type=int, default=1)
    p.add_argument('--library-scale', type=float, default=DEFAULT_LIBRARY_SCALE)
    p.add_argument('--n-jobs', type=int, default=1)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser('evaluate', help='Fidelity metrics against real cells')
    p.add_argument('--real', required=True)
    p.add_argument('--synthetic', required=True, nargs='+')
    p.add_argument('--format', choices=['csv', 'mtx'])
    p.add_argument('--label', default='synthetic')
    p.add_argument('--bandwidths', type=float, nargs='+', help='Explicit RBF bandwidths')
    p.add_argument('--forest-repeats', type=int, default=2)
    p.add_argument('--space', choices=['lognorm', 'raw'], default='lognorm')
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('report', help='Table-1 report from run manifests')
    p.add_argument('manifests', nargs='+', help='manifest.json files or run directories')
    p.set_defaults(func=cmd_report)

    p = sub.add_parser('plot', help='PCA projection of real vs synthetic cells')
    p.add_argument('--real', required=True)
    p.add_argument('--synthetic', required=True)
    p.add_argument('--format', choices=['csv', 'mtx'])
    p.add_argument('--name', default='projection')
    p.add_argument('--n-pcs', type=int, default=50)
    p.add_argument('--interactive', action='store_true', help='Also write plotly HTML')
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser('run', help='Full pipeline from --config')
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('linear-uniform', help='Generate the LinearUniform benchmark')
    p.add_argument('--n-tfs', type=int, default=20)
    p.add_argument('--n-targets', type=int, default=50)
    p.add_argument('--k', type=int, default=5)
    p.add_argument('--n-cells', type=int, default=1000)
    p.add_argument('--coeff-low', type=float, default=0.5)
    p.add_argument('--coeff-high', type=float, default=2.0)
    p.add_argument('--noise-scale', type=float, default=0.05)
    p.set_defaults(func=cmd_linear_uniform)
    return parser


def main(argv=None):
    """
    Main pipeline execution

    Returns:
        int: Exit code (0 success, 2 configuration error, 3 stage failure)
    """
    args = build_parser().parse_args(argv)
    set_package_level(getattr(logging, args.log_level))

    try:
        if args.command == 'synthesize' and not args.stage1 and not args.grn:
            raise ConfigError("synthesize needs --grn (or --stage1 with --tfs)")
        if args.command == 'synthesize' and args.stage1 and not args.tfs:
            raise ConfigError("synthesize --stage1 needs --tfs")
        return args.func(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except StageError as e:
        logger.error(f"Pipeline failed in stage '{e.stage}': {e.cause}")
        return EXIT_STAGE
    except (GrnSynthError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
