"""
GRN File I/O
Tab-separated edge lists with a JSON partition sidecar
"""

import json
from pathlib import Path

import pandas as pd

from grnsynth.grn.core import TfPartition, validate_grn
from grnsynth.utils.exceptions import MatrixParseError
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)

EDGE_COLUMNS = ['TF', 'target']


def sidecar_path(tsv_path):
    """Partition metadata file that accompanies an edge list"""
    tsv_path = Path(tsv_path)
    return tsv_path.with_suffix('.json')


def write_grn(grn, tsv_path):
    """
    Write a GRN as `TF<TAB>target` edge list plus JSON sidecar

    Args:
        grn: Grn to write
        tsv_path: Destination of the edge list

    Returns:
        Path: Path of the edge list
    """
    tsv_path = Path(tsv_path)
    tsv_path.parent.mkdir(parents=True, exist_ok=True)

    edges = pd.DataFrame(grn.edges(), columns=EDGE_COLUMNS)
    edges.to_csv(tsv_path, sep='\t', index=False, encoding='utf-8', lineterminator='\n')

    meta = {
        'k': grn.k,
        'tfs': list(grn.partition.sorted_tfs),
        'targets': list(grn.partition.sorted_targets),
    }
    with open(sidecar_path(tsv_path), 'w', encoding='utf-8') as f:
        json.dump(meta, f, indent=2)
        f.write('\n')

    logger.info(f"Wrote GRN with {grn.n_edges} edges: {tsv_path}")
    return tsv_path


def read_partition(json_path):
    """
    Read the partition and k from a GRN sidecar

    Returns:
        tuple: (TfPartition, k)
    """
    json_path = Path(json_path)
    if not json_path.exists():
        raise FileNotFoundError(f"GRN sidecar not found: {json_path}")
    with open(json_path, 'r', encoding='utf-8') as f:
        meta = json.load(f)
    try:
        partition = TfPartition(frozenset(meta['tfs']), frozenset(meta['targets']))
        return partition, int(meta['k'])
    except KeyError as e:
        raise MatrixParseError(f"GRN sidecar {json_path} lacks field {e}") from e


def read_grn(tsv_path):
    """
    Read and validate a GRN written by write_grn

    Args:
        tsv_path: Path of the edge list

    Returns:
        Grn: Validated graph
    """
    tsv_path = Path(tsv_path)
    if not tsv_path.exists():
        raise FileNotFoundError(f"GRN file not found: {tsv_path}")

    partition, k = read_partition(sidecar_path(tsv_path))
    edges = pd.read_csv(tsv_path, sep='\t', dtype=str, keep_default_na=False)
    if list(edges.columns) != EDGE_COLUMNS:
        raise MatrixParseError(
            f"GRN file {tsv_path} must have header 'TF\\ttarget', got {list(edges.columns)}"
        )
    return validate_grn(partition, edges.itertuples(index=False, name=None), k)


def read_tf_list(path):
    """
    Read a curated TF list, one symbol per line

    Blank lines and lines starting with '#' are ignored.

    Returns:
        list: TF symbols in file order
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"TF list not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        lines = [line.strip() for line in f]
    return [line for line in lines if line and not line.startswith('#')]


def write_tf_list(symbols, path):
    """Write TF symbols one per line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for symbol in symbols:
            f.write(f"{symbol}\n")
    return path
