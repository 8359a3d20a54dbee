"""
Bipartite GRN Core
Gene vocabularies, TF/target partitions, GRN validation, random baselines
and graph-level analytics (overlap, density)
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
import pandas as pd

from grnsynth.utils.exceptions import (
    DuplicateEdgeError,
    DuplicateGeneError,
    EmptyPartitionError,
    GrnValidationError,
    PartitionMismatchError,
    SideViolationError,
    TooFewTfsError,
    UnknownSymbolError,
    WrongArityError,
)
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)


def normalize_symbol(symbol):
    """Trim and uppercase a gene symbol"""
    return str(symbol).strip().upper()


@dataclass(frozen=True)
class GeneVocabulary:
    """Ordered, normalized gene symbols defining every column index"""

    symbols: tuple
    index: Mapping = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        normalized = tuple(normalize_symbol(s) for s in self.symbols)
        index = {}
        for position, symbol in enumerate(normalized):
            if not symbol:
                raise DuplicateGeneError("Empty gene symbol in vocabulary")
            if symbol in index:
                raise DuplicateGeneError(f"Duplicate gene symbol: {symbol}")
            index[symbol] = position
        object.__setattr__(self, 'symbols', normalized)
        object.__setattr__(self, 'index', MappingProxyType(index))

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol):
        return normalize_symbol(symbol) in self.index

    def position(self, symbol):
        """Zero-based column of a symbol (KeyError when absent)"""
        return self.index[normalize_symbol(symbol)]

    def positions(self, symbols):
        """Column indices for a sequence of symbols"""
        return np.array([self.position(s) for s in symbols], dtype=np.intp)

    def subset(self, symbols):
        """Vocabulary of the given symbols, kept in this vocabulary's order"""
        wanted = {normalize_symbol(s) for s in symbols}
        return GeneVocabulary(tuple(s for s in self.symbols if s in wanted))


@dataclass(frozen=True)
class TfPartition:
    """Disjoint split of a vocabulary into transcription factors and targets"""

    tfs: frozenset
    targets: frozenset

    def __post_init__(self):
        tfs = frozenset(normalize_symbol(s) for s in self.tfs)
        targets = frozenset(normalize_symbol(s) for s in self.targets)
        if not tfs:
            raise EmptyPartitionError("Partition has no transcription factors")
        if not targets:
            raise EmptyPartitionError("Partition has no target genes")
        shared = tfs & targets
        if shared:
            raise SideViolationError(
                f"Symbols on both sides of the partition: {sorted(shared)[:5]}"
            )
        object.__setattr__(self, 'tfs', tfs)
        object.__setattr__(self, 'targets', targets)

    @classmethod
    def from_tf_list(cls, vocabulary, tf_symbols):
        """
        Build a partition from a curated TF list

        TFs outside the vocabulary are dropped; every other vocabulary gene
        becomes a target.

        Args:
            vocabulary: GeneVocabulary of the dataset
            tf_symbols: Iterable of TF symbols

        Returns:
            TfPartition: The partition
        """
        listed = {normalize_symbol(s) for s in tf_symbols if str(s).strip()}
        tfs = {s for s in listed if s in vocabulary}
        dropped = len(listed) - len(tfs)
        if dropped:
            logger.info(f"Dropped {dropped} listed TFs absent from the vocabulary")
        targets = set(vocabulary.symbols) - tfs
        return cls(frozenset(tfs), frozenset(targets))

    @property
    def sorted_tfs(self):
        return tuple(sorted(self.tfs))

    @property
    def sorted_targets(self):
        return tuple(sorted(self.targets))

    @property
    def symbols(self):
        return self.tfs | self.targets


@dataclass(frozen=True)
class Grn:
    """Bipartite TF -> target graph with exactly k regulators per target"""

    partition: TfPartition
    regulators: Mapping
    k: int

    def edges(self):
        """Edges as (tf, target) pairs, ordered by target then TF"""
        return [
            (tf, target)
            for target in sorted(self.regulators)
            for tf in self.regulators[target]
        ]

    def edge_set(self):
        return frozenset(self.edges())

    @property
    def n_edges(self):
        return len(self.regulators) * self.k

    def parents(self, target):
        return self.regulators[normalize_symbol(target)]


def validate_grn(partition, edges, k):
    """
    Validate an edge list against a partition and build a Grn

    Args:
        partition: TfPartition
        edges: Iterable of (tf, target) pairs
        k: Regulators required per target

    Returns:
        Grn: Validated graph with regulators sorted per target
    """
    if int(k) < 1:
        raise GrnValidationError(f"k must be positive, got {k}")
    k = int(k)

    known = partition.symbols
    seen = set()
    by_target = {target: [] for target in partition.targets}

    for tf, target in edges:
        tf, target = normalize_symbol(tf), normalize_symbol(target)
        for symbol in (tf, target):
            if symbol not in known:
                raise UnknownSymbolError(f"Edge ({tf}, {target}): {symbol} not in partition")
        if tf not in partition.tfs:
            raise SideViolationError(f"Edge ({tf}, {target}): {tf} is a target, not a TF")
        if target not in partition.targets:
            raise SideViolationError(f"Edge ({tf}, {target}): {target} is a TF, not a target")
        if (tf, target) in seen:
            raise DuplicateEdgeError(f"Duplicate edge ({tf}, {target})")
        seen.add((tf, target))
        by_target[target].append(tf)

    for target in sorted(by_target):
        if len(by_target[target]) != k:
            raise WrongArityError(
                f"Target {target} has {len(by_target[target])} regulators, expected {k}"
            )

    regulators = {target: tuple(sorted(tfs)) for target, tfs in by_target.items()}
    return Grn(partition=partition, regulators=MappingProxyType(regulators), k=k)


def random_grn(partition, k, seed):
    """
    Random baseline GRN: k distinct TFs drawn uniformly per target

    Args:
        partition: TfPartition
        k: Regulators per target
        seed: Integer seed

    Returns:
        Grn: Random graph, identical for identical (partition, k, seed)
    """
    tfs = np.array(partition.sorted_tfs, dtype=object)
    if len(tfs) < k:
        raise TooFewTfsError(f"Need at least {k} TFs, partition has {len(tfs)}")

    rng = np.random.default_rng(seed)
    edges = []
    for target in partition.sorted_targets:
        chosen = rng.choice(len(tfs), size=k, replace=False)
        edges.extend((tfs[i], target) for i in chosen)
    return validate_grn(partition, edges, k)


def _check_comparable(a, b):
    if a.partition != b.partition or a.k != b.k:
        raise PartitionMismatchError("GRNs differ in partition or regulators-per-target")


def overlap(a, b):
    """
    Fraction of a's edges also present in b

    Args:
        a: Grn
        b: Grn on the same partition and k

    Returns:
        float: |E_a intersect E_b| / |E_a|
    """
    _check_comparable(a, b)
    shared = len(a.edge_set() & b.edge_set())
    return shared / a.n_edges


def density(grn):
    """Imposed edges over possible TF x target edges"""
    return grn.n_edges / (len(grn.partition.tfs) * len(grn.partition.targets))


def density_table(grns):
    """
    Density summary per GRN

    Args:
        grns: Mapping of name -> Grn

    Returns:
        pd.DataFrame: One row per GRN with TF/target/edge counts and density
    """
    rows = []
    for name, grn in grns.items():
        n_tfs = len(grn.partition.tfs)
        n_targets = len(grn.partition.targets)
        rows.append({
            'grn': name,
            'n_tfs': n_tfs,
            'n_targets': n_targets,
            'n_genes': n_tfs + n_targets,
            'possible_edges': n_tfs * n_targets,
            'imposed_edges': grn.n_edges,
            'density': round(density(grn), 4),
        })
    return pd.DataFrame(rows)


def overlap_matrix(grns):
    """
    Pairwise edge overlap between GRNs sharing a partition

    Args:
        grns: Mapping of name -> Grn

    Returns:
        pd.DataFrame: Square overlap table indexed by GRN name
    """
    names = list(grns)
    table = pd.DataFrame(index=names, columns=names, dtype=float)
    for a in names:
        for b in names:
            table.loc[a, b] = overlap(grns[a], grns[b])
    return table


def tf_overlap(reference_tfs, other_tfs):
    """
    Percentage of reference TFs that another knowledge base also proposes

    Args:
        reference_tfs: Iterable of TF symbols (e.g. curated list)
        other_tfs: Iterable of TF symbols (e.g. LLM-extracted)

    Returns:
        float: Percentage in [0, 100]
    """
    reference = {normalize_symbol(s) for s in reference_tfs}
    other = {normalize_symbol(s) for s in other_tfs}
    if not reference:
        raise EmptyPartitionError("Reference TF list is empty")
    return 100.0 * len(reference & other) / len(reference)


def partition_digest(partition, k=None):
    """Stable short digest of a partition (and optionally k) for grouping"""
    payload = '|'.join(partition.sorted_tfs) + '#' + '|'.join(partition.sorted_targets)
    if k is not None:
        payload += f'#k={k}'
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]
