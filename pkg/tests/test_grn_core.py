from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from grnsynth.grn.core import (
    GeneVocabulary,
    TfPartition,
    density,
    density_table,
    overlap,
    overlap_matrix,
    partition_digest,
    random_grn,
    tf_overlap,
    validate_grn,
)
from grnsynth.utils.exceptions import (
    DuplicateEdgeError,
    DuplicateGeneError,
    EmptyPartitionError,
    PartitionMismatchError,
    SideViolationError,
    TooFewTfsError,
    UnknownSymbolError,
    WrongArityError,
)

from conftest import make_partition


def test_vocabulary_normalizes_and_rejects_duplicates():
    vocab = GeneVocabulary((' cd3e', 'Gata3'))
    assert vocab.symbols == ('CD3E', 'GATA3')
    assert 'gata3' in vocab
    assert vocab.position('CD3E') == 0
    with pytest.raises(DuplicateGeneError):
        GeneVocabulary(('CD3E', 'cd3e'))


def test_partition_must_be_disjoint_and_nonempty():
    with pytest.raises(SideViolationError):
        TfPartition(frozenset({'A', 'B'}), frozenset({'B', 'C'}))
    with pytest.raises(EmptyPartitionError):
        TfPartition(frozenset(), frozenset({'C'}))


def test_partition_from_tf_list_drops_unknown_symbols():
    vocab = GeneVocabulary(('A', 'B', 'C', 'D'))
    partition = TfPartition.from_tf_list(vocab, ['a', 'B', 'ZZZ', ''])
    assert partition.tfs == {'A', 'B'}
    assert partition.targets == {'C', 'D'}


def test_validate_grn_builds_sorted_regulators():
    partition = TfPartition(frozenset({'T1', 'T2', 'T3'}), frozenset({'G1', 'G2'}))
    grn = validate_grn(partition, [('T2', 'G1'), ('T1', 'G1'), ('t3', 'g2'), ('T1', 'G2')], 2)
    assert grn.regulators['G1'] == ('T1', 'T2')
    assert grn.parents('g2') == ('T1', 'T3')
    assert grn.n_edges == 4
    assert grn.edges()[0] == ('T1', 'G1')


@pytest.mark.parametrize('edges, error', [
    ([('T1', 'G1'), ('T2', 'G1'), ('T1', 'G2'), ('XX', 'G2')], UnknownSymbolError),
    ([('T1', 'G1'), ('T2', 'G1'), ('T1', 'G2'), ('G1', 'G2')], SideViolationError),
    ([('T1', 'G1'), ('T2', 'G1'), ('T1', 'G2'), ('T1', 'G2')], DuplicateEdgeError),
    ([('T1', 'G1'), ('T2', 'G1'), ('T1', 'G2')], WrongArityError),
    ([('T1', 'G1'), ('T2', 'G1'), ('T3', 'G1'), ('T1', 'G2'), ('T2', 'G2')], WrongArityError),
])
def test_validate_grn_errors(edges, error):
    partition = TfPartition(frozenset({'T1', 'T2', 'T3'}), frozenset({'G1', 'G2'}))
    with pytest.raises(error):
        validate_grn(partition, edges, 2)


def test_random_grn_is_deterministic_and_valid(small_partition):
    a = random_grn(small_partition, 3, seed=11)
    b = random_grn(small_partition, 3, seed=11)
    c = random_grn(small_partition, 3, seed=12)
    assert a.edges() == b.edges()
    assert a.edges() != c.edges()
    assert all(len(a.regulators[t]) == 3 for t in small_partition.targets)


def test_random_grn_needs_enough_tfs():
    with pytest.raises(TooFewTfsError):
        random_grn(make_partition(2, 5), 3, seed=0)


def test_random_grn_picks_regulators_uniformly():
    partition = make_partition(5, 4)
    k, draws = 2, 2500
    counts = Counter()
    for seed in range(draws):
        grn = random_grn(partition, k, seed=seed)
        counts.update((tf, target) for target, tfs in grn.regulators.items() for tf in tfs)
    observed = [counts[tf, target] for tf in partition.sorted_tfs for target in partition.sorted_targets]
    expected = [draws * k / len(partition.tfs)] * len(observed)
    assert chisquare(observed, expected).pvalue > 0.01


@pytest.mark.parametrize('n_tfs, n_targets, expected', [
    (75, 925, 0.1333),
    (65, 935, 0.1538),
    (68, 932, 0.1471),
])
def test_density_of_reference_partitions(n_tfs, n_targets, expected):
    grn = random_grn(make_partition(n_tfs, n_targets), 10, seed=0)
    assert round(density(grn), 4) == expected


def test_density_table_row():
    grn = random_grn(make_partition(75, 925), 10, seed=0)
    row = density_table({'PBMC': grn}).iloc[0]
    assert (row['n_tfs'], row['n_targets'], row['n_genes']) == (75, 925, 1000)
    assert (row['possible_edges'], row['imposed_edges']) == (69375, 9250)
    assert row['density'] == 0.1333


def test_overlap_identity_and_mismatch(small_partition):
    grn = random_grn(small_partition, 2, seed=1)
    assert overlap(grn, grn) == 1.0
    with pytest.raises(PartitionMismatchError):
        overlap(grn, random_grn(small_partition, 3, seed=1))
    with pytest.raises(PartitionMismatchError):
        overlap(grn, random_grn(make_partition(7, 10), 2, seed=1))


@pytest.mark.slow
def test_random_overlap_matches_k_over_tfs():
    partition = make_partition(75, 925)
    values = [
        overlap(random_grn(partition, 10, seed=2 * i), random_grn(partition, 10, seed=2 * i + 1))
        for i in range(200)
    ]
    assert abs(np.mean(values) - 10 / 75) <= 0.005


def test_overlap_matrix_is_symmetric_with_unit_diagonal(small_partition):
    grns = {f'g{i}': random_grn(small_partition, 2, seed=i) for i in range(3)}
    table = overlap_matrix(grns)
    assert list(table.index) == ['g0', 'g1', 'g2']
    assert np.allclose(np.diag(table.values), 1.0)
    assert np.allclose(table.values, table.values.T)


def test_tf_overlap_percentage():
    assert tf_overlap(['A', 'B', 'C', 'D'], ['b', 'D', 'X']) == 50.0
    with pytest.raises(EmptyPartitionError):
        tf_overlap([], ['A'])


def test_partition_digest_depends_on_k(small_partition):
    assert partition_digest(small_partition, 2) == partition_digest(small_partition, 2)
    assert partition_digest(small_partition, 2) != partition_digest(small_partition, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_random_grn_overlap_is_a_fraction(k, seed):
    partition = make_partition(6, 8)
    a = random_grn(partition, k, seed)
    b = random_grn(partition, k, seed + 1)
    value = overlap(a, b)
    assert 0.0 <= value <= 1.0
    assert value == overlap(b, a)
