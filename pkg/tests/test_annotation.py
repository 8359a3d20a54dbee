import numpy as np
import pytest

from grnsynth.analytics.annotation import annotate_and_proportions, marker_summary, proportion_table
from grnsynth.utils.exceptions import EmptyLabelError, UnknownMarkerError, VocabularyMismatchError

from conftest import make_matrix

GENES = ['CD3E', 'MS4A1', 'LYZ', 'ACTB']


def two_types(rng, n_per_type=30):
    t_cells = rng.poisson([40, 1, 1, 20], size=(n_per_type, 4))
    b_cells = rng.poisson([1, 40, 1, 20], size=(n_per_type, 4))
    values = np.vstack([t_cells, b_cells]) + 1
    labels = ['T'] * n_per_type + ['B'] * n_per_type
    return make_matrix(values, genes=GENES), labels


def test_proportions_sum_to_100_and_keep_absent_types():
    table = proportion_table(['T', 'T', 'B', 'T'], categories=['B', 'NK', 'T'])
    assert table.percentages == {'B': 25.0, 'NK': 0.0, 'T': 75.0}
    assert table.frame['count'].tolist() == [1, 0, 3]
    assert table.frame['percentage'].sum() == pytest.approx(100.0)


def test_labels_transfer_to_similar_cells(rng):
    real, labels = two_types(rng)
    synthetic = make_matrix(rng.poisson([40, 1, 1, 20], size=(10, 4)) + 1, genes=GENES)
    predicted, table = annotate_and_proportions(real, labels, synthetic, n_pcs=2)
    assert set(predicted) == {'T'}
    assert table.percentages == {'B': 0.0, 'T': 100.0}


def test_copies_of_real_cells_keep_their_label(rng):
    real, labels = two_types(rng)
    predicted, table = annotate_and_proportions(real, labels, real, n_pcs=3)
    assert list(predicted) == labels
    assert table.percentages == {'B': 50.0, 'T': 50.0}


def test_single_type_reference(rng):
    real, _ = two_types(rng, n_per_type=5)
    predicted, _ = annotate_and_proportions(real, ['T'] * real.n_cells, real)
    assert set(predicted) == {'T'}


@pytest.mark.parametrize('labels', [['T'] * 3, ['T', '', 'B', 'B']])
def test_invalid_labels(labels):
    real = make_matrix(np.ones((4, 4)), genes=GENES)
    with pytest.raises(EmptyLabelError):
        annotate_and_proportions(real, labels, real)


def test_vocabularies_must_match(rng):
    real, labels = two_types(rng, n_per_type=5)
    other = make_matrix(np.ones((2, 4)), genes=['A', 'B', 'C', 'D'])
    with pytest.raises(VocabularyMismatchError):
        annotate_and_proportions(real, labels, other)


def test_marker_summary():
    m = make_matrix([[2, 0], [0, 0], [4, 1]], genes=['CD3E', 'MS4A1'])
    summary = marker_summary(m, ['T', 'T', 'B'], ['cd3e', 'MS4A1'])
    t_row = summary[(summary['cell_type'] == 'T') & (summary['marker'] == 'CD3E')].iloc[0]
    assert (t_row['mean'], t_row['fraction']) == (1.0, 0.5)
    assert summary['cell_type'].tolist() == ['B', 'B', 'T', 'T']
    with pytest.raises(UnknownMarkerError):
        marker_summary(m, ['T', 'T', 'B'], ['FOXP3'])
