import numpy as np
import pytest
from scipy import io as scipy_io
from scipy import sparse

from grnsynth.data_loader.expression_matrix import ExpressionMatrix, LOGNORM, concat
from grnsynth.data_loader.grn_io import read_grn, read_tf_list, write_grn, write_tf_list
from grnsynth.data_loader.matrix_loader import load_matrix, read_labels, write_matrix_csv
from grnsynth.grn.core import GeneVocabulary, random_grn
from grnsynth.utils.exceptions import (
    DuplicateGeneError,
    ExpressionDataError,
    MatrixParseError,
    NegativeValueError,
    SymbolMissingError,
    VocabularyMismatchError,
    WrongArityError,
)

from conftest import make_matrix


def test_matrix_rejects_bad_values():
    with pytest.raises(NegativeValueError):
        make_matrix([[1.0, -1.0]])
    with pytest.raises(ExpressionDataError):
        make_matrix([[1.0, np.nan]])
    with pytest.raises(ExpressionDataError):
        ExpressionMatrix(np.ones((2, 2)), ('a',), GeneVocabulary(('X', 'Y')))


def test_matrix_is_read_only_and_selects_columns():
    m = make_matrix([[1, 2, 3], [4, 5, 6]], genes=['A', 'B', 'C'])
    with pytest.raises(ValueError):
        m.values[0, 0] = 9
    assert m.columns(['C', 'A']).tolist() == [[3, 1], [6, 4]]
    assert m.select_genes(['C', 'A']).genes.symbols == ('A', 'C')
    with pytest.raises(SymbolMissingError):
        m.column('Z')


def test_concat_checks_vocabulary():
    a = make_matrix([[1, 2]], genes=['A', 'B'])
    b = make_matrix([[3, 4]], genes=['A', 'B'], barcodes=['x'])
    joined = concat([a, b])
    assert joined.barcodes == ('cell_0', 'x')
    with pytest.raises(VocabularyMismatchError):
        concat([a, make_matrix([[1, 2]], genes=['A', 'C'])])
    with pytest.raises(ExpressionDataError):
        concat([a, ExpressionMatrix(b.values, b.barcodes, b.genes, LOGNORM)])


def test_csv_with_and_without_barcodes(tmp_path):
    with_barcodes = tmp_path / 'a.csv'
    with_barcodes.write_text('barcode,cd3e,MS4A1\nAAA,1,0\nBBB,0,2\n')
    m = load_matrix(with_barcodes)
    assert m.barcodes == ('AAA', 'BBB')
    assert m.genes.symbols == ('CD3E', 'MS4A1')
    assert m.values.tolist() == [[1, 0], [0, 2]]

    bare = tmp_path / 'b.csv'
    bare.write_text('A,B\n1,2\n3,4\n')
    assert load_matrix(bare).barcodes == ('cell_0', 'cell_1')


def test_barcode_column_detected_by_content(tmp_path):
    path = tmp_path / 'c.csv'
    path.write_text('name,A,B\nc1,1,2\nc2,3,4\n')
    m = load_matrix(path)
    assert m.barcodes == ('c1', 'c2')
    assert m.genes.symbols == ('A', 'B')


@pytest.mark.parametrize('content, error', [
    ('A,A\n1,2\n', DuplicateGeneError),
    ('A,B\n1,-2\n', NegativeValueError),
    ('A,B\n1,\n', MatrixParseError),
    ('GENEA,GENEB\n1,2\n,3\n', MatrixParseError),
    ('A,B\n1,x\n2,3\n', MatrixParseError),
    ('barcode,A\nAAA,1\n,2\n', MatrixParseError),
])
def test_csv_errors(tmp_path, content, error):
    path = tmp_path / 'bad.csv'
    path.write_text(content)
    with pytest.raises(error):
        load_matrix(path)


def test_unknown_format_and_missing_file(tmp_path):
    path = tmp_path / 'm.h5'
    path.write_text('')
    with pytest.raises(MatrixParseError):
        load_matrix(path)
    with pytest.raises(FileNotFoundError):
        load_matrix(tmp_path / 'absent.csv')


def test_mtx_genes_by_cells_is_transposed(tmp_path):
    counts = np.array([[1, 0, 2], [0, 3, 0]])
    scipy_io.mmwrite(str(tmp_path / 'matrix.mtx'), sparse.coo_matrix(counts))
    (tmp_path / 'genes.txt').write_text('ENSG1\tGATA3\nENSG2\tCD3E\n')
    (tmp_path / 'barcodes.txt').write_text('c1\nc2\nc3\n')

    m = load_matrix(tmp_path / 'matrix.mtx')
    assert m.shape == (3, 2)
    assert m.genes.symbols == ('GATA3', 'CD3E')
    assert m.values[:, 0].tolist() == [1, 0, 2]


def test_csv_round_trip_keeps_values(tmp_path):
    m = make_matrix([[0.125, 3], [7, 0]], genes=['A', 'B'], barcodes=['x', 'y'])
    loaded = load_matrix(write_matrix_csv(m, tmp_path / 'm.csv'))
    assert loaded.barcodes == m.barcodes
    assert np.array_equal(loaded.values, m.values)


def test_read_labels_aligns_to_barcodes(tmp_path):
    path = tmp_path / 'labels.csv'
    path.write_text('barcode,cell_type\nx,T\ny,B\n')
    assert read_labels(path, ['y', 'x']).tolist() == ['B', 'T']
    with pytest.raises(MatrixParseError):
        read_labels(path, ['z'])


def test_grn_file_round_trip(tmp_path, small_partition):
    grn = random_grn(small_partition, 2, seed=3)
    path = write_grn(grn, tmp_path / 'grn.tsv')
    assert path.read_text().splitlines()[0] == 'TF\ttarget'
    assert read_grn(path).edges() == grn.edges()


def test_grn_file_with_missing_edge_fails(tmp_path, small_partition):
    path = write_grn(random_grn(small_partition, 2, seed=3), tmp_path / 'grn.tsv')
    lines = path.read_text().splitlines()
    path.write_text('\n'.join(lines[:-1]) + '\n')
    with pytest.raises(WrongArityError):
        read_grn(path)


def test_tf_list_skips_comments(tmp_path):
    path = tmp_path / 'tfs.txt'
    path.write_text('# curated\nGATA3\n\nTBX21\n')
    assert read_tf_list(path) == ['GATA3', 'TBX21']
    assert read_tf_list(write_tf_list(['A', 'B'], tmp_path / 'out.txt')) == ['A', 'B']
