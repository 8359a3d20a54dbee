"""
Expression Matrix Loader
Loads CSV and 10x-style Matrix Market files into ExpressionMatrix objects
"""

from pathlib import Path

import numpy as np
import pandas as pd
from scipy import io as scipy_io

from grnsynth.data_loader.expression_matrix import RAW, ExpressionMatrix
from grnsynth.grn.core import GeneVocabulary
from grnsynth.utils.exceptions import (
    DuplicateGeneError,
    MatrixParseError,
    NegativeValueError,
)
from grnsynth.utils.logger import setup_logger

logger = setup_logger(__name__)

BARCODE_HEADERS = {'', 'barcode', 'barcodes', 'cell', 'cell_id', 'index'}
GENES_FILE = 'genes.txt'
BARCODES_FILE = 'barcodes.txt'


class MatrixLoader:
    """Expression matrix file loader"""

    def __init__(self, formats=('csv', 'mtx')):
        """
        Initialize matrix loader

        Args:
            formats: Accepted file formats
        """
        self.formats = tuple(formats)

    def load(self, path, fmt=None):
        """
        Load a raw-count matrix

        Args:
            path: Path to the matrix file
            fmt: 'csv' or 'mtx'; inferred from the suffix when None

        Returns:
            ExpressionMatrix: Raw-count matrix
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Matrix file not found: {path}")

        fmt = (fmt or path.suffix.lstrip('.')).lower()
        if fmt not in self.formats:
            raise MatrixParseError(f"Unsupported matrix format '{fmt}' for {path}")

        logger.info(f"Loading {fmt.upper()} matrix: {path}")
        matrix = self.load_csv(path) if fmt == 'csv' else self.load_mtx(path)
        logger.info(f"Loaded {matrix.n_cells} cells x {matrix.n_genes} genes")
        return matrix

    def load_csv(self, path):
        """
        Load a CSV whose first row holds gene symbols

        An optional first column of barcodes is recognised by its header
        (blank, 'barcode', 'cell', ...) or by every filled entry being non-numeric.
        Empty or non-numeric gene values raise MatrixParseError.
        """
        try:
            table = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
        except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
            raise MatrixParseError(f"Cannot parse CSV {path}: {e}") from e

        if table.shape[0] < 1:
            raise MatrixParseError(f"CSV {path} has no header row")

        header = [h.strip() for h in table.iloc[0].tolist()]
        body = table.iloc[1:].reset_index(drop=True)

        if self._has_barcode_column(header, body):
            barcodes = tuple(body.iloc[:, 0].str.strip())
            if '' in barcodes:
                raise MatrixParseError(f"Empty barcode in {path} at data row {barcodes.index('') + 1}")
            header = header[1:]
            body = body.iloc[:, 1:]
        else:
            barcodes = tuple(f"cell_{i}" for i in range(len(body)))

        cells = body.map(str.strip)
        numeric = cells.apply(pd.to_numeric, errors='coerce')
        bad = numeric.isna().to_numpy()
        if bad.any():
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise MatrixParseError(
                f"Empty or non-numeric value {cells.iat[row, col]!r} in {path} "
                f"(data row {row + 1}, gene {header[col]})"
            )
        values = numeric.to_numpy(dtype=np.float64)
        values = values.reshape(len(body), len(header))

        return self._build(values, barcodes, header, path)

    def load_mtx(self, path):
        """
        Load a Matrix Market coordinate file with genes.txt / barcodes.txt

        Orientation follows the companion files: cells x genes is used as is,
        10x-style genes x cells is transposed. A square matrix is read as
        cells x genes.
        """
        path = Path(path)
        genes_file = path.parent / GENES_FILE
        barcodes_file = path.parent / BARCODES_FILE
        if not genes_file.exists():
            raise MatrixParseError(f"Missing companion gene list: {genes_file}")

        try:
            sparse = scipy_io.mmread(str(path))
        except (ValueError, OSError, IndexError) as e:
            raise MatrixParseError(f"Cannot parse Matrix Market file {path}: {e}") from e
        dense = np.asarray(sparse.todense() if hasattr(sparse, 'todense') else sparse, dtype=np.float64)

        genes = _read_lines(genes_file, column=1)
        if barcodes_file.exists():
            barcodes = tuple(_read_lines(barcodes_file, column=0))
        else:
            n_cells = dense.shape[1] if dense.shape[0] == len(genes) and dense.shape[1] != len(genes) \
                else dense.shape[0]
            barcodes = tuple(f"cell_{i}" for i in range(n_cells))

        if dense.shape == (len(barcodes), len(genes)):
            values = dense
        elif dense.shape == (len(genes), len(barcodes)):
            values = dense.T
        else:
            raise MatrixParseError(
                f"Matrix shape {dense.shape} matches neither {len(barcodes)} cells x "
                f"{len(genes)} genes nor its transpose"
            )
        return self._build(values, barcodes, genes, path)

    @staticmethod
    def _has_barcode_column(header, body):
        """Barcode column: named like one, or every non-empty entry is non-numeric"""
        if not header:
            return False
        if header[0].lower() in BARCODE_HEADERS:
            return True
        if body.empty:
            return False
        first = body.iloc[:, 0].str.strip()
        filled = first[first != '']
        if filled.empty:
            return False
        return bool(pd.to_numeric(filled, errors='coerce').isna().all())

    @staticmethod
    def _build(values, barcodes, genes, path):
        if not np.isfinite(values).all():
            raise MatrixParseError(f"Missing or non-finite values in {path}")
        if (values < 0).any():
            raise NegativeValueError(f"Negative count in {path}")
        try:
            vocabulary = GeneVocabulary(tuple(genes))
        except DuplicateGeneError as e:
            raise DuplicateGeneError(f"{path}: {e}") from e
        return ExpressionMatrix(values=values, barcodes=barcodes, genes=vocabulary, normalized=RAW)


def _read_lines(path, column=0):
    symbols = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.rstrip('\n')
            if not line.strip():
                continue
            fields = line.split('\t')
            symbols.append(fields[min(column, len(fields) - 1)].strip())
    return symbols


def load_matrix(path, fmt=None):
    """
    Load a raw-count matrix from CSV or Matrix Market

    Args:
        path: Path to the matrix file
        fmt: 'csv' | 'mtx' (inferred from suffix when None)

    Returns:
        ExpressionMatrix: Raw-count matrix
    """
    return MatrixLoader().load(path, fmt)


def write_matrix_csv(matrix, path):
    """
    Write a matrix in the loader's CSV layout (barcode column + gene header)

    Args:
        matrix: ExpressionMatrix
        path: Destination CSV

    Returns:
        Path: Written file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = matrix.to_frame()
    frame.to_csv(path, float_format='%.10g', lineterminator='\n')
    logger.info(f"Wrote {matrix.n_cells} x {matrix.n_genes} matrix: {path}")
    return path


def read_labels(path, barcodes=None):
    """
    Read per-cell labels from a two-column CSV (barcode, label)

    Args:
        path: Labels CSV
        barcodes: Optional barcode order to align to

    Returns:
        np.ndarray: Labels as strings, aligned to barcodes when given
    """
    table = pd.read_csv(path, dtype=str, keep_default_na=False)
    if table.shape[1] < 2:
        raise MatrixParseError(f"Label file {path} needs barcode and label columns")
    labels = pd.Series(table.iloc[:, 1].values, index=table.iloc[:, 0].values)
    if barcodes is None:
        return labels.to_numpy(dtype=object)
    missing = [b for b in barcodes if b not in labels.index]
    if missing:
        raise MatrixParseError(f"{len(missing)} barcodes have no label in {path}")
    return labels.loc[list(barcodes)].to_numpy(dtype=object)
