"""
Expression Matrix
Cells x genes values with barcodes and a gene vocabulary
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from grnsynth.grn.core import GeneVocabulary
from grnsynth.utils.exceptions import (
    ExpressionDataError,
    NegativeValueError,
    SymbolMissingError,
    VocabularyMismatchError,
)

RAW = 'raw'
LOGNORM = 'lognorm'


@dataclass(frozen=True, eq=False)
class ExpressionMatrix:
    """Non-negative finite cells x genes matrix (raw counts or lognorm)"""

    values: np.ndarray
    barcodes: tuple
    genes: GeneVocabulary
    normalized: str = RAW

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ExpressionDataError(f"Expression values must be 2-D, got {values.ndim}-D")
        barcodes = tuple(str(b) for b in self.barcodes)
        if values.shape != (len(barcodes), len(self.genes)):
            raise ExpressionDataError(
                f"Shape {values.shape} does not match "
                f"{len(barcodes)} barcodes x {len(self.genes)} genes"
            )
        if not np.isfinite(values).all():
            raise ExpressionDataError("Expression values must be finite")
        if (values < 0).any():
            raise NegativeValueError("Expression values must be non-negative")
        if self.normalized not in (RAW, LOGNORM):
            raise ExpressionDataError(f"Unknown normalization flag: {self.normalized}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'barcodes', barcodes)

    @property
    def n_cells(self):
        return self.values.shape[0]

    @property
    def n_genes(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def columns(self, symbols):
        """Submatrix for the given gene symbols, in the order given"""
        missing = [s for s in symbols if s not in self.genes]
        if missing:
            raise SymbolMissingError(f"Genes not in matrix: {missing[:5]}")
        return self.values[:, self.genes.positions(symbols)]

    def column(self, symbol):
        return self.columns([symbol])[:, 0]

    def take_rows(self, rows):
        """Matrix restricted to the given row indices"""
        rows = np.asarray(rows, dtype=np.intp)
        return ExpressionMatrix(
            values=self.values[rows],
            barcodes=tuple(self.barcodes[i] for i in rows),
            genes=self.genes,
            normalized=self.normalized,
        )

    def select_genes(self, symbols):
        """Matrix restricted to a gene subset, kept in vocabulary order"""
        vocabulary = self.genes.subset(symbols)
        return ExpressionMatrix(
            values=self.columns(vocabulary.symbols),
            barcodes=self.barcodes,
            genes=vocabulary,
            normalized=self.normalized,
        )

    def to_frame(self):
        """pandas view with barcodes as index and genes as columns"""
        return pd.DataFrame(
            self.values,
            index=pd.Index(self.barcodes, name='barcode'),
            columns=list(self.genes.symbols),
        )

    def require_same_genes(self, other):
        """Raise VocabularyMismatchError unless both share one vocabulary"""
        if self.genes != other.genes:
            raise VocabularyMismatchError(
                f"Gene vocabularies differ ({len(self.genes)} vs {len(other.genes)} genes)"
            )


def concat(matrices):
    """Row-wise concatenation of matrices on one vocabulary"""
    first = matrices[0]
    for other in matrices[1:]:
        first.require_same_genes(other)
        if other.normalized != first.normalized:
            raise ExpressionDataError("Cannot concatenate raw and lognorm matrices")
    return ExpressionMatrix(
        values=np.vstack([m.values for m in matrices]),
        barcodes=tuple(b for m in matrices for b in m.barcodes),
        genes=first.genes,
        normalized=first.normalized,
    )
