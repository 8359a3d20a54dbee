"""
Exception hierarchy for the toolkit

Validation-type errors also derive from ValueError so callers that only
catch ValueError keep working.
"""


class GrnSynthError(Exception):
    """Base class for every toolkit error"""


# ---------------------------------------------------------------- grn

class GrnValidationError(GrnSynthError, ValueError):
    """A GRN or partition violates its structural invariants"""


class UnknownSymbolError(GrnValidationError):
    """An edge endpoint or symbol is not part of the partition"""


class WrongArityError(GrnValidationError):
    """A target does not have exactly k regulators"""


class DuplicateEdgeError(GrnValidationError):
    """The same (tf, target) pair appears twice"""


class SideViolationError(GrnValidationError):
    """A TF is used as a target or a target as a TF"""


class TooFewTfsError(GrnValidationError):
    """Fewer TFs are available than regulators requested"""


class PartitionMismatchError(GrnValidationError):
    """Two GRNs do not share the same partition and k"""


class EmptyPartitionError(GrnValidationError):
    """A partition would have no TFs or no targets"""


# ---------------------------------------------------------------- expression data

class ExpressionDataError(GrnSynthError, ValueError):
    """Expression matrix content or shape problem"""


class MatrixParseError(ExpressionDataError):
    """A matrix file is malformed"""


class DuplicateGeneError(ExpressionDataError):
    """A gene symbol occurs twice after normalization"""


class NegativeValueError(ExpressionDataError):
    """A matrix contains negative entries"""


class TooFewCellsError(ExpressionDataError):
    """Not enough cells for the requested operation"""


class TooFewGenesError(ExpressionDataError):
    """Not enough genes survive filtering"""


class ZeroLibraryError(ExpressionDataError):
    """A cell has an all-zero count vector"""


class EmptyMatrixError(ExpressionDataError):
    """A matrix has no cells"""


class VocabularyMismatchError(ExpressionDataError):
    """Two matrices do not share one gene vocabulary"""


class SymbolMissingError(ExpressionDataError):
    """A required gene symbol is absent from a matrix"""


# ---------------------------------------------------------------- inference / synthesis

class ShapeMismatchError(GrnSynthError, ValueError):
    """Feature and response arrays do not line up"""


class InvalidSpecError(GrnSynthError, ValueError):
    """A generator or model specification is invalid"""


class EmptyPoolError(GrnSynthError, ValueError):
    """A bootstrap or residual pool has no rows"""


# ---------------------------------------------------------------- llm knowledge base

class KnowledgeBaseError(GrnSynthError):
    """LLM knowledge-base failure"""


class TemplateError(KnowledgeBaseError, ValueError):
    """A prompt template is missing placeholders or repeats them"""


class AnswerParseError(KnowledgeBaseError, ValueError):
    """An LLM answer does not follow the <Answer> grammar"""


class MissingTagsError(AnswerParseError):
    """No matched <Answer> ... </Answer> pair"""


class EmptyAnswerError(AnswerParseError):
    """The answer block holds no symbols"""


class ClientError(KnowledgeBaseError):
    """The chat-completion client failed after its retry budget"""


class RetriesExhaustedError(KnowledgeBaseError):
    """No valid regulator list within the retry budget"""

    def __init__(self, gene, reason, attempts):
        self.gene = gene
        self.reason = reason
        self.attempts = attempts
        super().__init__(
            f"No valid regulators for {gene} after {attempts} attempts: {reason}"
        )


# ---------------------------------------------------------------- metrics

class MetricError(GrnSynthError, ValueError):
    """Metric inputs are unusable"""


class ZeroCentroidError(MetricError):
    """A centroid has zero norm"""


class SingleClassError(MetricError):
    """AUROC needs both classes"""


class EmptyLabelError(MetricError):
    """Cell labels are missing or blank"""


class UnknownMarkerError(MetricError):
    """A marker gene is not in the vocabulary"""


# ---------------------------------------------------------------- pipeline

class ConfigError(GrnSynthError, ValueError):
    """Run configuration is invalid"""


class IncompatibleManifestsError(GrnSynthError, ValueError):
    """Manifests were produced on different gene vocabularies"""


class StageError(GrnSynthError):
    """A pipeline stage failed"""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"Stage '{stage}' failed: {cause}")
