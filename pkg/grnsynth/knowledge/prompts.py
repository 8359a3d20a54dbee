"""
Prompt Templates and Answer Parsing
Zero-shot prompts for TF extraction and regulator selection, and the strict
<Answer> [A, B, ...] </Answer> grammar used to read replies
"""

from __future__ import annotations

from dataclasses import dataclass

from grnsynth.grn.core import normalize_symbol
from grnsynth.utils.exceptions import EmptyAnswerError, MissingTagsError, TemplateError

TF_EXTRACTION = 'tf_extraction'
REGULATOR_SELECTION = 'regulator_selection'

CONTEXT = '{CONTEXT}'
GENE = '{GENE-X}'
TF_LIST = '{LIST-OF-TFs}'
K = '{K}'

REQUIRED_PLACEHOLDERS = {
    TF_EXTRACTION: (CONTEXT, TF_LIST),
    REGULATOR_SELECTION: (CONTEXT, GENE, TF_LIST),
}
OPTIONAL_PLACEHOLDERS = (K,)

OPEN_TAG = '<Answer>'
CLOSE_TAG = '</Answer>'
QUOTES = '\'"`'

DEFAULT_TF_EXTRACTION_TEXT = (
    "Dataset context: {CONTEXT}\n"
    "Candidate genes: {LIST-OF-TFs}.\n"
    "Which of the candidate genes are transcription factors that may be active in this "
    "context? Name only genes from the candidate list. Explain your reasoning, then finish "
    "with the answer as <Answer> [GENE1, GENE2, ...] </Answer>."
)

DEFAULT_REGULATOR_SELECTION_TEXT = (
    "Dataset context: {CONTEXT}\n"
    "Candidate transcription factors: {LIST-OF-TFs}.\n"
    "Which of these transcription factors have a causal relationship with the {GENE-X} gene? "
    "Name only factors from the candidate list. Think it through, then finish with "
    "exactly {K} factors as <Answer> [TF1, TF2, ...] </Answer>."
)


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt text with {CONTEXT}, {GENE-X}, {LIST-OF-TFs} (and optional {K}) slots"""

    text: str
    kind: str

    def __post_init__(self):
        if self.kind not in REQUIRED_PLACEHOLDERS:
            raise TemplateError(f"Unknown template kind: {self.kind}")
        for placeholder in REQUIRED_PLACEHOLDERS[self.kind]:
            count = self.text.count(placeholder)
            if count != 1:
                raise TemplateError(
                    f"{self.kind} template must contain {placeholder} exactly once, found {count}"
                )
        if self.kind == TF_EXTRACTION and GENE in self.text:
            raise TemplateError(f"{TF_EXTRACTION} template must not contain {GENE}")

    def render(self, context, tf_list, gene=None, k=None):
        """
        Fill the placeholders

        Args:
            context: Dataset context text
            tf_list: Gene symbols offered to the model
            gene: Target gene (regulator_selection only)
            k: Requested number of TFs ({K} slot)

        Returns:
            str: Prompt text
        """
        if self.kind == REGULATOR_SELECTION and gene is None:
            raise TemplateError("regulator_selection prompts need a gene")
        text = self.text.replace(CONTEXT, context.strip())
        text = text.replace(TF_LIST, ', '.join(tf_list))
        if gene is not None:
            text = text.replace(GENE, gene)
        if k is not None:
            text = text.replace(K, str(k))
        return text


def default_template(kind):
    """Built-in template for a kind"""
    text = DEFAULT_TF_EXTRACTION_TEXT if kind == TF_EXTRACTION else DEFAULT_REGULATOR_SELECTION_TEXT
    return PromptTemplate(text=text, kind=kind)


def load_template(path, kind):
    """Read a template file and validate it for the given kind"""
    with open(path, 'r', encoding='utf-8') as f:
        return PromptTemplate(text=f.read(), kind=kind)


@dataclass(frozen=True)
class AnswerList:
    """Ordered unique gene symbols parsed from an answer"""

    symbols: tuple

    def __post_init__(self):
        if not self.symbols:
            raise EmptyAnswerError("Answer list is empty")
        if len(set(self.symbols)) != len(self.symbols):
            raise EmptyAnswerError("Answer list symbols must be unique")

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)


def parse_answer(raw):
    """
    Extract the symbol list between the first <Answer> and the next </Answer>

    Surrounding [ ] are optional; items are comma separated, trimmed,
    unquoted, uppercased and deduplicated keeping first occurrence.

    Args:
        raw: Model reply text

    Returns:
        AnswerList: Parsed symbols
    """
    raw = raw or ''
    start = raw.find(OPEN_TAG)
    if start < 0:
        raise MissingTagsError("No <Answer> tag in reply")
    body_start = start + len(OPEN_TAG)
    end = raw.find(CLOSE_TAG, body_start)
    if end < 0:
        raise MissingTagsError("Unterminated <Answer> block")

    body = raw[body_start:end].strip()
    if body.startswith('['):
        body = body[1:]
    if body.endswith(']'):
        body = body[:-1]

    symbols = []
    seen = set()
    for item in body.split(','):
        symbol = normalize_symbol(item.strip().strip(QUOTES))
        if symbol and symbol not in seen:
            seen.add(symbol)
            symbols.append(symbol)
    if not symbols:
        raise EmptyAnswerError("No symbols inside <Answer> block")
    return AnswerList(tuple(symbols))


def render_answer(symbols):
    """Render symbols in the answer grammar (inverse of parse_answer)"""
    return f"{OPEN_TAG} [{', '.join(symbols)}] {CLOSE_TAG}"
