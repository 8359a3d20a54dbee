import pytest
from hypothesis import given, strategies as st

from grnsynth.knowledge.prompts import (
    REGULATOR_SELECTION,
    TF_EXTRACTION,
    PromptTemplate,
    default_template,
    load_template,
    parse_answer,
    render_answer,
)
from grnsynth.utils.exceptions import EmptyAnswerError, MissingTagsError, TemplateError


PARSE_CASES = [
    ('<Answer> [GATA3, TBX21] </Answer>', ('GATA3', 'TBX21')),
    ('<Answer>[GATA3,TBX21]</Answer>', ('GATA3', 'TBX21')),
    ('<Answer> GATA3, TBX21 </Answer>', ('GATA3', 'TBX21')),
    ('<Answer> [gata3, Tbx21] </Answer>', ('GATA3', 'TBX21')),
    ("<Answer> ['GATA3', \"TBX21\"] </Answer>", ('GATA3', 'TBX21')),
    ('<Answer> [`SPI1`] </Answer>', ('SPI1',)),
    ('<Answer> [GATA3, GATA3, TBX21] </Answer>', ('GATA3', 'TBX21')),
    ('<Answer> [GATA3, gata3] </Answer>', ('GATA3',)),
    ('<Answer> [GATA3, , TBX21] </Answer>', ('GATA3', 'TBX21')),
    ('<Answer> [GATA3,] </Answer>', ('GATA3',)),
    ('Reasoning first.\n<Answer> [SPI1, CEBPA] </Answer>\nDone.', ('SPI1', 'CEBPA')),
    ('<Answer> [A] </Answer> <Answer> [B] </Answer>', ('A',)),
    ('<Answer>\n[\n  PAX5,\n  EBF1\n]\n</Answer>', ('PAX5', 'EBF1')),
    ('<Answer> TBX21 </Answer> trailing [X]', ('TBX21',)),
    ('<Answer> [NKX2-1, HLA-DRA] </Answer>', ('NKX2-1', 'HLA-DRA')),
    ('<Answer> [  IRF4  ,  IRF8  ] </Answer>', ('IRF4', 'IRF8')),
    ('<Answer> [ZNF683] </Answer>', ('ZNF683',)),
    ('prefix <Answer>[FOXP3]</Answer>', ('FOXP3',)),
    ('<Answer> [c-MYC] </Answer>', ('C-MYC',)),
]

PARSE_ERRORS = [
    ('', MissingTagsError),
    (None, MissingTagsError),
    ('GATA3, TBX21', MissingTagsError),
    ('[GATA3] </Answer>', MissingTagsError),
    ('<answer> [GATA3] </answer>', MissingTagsError),
    ('<Answer> [GATA3]', MissingTagsError),
    ('<Answer> [TBX21] ', MissingTagsError),
    ('<Answer> [] </Answer>', EmptyAnswerError),
    ('<Answer></Answer>', EmptyAnswerError),
    ('<Answer> [ , , ] </Answer>', EmptyAnswerError),
    ("<Answer> ['', \"\"] </Answer>", EmptyAnswerError),
]


@pytest.mark.parametrize('raw, expected', PARSE_CASES)
def test_parse_answer(raw, expected):
    assert parse_answer(raw).symbols == expected


@pytest.mark.parametrize('raw, error', PARSE_ERRORS)
def test_parse_answer_errors(raw, error):
    with pytest.raises(error):
        parse_answer(raw)


@given(st.lists(st.from_regex(r'[A-Z][A-Z0-9]{1,7}', fullmatch=True), min_size=1, max_size=10, unique=True))
def test_rendered_answers_parse_back(symbols):
    assert parse_answer(render_answer(symbols)).symbols == tuple(symbols)


def test_default_templates_render():
    extraction = default_template(TF_EXTRACTION).render('PBMC cells', ['GATA3', 'CD3E'])
    assert 'PBMC cells' in extraction
    assert 'GATA3, CD3E' in extraction

    selection = default_template(REGULATOR_SELECTION).render('PBMC cells', ['GATA3', 'SPI1'], gene='CD3E', k=2)
    assert 'CD3E gene' in selection
    assert 'exactly 2 factors' in selection
    assert '{' not in selection


@pytest.mark.parametrize('text, kind', [
    ('{CONTEXT} only', TF_EXTRACTION),
    ('{CONTEXT} {CONTEXT} {LIST-OF-TFs}', TF_EXTRACTION),
    ('{CONTEXT} {LIST-OF-TFs} {GENE-X}', TF_EXTRACTION),
    ('{CONTEXT} {LIST-OF-TFs}', REGULATOR_SELECTION),
    ('{CONTEXT} {LIST-OF-TFs}', 'summary'),
])
def test_invalid_templates(text, kind):
    with pytest.raises(TemplateError):
        PromptTemplate(text, kind)


def test_selection_prompt_requires_gene():
    with pytest.raises(TemplateError):
        default_template(REGULATOR_SELECTION).render('ctx', ['A'])


def test_load_template(tmp_path):
    path = tmp_path / 'tf.txt'
    path.write_text('Context {CONTEXT}; genes {LIST-OF-TFs}')
    assert load_template(path, TF_EXTRACTION).render('x', ['A']) == 'Context x; genes A'
