"""Prompt matrix rendering and user-message construction."""

import pytest

from annobench.promptkit import (
    PromptError,
    PromptSpec,
    build_user_message,
    prompt_file_checksum,
    prompt_matrix,
    render_prompt,
    spec_from_id,
)
from conftest import make_pub

STEM_CAVEAT = "Some papers may be in STEM fields"


def test_matrix_has_nine_cells_in_stated_order():
    specs = prompt_matrix()
    assert len(specs) == 9
    assert specs[0].id == "reader+base"
    assert specs[-1].id == "expert+UC"
    assert len({spec.id for spec in specs}) == 9


def test_rendered_prompts_pairwise_distinct():
    texts = [render_prompt(spec).system_text for spec in prompt_matrix()]
    assert len(set(texts)) == 9


def test_render_is_pure():
    spec = PromptSpec("expert", "uncertainty")
    assert render_prompt(spec).system_text == render_prompt(PromptSpec("expert", "uncertainty")).system_text


def test_expert_base_names_the_persona():
    text = render_prompt(PromptSpec("expert", "base")).system_text
    assert "subject-matter expert in AI/ML" in text


def test_uncertainty_clauses():
    for spec in prompt_matrix():
        text = render_prompt(spec).system_text
        if spec.clause == "base":
            assert STEM_CAVEAT not in text
        else:
            assert STEM_CAVEAT in text
        if spec.clause == "uncertainty":
            assert "please assign AI only if you are confident" in text
        if spec.clause == "uncertainty_clarity":
            assert text.endswith("Respond only with the label and the score.")


def test_spec_from_id_roundtrip_and_errors():
    for spec in prompt_matrix():
        assert spec_from_id(spec.id) == spec
    with pytest.raises(PromptError) as excinfo:
        spec_from_id("expert+XY")
    assert "expert+UC" in str(excinfo.value)
    with pytest.raises(PromptError):
        PromptSpec("guru", "base")


def test_checksum_is_stable():
    assert prompt_file_checksum() == prompt_file_checksum()
    assert len(prompt_file_checksum()) == 64


def test_user_message_layout():
    msg = build_user_message(make_pub(title="X", abstract="Y"))
    assert msg.text == "Title: X\nAbstract: Y"
    assert not msg.truncated


def test_user_message_collapses_whitespace():
    pub = make_pub(title="A  Title\nWith Breaks", abstract="Line one.\n\nLine   two.")
    msg = build_user_message(pub)
    assert msg.text == "Title: A Title With Breaks\nAbstract: Line one. Line two."


def test_user_message_truncation_budget():
    pub = make_pub(abstract="word " * 10000)  # ~50k chars
    msg = build_user_message(pub, char_budget=8000)
    assert msg.truncated
    assert len(msg.text) == 8000


def test_user_message_empty_title_rejected():
    pub = make_pub(title="ok")
    pub.title = "   "
    with pytest.raises(PromptError):
        build_user_message(pub)
