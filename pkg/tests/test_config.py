from __future__ import annotations

import pytest

from odoforge.config import FIXTURES, fixture_path, load_config, parse_config
from odoforge.errors import ConfigSyntaxError, SemanticError
from odoforge.words import format_word, parse_word

BASE = """\
[group]
kind = free-abelian
generators = ["a"]

[chain]
gens = ["a^2"]
gens = ["a^4"]
"""


def test_dyadic_fixture():
    cfg = load_config(fixture_path("dyadic"))
    assert cfg.group.kind == "free-abelian" and cfg.group.names == ("a",)
    assert cfg.chain_levels()[:4] == [["a^2"], ["a^4"], ["a^8"], ["a^16"]]
    assert cfg.factor_levels() == [["a^4"], ["a^16"], ["a^64"]]


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_load(name):
    cfg = load_config(fixture_path(name))
    assert len(cfg.chain_levels()) == cfg.depth


def test_free_fixture_words_round_trip():
    cfg = load_config(fixture_path("f2_normal"))
    for level in cfg.chain_levels():
        for text in level:
            assert format_word(parse_word(text, cfg.group)) == text


def test_missing_chain():
    with pytest.raises(SemanticError) as info:
        parse_config('[group]\nkind = free\ngenerators = ["a", "b"]\n')
    assert info.value.field == "chain"


@pytest.mark.parametrize("text, line, column", [
    (BASE + "[run\n", 8, 1),
    (BASE + "[run]\ndepth 3\n", 9, 1),
    (BASE + '[run]\ncommand = "all\n', 9, 11),
    ("depth = 3\n", 1, 1),
    (BASE.replace('gens = ["a^4"]', 'gens = ["a^4"'), 7, 14),
    (BASE + "[extra]\n", 8, 2),
])
def test_syntax_errors_have_positions(text, line, column):
    with pytest.raises(ConfigSyntaxError) as info:
        parse_config(text)
    assert (info.value.line, info.value.column) == (line, column)


@pytest.mark.parametrize("extra, field", [
    ("[run]\ndepth = 0\n", "depth"),
    ("[run]\ndepth = 5\n", "chain"),
    ("[run]\nbogus = 1\n", "run.bogus"),
    ("[run]\ncommand = \"dance\"\n", "command"),
    ("[run]\ntest_radius = 1.5\n", "run.test_radius"),
])
def test_semantic_errors_name_the_field(extra, field):
    with pytest.raises(SemanticError) as info:
        parse_config(BASE + extra)
    assert info.value.field == field


def test_bad_word_in_chain():
    with pytest.raises(SemanticError) as info:
        parse_config(BASE.replace('"a^4"', '"c^4"'))
    assert info.value.field == "chain.level2"


def test_inline_subgroup_tables():
    text = BASE.replace('gens = ["a^2"]', 'subgroup = { gens = ["a^2"] }')
    assert parse_config(text).chain_levels() == parse_config(BASE).chain_levels()


def test_template_and_overrides():
    text = '[group]\nkind = free-abelian\ngenerators = ["a", "b"]\n[chain]\ntemplate = ["a^{3^n}", "b^{n}"]\n'
    cfg = parse_config(text, depth=3)
    assert cfg.chain_levels() == [["a^3", "b^1"], ["a^9", "b^2"], ["a^27", "b^3"]]
    assert parse_config(BASE).depth == 2


def test_hash_tracks_resolved_config():
    a = parse_config(BASE)
    assert a.hash() == parse_config("# comment\n" + BASE).hash()
    assert a.hash() != a.with_overrides(ball_radius=9).hash()
    assert a.hash() == a.with_overrides(out_dir="elsewhere").hash()
