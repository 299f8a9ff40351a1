from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from odoforge.errors import GroupMismatch, RadiusCap, UnknownGenerator, WordSyntaxError
from odoforge.words import (
    GroupDescriptor,
    Word,
    ball_enumerate,
    format_word,
    free_ball_size,
    free_reduce,
    iter_spheres,
    parse_word,
    word_arith,
)

F2 = GroupDescriptor.free(["a", "b"])
Z2 = GroupDescriptor.abelian(["a", "b"])

free_words = st.lists(st.integers(0, 3), max_size=12).map(lambda ls: Word(F2, free_reduce(ls)))
abelian_words = st.tuples(st.integers(-9, 9), st.integers(-9, 9)).map(lambda v: Word(Z2, v))


def test_parse_reduces_to_identity():
    assert parse_word("a*b*b^-1*a^-1", F2).is_identity()
    assert format_word(parse_word("a*b*b^-1*a^-1", F2)) == "e"


def test_abelian_exponent_vector():
    assert parse_word("a^3", Z2).data == (3, 0)


def test_conjugate_word_stays_irreducible():
    w = parse_word("b*a*b^-1", F2)
    assert w.letters == (2, 0, 3)
    assert len(w) == 3


def test_arith_examples():
    a, b = F2.generators()
    assert word_arith("multiply", a, a.inverse()).is_identity()
    assert word_arith("invert", a * b) == b.inverse() * a.inverse()
    u, v = Word(Z2, (1, 2)), Word(Z2, (3, -1))
    assert word_arith("multiply", u, v).data == (4, 1)


def test_parse_errors_carry_positions():
    with pytest.raises(UnknownGenerator) as info:
        parse_word("a*c", F2)
    assert info.value.position == 2
    with pytest.raises(WordSyntaxError):
        parse_word("a**b", F2)
    with pytest.raises(WordSyntaxError):
        parse_word("a^", F2)
    with pytest.raises(WordSyntaxError):
        parse_word("", F2)


def test_mixing_groups_is_refused():
    with pytest.raises(GroupMismatch):
        F2.generators()[0] * Z2.generators()[0]


def test_small_balls():
    assert [format_word(w) for w in ball_enumerate(F2, 1)] == ["e", "a", "a^-1", "b", "b^-1"]
    assert len(ball_enumerate(F2, 2)) == 17
    Z = GroupDescriptor.abelian(["a"])
    assert [w.data[0] for w in ball_enumerate(Z, 3)] == [0, 1, -1, 2, -2, 3, -3]


@pytest.mark.parametrize("r", range(6))
def test_free_ball_size_matches_enumeration(r):
    assert len(ball_enumerate(F2, r)) == free_ball_size(2, r)


def test_spheres_have_exact_length():
    for r, sphere in enumerate(iter_spheres(F2, 4)):
        assert all(len(w) == r for w in sphere)
        assert sphere == sorted(sphere)


def test_radius_cap(monkeypatch):
    monkeypatch.setenv("ODOFORGE_CAPS", "free_radius=3")
    with pytest.raises(RadiusCap):
        ball_enumerate(F2, 4)


@given(free_words, free_words, free_words)
def test_free_group_axioms(u, v, w):
    assert (u * v) * w == u * (v * w)
    assert (u * u.inverse()).is_identity()
    assert (u * v).inverse() == v.inverse() * u.inverse()


@given(free_words)
def test_free_words_are_reduced(u):
    assert all(x != y ^ 1 for x, y in zip(u.letters, u.letters[1:]))


@given(free_words)
def test_format_parse_round_trip_free(u):
    assert parse_word(format_word(u), F2) == u


@given(abelian_words, abelian_words)
def test_abelian_commutes_and_round_trips(u, v):
    assert u * v == v * u
    assert parse_word(format_word(u), Z2) == u
    assert len(u) == sum(abs(x) for x in u.data)


@given(free_words)
def test_exponent_sums_are_a_homomorphism(u):
    v = u * u
    assert v.exponent_sums() == tuple(2 * x for x in u.exponent_sums())
