from __future__ import annotations

from fractions import Fraction

import pytest

from rvzflow.errors import ActionUndefinedError, InvalidWordError
from rvzflow.linalg import RenormMatrix
from rvzflow.perm import Permutation
from rvzflow.words import (
    Letter,
    Word,
    act,
    b_compat,
    canonical_form,
    cylinder_leb,
    is_admissible,
    is_lyndon,
    letter_matrix,
)

P = Permutation.parse
PI2 = P("2,1")
PI3 = P("3,2,1")
M = lambda rows: RenormMatrix(tuple(map(tuple, rows)))  # noqa: E731
W = lambda text, pi=PI2: Word.parse(text, pi)  # noqa: E731


def test_b_compat_examples():
    assert b_compat(Letter("a", 1, PI2), Letter("b", 1, PI2)) == 1
    assert b_compat(Letter("a", 1, PI2), Letter("a", 1, PI2)) == 0
    assert b_compat(Letter("a", 1, PI3), Letter("b", 1, PI3)) == 0


def test_letter_matrix_examples():
    assert letter_matrix(Letter("a", 1, PI2)) == M([[1, 1], [0, 1]])
    assert letter_matrix(Letter("a", 2, PI2)) == M([[1, 2], [0, 1]])
    assert letter_matrix(Letter("b", 3, PI2)) == M([[1, 0], [3, 1]])


def test_act_examples():
    assert act(W("a1"), PI2) == PI2
    assert act(W("a1,b1", PI3), PI3) == P("3,1,2")
    with pytest.raises(ActionUndefinedError):
        act(W("a1"), P("1,2"))


def test_word_parse_and_validity():
    w = W("a1.b2")
    assert str(w) == "a1,b2"
    assert w.letters[1].pi == PI2
    with pytest.raises(InvalidWordError):
        W("a1,a1")
    with pytest.raises(InvalidWordError):
        W("x3")
    with pytest.raises(ValueError):
        Letter("a", 0, PI2)
    assert Word.from_dict(w.to_dict()) == w


def test_is_admissible_examples():
    assert is_admissible(W("a1,b1"))
    assert not is_admissible(W("a1"))
    assert not is_admissible(W("a1,b1,a1"))


def test_canonical_form_examples():
    assert canonical_form(W("b1,a1")) == W("a1,b1")
    assert canonical_form(W("a1,b1,a1,b1")) == W("a1,b1")
    assert canonical_form(W("a1,b1")) == W("a1,b1")
    with pytest.raises(InvalidWordError):
        canonical_form(W("a1"))


def test_canonical_rotation_invariant():
    w = W("a2,b1,a1,b3,a1,b1")
    c = canonical_form(w)
    for k in range(len(w)):
        assert canonical_form(w.rotate(k)) == c
    assert canonical_form(c) == c
    assert is_lyndon(c.letters)


def test_cylinder_leb_examples():
    assert cylinder_leb(Word(())) == 1
    assert cylinder_leb(W("a1")) == Fraction(1, 2)
    assert cylinder_leb(W("b1,a1")) == Fraction(1, 6)


def test_concatenation_homomorphism():
    u, v = W("a1,b2", PI3), None
    v = Word.parse("a1,b1", u.end)
    uv = u + v
    assert uv.matrix == u.matrix @ v.matrix
    assert uv.end == v.end
