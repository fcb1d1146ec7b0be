from __future__ import annotations

import json

import pytest

from rvzflow.errors import ReduciblePermutationError
from rvzflow.perm import Permutation, RauzyClass, apply_op, is_irreducible, rauzy_class

P = Permutation.parse


@pytest.mark.parametrize("c,pi,out", [("a", "2,1", "2,1"), ("a", "3,2,1", "3,1,2"), ("b", "3,2,1", "2,3,1")])
def test_apply_op_examples(c, pi, out):
    assert apply_op(c, P(pi)) == P(out)


@pytest.mark.parametrize("pi,ok", [("2,1", True), ("1,2", False), ("2,1,3", False), ("4,3,2,1", True)])
def test_is_irreducible(pi, ok):
    assert is_irreducible(P(pi)) is ok


def test_reducible_rejected():
    with pytest.raises(ReduciblePermutationError, match="reducible permutation"):
        apply_op("a", P("1,2"))
    with pytest.raises(ReduciblePermutationError):
        rauzy_class(P("1,2"))


def test_parse_validation():
    with pytest.raises(ValueError):
        Permutation((1, 1))
    with pytest.raises(ValueError):
        Permutation((1,))
    assert P("3 2 1") == P("3,2,1")


def test_class_m2():
    rc = rauzy_class(P("2,1"))
    assert rc.members == (P("2,1"),)
    assert sorted(rc.edges) == [(0, "a", 0), (0, "b", 0)]


def test_class_m3():
    rc = rauzy_class(P("3,2,1"))
    assert set(rc.members) == {P("3,2,1"), P("3,1,2"), P("2,3,1")}
    assert len(rc.edges) == 6


@pytest.mark.parametrize("pi", ["3,2,1", "4,3,2,1", "4,2,3,1", "5,4,3,2,1"])
def test_class_invariants(pi):
    rc = rauzy_class(P(pi))
    for p in rc.members:
        assert is_irreducible(p)
        assert rauzy_class(p) == rc
    outdeg = {}
    indeg = {}
    for i, c, j in rc.edges:
        outdeg[(i, c)] = outdeg.get((i, c), 0) + 1
        indeg[(j, c)] = indeg.get((j, c), 0) + 1
    assert all(v == 1 for v in outdeg.values()) and len(outdeg) == 2 * len(rc)
    assert all(v == 1 for v in indeg.values()) and len(indeg) == 2 * len(rc)


def test_class_json_roundtrip():
    rc = rauzy_class(P("4,3,2,1"))
    data = json.loads(rc.to_json())
    assert data["m"] == 4
    assert RauzyClass.from_json(rc.to_json()) == rc
    assert [list(p.images) for p in rc.members] == sorted(list(p.images) for p in rc.members)
