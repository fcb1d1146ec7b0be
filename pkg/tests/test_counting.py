from __future__ import annotations

import math

import pytest

from oracles import m2_cf_counts, m2_sl2_count, m2_word_count, naive_words, threshold
from rvzflow.counting import (
    EnumQuery,
    count_once,
    count_orbits,
    enumerate_words,
    fit_slope,
    inject_prefix,
    make_grid,
    mirror_applies,
    norm_threshold,
    period_norm_gap,
    sector_of,
)
from rvzflow.errors import BoundTooLargeError, IncompatibleError
from rvzflow.linalg import col_norm
from rvzflow.perm import Permutation
from rvzflow.words import Word, canonical_form, cylinder_leb, is_admissible

P = Permutation.parse
PI2 = P("2,1")
LOG3 = math.log(3)


def words_of(q):
    return [item.word for item in enumerate_words(q)]


def test_norm_threshold():
    assert norm_threshold(LOG3) == 3
    assert norm_threshold(math.log(2)) == 2
    assert norm_threshold(0.0) == 1
    assert norm_threshold(math.log(1000)) == 1000
    for T in (0.5, 1.7, 4.2, 9.0):
        assert norm_threshold(T) == threshold(T)


def test_enumerate_examples():
    got = set(words_of(EnumQuery.make("2,1", LOG3)))
    assert got == {Word.parse("a1,b1", PI2), Word.parse("b1,a1", PI2)}
    assert words_of(EnumQuery.make("2,1", math.log(2))) == []
    q = Word.parse("a1,b1", PI2)
    got = words_of(EnumQuery.make("2,1", math.log(9), prefix=q))
    assert q + q in got
    assert col_norm((q + q).matrix) == 8
    assert q not in got  # the tail must be nonempty


def test_count_examples():
    for engine in ("python", "numba"):
        assert count_once(EnumQuery.make("2,1", LOG3), engine)[:2] == (2, 1)
    with pytest.raises(ValueError):
        EnumQuery.make("2,1", 0.0)


@pytest.mark.parametrize("T", [2.0, 3.0, 4.5])
def test_totient_and_sl2_oracles(T):
    n_words, _, _, _ = count_once(EnumQuery.make("2,1", T), "numba")
    assert n_words == m2_word_count(T)
    assert n_words == m2_sl2_count(threshold(T))


@pytest.mark.parametrize("T", [3.0, 5.0, 6.0])
def test_cf_oracle(T):
    expected = m2_cf_counts(T)
    for engine in ("python", "numba") if T <= 5 else ("numba",):
        assert count_once(EnumQuery.make("2,1", T), engine)[:2] == expected


def test_reference_counts():
    assert count_once(EnumQuery.make("2,1", 8.0))[:2] == (2699806, 388027)
    assert count_once(EnumQuery.make("3,2,1", 4.0))[:2] == (31114, 6079)


@pytest.mark.parametrize("T", [1.5, 2.5, math.log(50)])
def test_exhaustive_against_naive_m2(T):
    mine = words_of(EnumQuery.make("2,1", T))
    assert len(mine) == len(set(mine))
    assert set(mine) == set(naive_words(PI2, T))


@pytest.mark.parametrize("pi,T", [("3,2,1", 2.3), ("4,3,2,1", 1.8)])
def test_exhaustive_against_naive_higher(pi, T):
    mine = words_of(EnumQuery.make(pi, T))
    assert len(mine) == len(set(mine))
    assert set(mine) == set(naive_words(P(pi), T, max_len=12))


@pytest.mark.parametrize("pi,T", [("2,1", 4.0), ("3,2,1", 3.0), ("4,3,2,1", 2.5), ("4,2,3,1", 2.5)])
def test_engines_agree(pi, T):
    py = count_once(EnumQuery.make(pi, T), "python")
    nb = count_once(EnumQuery.make(pi, T), "numba")
    assert py[:2] == nb[:2]
    assert py[3] == pytest.approx(nb[3], rel=1e-12)


@pytest.mark.parametrize("pi,T", [("2,1", 7.0), ("3,2,1", 3.5), ("4,3,2,1", 3.0), ("3,1,4,2", 3.0)])
def test_mirror_matches_full_search(pi, T):
    q = EnumQuery.make(pi, T)
    assert mirror_applies(q)
    full = count_once(q, "numba", mirror=False)
    half = count_once(q, "numba", mirror=True)
    assert half[:2] == full[:2] and half[3] == full[3]
    assert half[2] < full[2]
    assert not mirror_applies(EnumQuery.make(pi, T, sector="Wpi"))


def test_engines_agree_with_prefix_and_sector():
    q = Word.parse("a1,b1", PI2)
    for query in (
        EnumQuery.make("2,1", 5.0, prefix=q),
        EnumQuery.make("2,1", 5.0, sector="Wpi"),
        EnumQuery.make("2,1", 5.0, sector="Wpi-prime"),
        EnumQuery.make("3,2,1", 3.0, prefix="a1,b1"),
        EnumQuery.make("3,2,1", 3.0, sector="Wpi"),
    ):
        assert count_once(query, "python")[:2] == count_once(query, "numba")[:2]


def test_emitted_words_are_valid():
    q = EnumQuery.make("3,2,1", 2.5)
    bound = q.bound
    seen = set()
    for item in enumerate_words(q):
        w = item.word
        assert is_admissible(w)
        assert col_norm(item.matrix) <= bound
        assert item.matrix == w.matrix
        assert item.log_rho <= math.log(col_norm(item.matrix)) + 1e-12
        assert cylinder_leb(w) * math.prod(w.matrix.col_sums()) == 1
        seen.add(w)
    n_words, n_orbits, _, _ = count_once(q)
    assert len(seen) == n_words
    assert n_orbits <= n_words


def test_orbit_count_is_canonical_classes():
    q = EnumQuery.make("3,2,1", 2.5)
    words = set(words_of(q))
    classes = {}
    for w in words:
        classes.setdefault(canonical_form(w), []).append(w)
    # a class is counted when its canonical representative is within bound
    assert count_once(q)[1] == sum(1 for c in classes if c in words)
    for c, ws in classes.items():
        assert len(ws) <= len(c)


def test_any_rotation_rule():
    q = EnumQuery.make("3,2,1", 2.5)
    w, canon, _, _ = count_once(q, "python", "canonical")
    _, anyrot, _, _ = count_once(q, "python", "any-rotation")
    assert canon <= anyrot <= w
    with pytest.raises(ValueError):
        count_once(q, "numba", "any-rotation")


def test_counts_monotone_and_slope():
    rep = count_orbits(EnumQuery.make("2,1", 1.0), make_grid(1.0, 6.0, 1.0))
    ws = [r.n_words for r in rep.per_T]
    os_ = [r.n_orbits for r in rep.per_T]
    assert ws == sorted(ws) and os_ == sorted(os_)
    assert all(o <= w for o, w in zip(os_, ws))
    assert 1.5 < rep.slope_words < 2.5
    with pytest.raises(ValueError):
        count_orbits(EnumQuery.make("2,1", 1.0), [2.0, 1.0])


def test_fit_slope_exact():
    grid = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    counts = [round(7 * math.exp(2 * t)) for t in grid]
    s, se = fit_slope(grid, counts)
    assert s == pytest.approx(2.0, abs=1e-3)
    assert math.isnan(fit_slope([1.0], [5])[0])


def test_make_grid():
    assert make_grid(6, 12, 1) == [6, 7, 8, 9, 10, 11, 12]
    g = make_grid(1, LOG3, 0.0986)
    assert g[-1] == LOG3 and len(g) == 2
    with pytest.raises(ValueError):
        make_grid(1, 2, 0)


def test_budget_abort_has_partial_report():
    q = EnumQuery.make("2,1", 1.0)
    with pytest.raises(BoundTooLargeError) as exc:
        count_orbits(q, [2.0, 3.0, 9.0], node_budget=10**5)
    rep = exc.value.partial
    assert rep.aborted and [r.T for r in rep.per_T] == [2.0, 3.0]
    with pytest.raises(BoundTooLargeError):
        count_once(EnumQuery.make("2,1", 9.0), "python", node_budget=1000)


def test_inject_prefix_examples():
    q = Word.parse("a1,b1", PI2)
    qq = inject_prefix(q, q)
    assert col_norm(qq.matrix) == 8 <= 9
    assert inject_prefix(Word(()), q) == q
    with pytest.raises(IncompatibleError):
        inject_prefix(Word.parse("b1,a1", PI2), Word.parse("a1,b1", PI2))
    assert sector_of(qq) == ("Wpi", PI2)
    assert sector_of(Word.parse("b1,a1", PI2)) == ("Wpi-prime", PI2)


@pytest.mark.parametrize("T", [3.0, 4.0, 5.0, 6.0, 7.0])
def test_sandwich(T):
    q = Word.parse("a1,b1", PI2)
    shift = math.log(col_norm(q.matrix))
    upper = count_once(EnumQuery.make("2,1", T + shift, prefix=q))[0]
    middle = count_once(EnumQuery.make("2,1", T, sector="Wpi"))[0]
    lower = count_once(EnumQuery.make("2,1", T, prefix=q))[0]
    assert upper >= middle >= lower


def test_period_norm_gap():
    q = Word.parse("a1,b1", PI2)
    rep = period_norm_gap(enumerate_words(EnumQuery.make("2,1", math.log(9), prefix=q)))
    assert rep.max_ratio <= 1 and rep.bounded
    qq = [it for it in enumerate_words(EnumQuery.make("2,1", math.log(9), prefix=q)) if it.word == q + q]
    assert period_norm_gap(qq).min_ratio == pytest.approx(6.854101966249685 / 8, rel=1e-12)
    cs = [period_norm_gap(enumerate_words(EnumQuery.make("2,1", T, prefix=q))).c for T in (4.0, 6.0, 8.0)]
    assert max(cs) <= 2 * min(cs)
    assert period_norm_gap([]).n == 0
