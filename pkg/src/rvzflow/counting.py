"""Enumeration and counting of admissible words and periodic orbits.

``T`` is always a bound on ``log ||A(w)||``.  Because the norm is an integer,
``log ||A(w)|| <= T`` is decided as ``||A(w)|| <= N_T`` with
``N_T = max{n : log n <= T}`` (see :func:`norm_threshold`).

Two engines produce the same counts:

* ``python``: a plain depth-first search over letters with exact Python
  integers.  It yields every word and is the reference implementation.
* ``numba``: the compiled kernel in :mod:`rvzflow._kernel`, which counts leaf
  words in closed form.  It requires the bound to fit comfortably in int64.

Orbit rule ``canonical`` (default): an orbit counts when its canonical word
(primitive root at its least rotation, i.e. a Lyndon word) is within the
bound.  Rule ``any-rotation`` counts an orbit when some rotation of some
power is enumerated; it is available on the python engine only.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import BoundTooLargeError, IncompatibleError, InvalidWordError
from .linalg import RenormMatrix, col_norm, elementary_matrix, is_primitive, perron
from .perm import Permutation, RauzyClass, apply_op, rauzy_class
from .words import Letter, Word, b_compat, canonical_form, is_admissible, is_lyndon, letter_matrix

DEFAULT_NODE_BUDGET = 10**9
INT64_SAFE_BOUND = 2**40
LABEL_INDEX = {"a": 0, "b": 1}
SECTORS = ("Wpi", "Wpi-prime")
ORBIT_RULES = ("canonical", "any-rotation")


def norm_threshold(T: float) -> int:
    """Largest integer ``n >= 0`` with ``log n <= T`` (0 when ``T < 0``)."""
    if T < 0:
        return 0
    n = int(math.floor(math.exp(T))) if T < 700 else int(math.exp(700))
    while math.log(n + 1) <= T:
        n += 1
    while n > 1 and math.log(n) > T:
        n -= 1
    return n


@dataclass(frozen=True)
class EnumQuery:
    """What to enumerate: a class, a log-norm bound and optional constraints.

    ``sector`` is ``"Wpi"`` (words starting with ``(a, sector_pi)``) or
    ``"Wpi-prime"`` (starting with ``(b, sector_pi)``).  With a ``prefix`` only
    words ``prefix + tail`` with a nonempty tail are produced.
    """

    rclass: RauzyClass
    T: float
    prefix: Word | None = None
    sector: str | None = None
    sector_pi: Permutation | None = None

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.sector is not None:
            if self.sector not in SECTORS:
                raise ValueError(f"sector must be one of {SECTORS}")
            if self.sector_pi is None:
                raise ValueError("a sector needs its base permutation")
            if self.sector_pi not in self.rclass:
                raise ValueError("sector permutation is not in the class")
        if self.prefix is not None:
            if not len(self.prefix):
                object.__setattr__(self, "prefix", None)
            elif self.prefix.start not in self.rclass:
                raise InvalidWordError("prefix does not live on this class")
            elif self.sector is not None:
                c = "a" if self.sector == "Wpi" else "b"
                first = self.prefix.letters[0]
                if first.c != c or first.pi != self.sector_pi:
                    raise IncompatibleError("prefix does not start in the requested sector")

    @classmethod
    def make(cls, pi: Permutation | str, T: float, prefix: str | Word | None = None,
             sector: str | None = None) -> "EnumQuery":
        if isinstance(pi, str):
            pi = Permutation.parse(pi)
        if isinstance(prefix, str):
            prefix = Word.parse(prefix, pi) if prefix.strip() else None
        return cls(rauzy_class(pi), T, prefix, sector, pi if sector else None)

    @property
    def bound(self) -> int:
        return norm_threshold(self.T)

    def with_T(self, T: float) -> "EnumQuery":
        return EnumQuery(self.rclass, T, self.prefix, self.sector, self.sector_pi)

    def roots(self) -> list[tuple[str, Permutation]]:
        """Allowed first letters ``(c, pi)`` when there is no prefix."""
        if self.sector is not None:
            return [("a" if self.sector == "Wpi" else "b", self.sector_pi)]
        return [(c, p) for p in self.rclass.members for c in ("a", "b")]


class EnumItem(NamedTuple):
    word: Word
    matrix: RenormMatrix
    log_rho: float | None


@dataclass
class CountRow:
    T: float
    n_words: int
    n_orbits: int
    nodes: int
    seconds: float


@dataclass
class CountReport:
    per_T: list[CountRow] = field(default_factory=list)
    slope_words: float = math.nan
    slope_words_se: float = math.nan
    slope_orbits: float = math.nan
    slope_orbits_se: float = math.nan
    alpha_min: float = math.inf
    wallclock: float = 0.0
    node_count: int = 0
    engine: str = ""
    aborted: bool = False

    def finalize(self) -> "CountReport":
        grid = [r.T for r in self.per_T]
        self.slope_words, self.slope_words_se = fit_slope(grid, [r.n_words for r in self.per_T])
        self.slope_orbits, self.slope_orbits_se = fit_slope(grid, [r.n_orbits for r in self.per_T])
        self.node_count = sum(r.nodes for r in self.per_T)
        return self

    def to_dict(self) -> dict:
        return {
            "per_T": [vars(r).copy() for r in self.per_T],
            "slope_words": _num(self.slope_words),
            "slope_words_se": _num(self.slope_words_se),
            "slope_orbits": _num(self.slope_orbits),
            "slope_orbits_se": _num(self.slope_orbits_se),
            "alpha_min": _num(self.alpha_min),
            "wallclock": self.wallclock,
            "node_count": self.node_count,
            "engine": self.engine,
            "aborted": self.aborted,
        }


def _num(x: float):
    return None if not math.isfinite(x) else x


def fit_slope(grid: Sequence[float], counts: Sequence[int]) -> tuple[float, float]:
    """Least-squares slope of ``log count`` against ``T`` on the top half of the grid.

    Zero counts are skipped.  Returns ``(slope, stderr)``; NaN when fewer than
    two usable points remain (stderr needs three).
    """
    from scipy.stats import linregress

    n = len(grid)
    start = n // 2
    pts = [(t, math.log(c)) for t, c in zip(grid[start:], counts[start:]) if c > 0]
    if len(pts) < 2:
        return math.nan, math.nan
    xs, ys = zip(*pts)
    res = linregress(xs, ys)
    se = float(res.stderr) if len(pts) > 2 else math.nan
    return float(res.slope), se


# -- python engine --------------------------------------------------------


def enumerate_words(q: EnumQuery, with_log_rho: bool = True, node_budget: int | None = None,
                    stats: dict | None = None) -> Iterator[EnumItem]:
    """Every admissible word within the query, each exactly once.

    Depth-first over letters; for a fixed position the norm is nondecreasing
    in the exponent and in further letters, so the scan of ``n`` stops at the
    first exponent over the bound.  ``stats["nodes"]`` receives the number of
    visited prefixes.
    """
    bound = q.bound
    budget = node_budget if node_budget is not None else DEFAULT_NODE_BUDGET
    counter = stats if stats is not None else {}
    counter["nodes"] = 0

    if q.prefix is not None:
        pw = q.prefix
        if col_norm(pw.matrix) > bound:
            return
        first = pw.letters[0]
        starts = [(list(pw.letters), pw.matrix, "b" if pw.letters[-1].c == "a" else "a", pw.end)]
    else:
        first = None
        starts = [([], RenormMatrix.identity(q.rclass.m), c, p) for c, p in q.roots()]

    for letters0, mat0, c0, p0 in starts:
        min_len = len(letters0) + 1
        stack = [(letters0, mat0, c0, p0)]
        while stack:
            letters, mat, c, p = stack.pop()
            counter["nodes"] += 1
            if counter["nodes"] > budget:
                raise BoundTooLargeError(partial={"nodes": counter["nodes"]})
            children = []
            cur = mat
            pp = p
            n = 0
            while True:
                cur = cur @ elementary_matrix(c, pp)
                pp = apply_op(c, pp)
                n += 1
                if col_norm(cur) > bound:
                    break
                new = letters + [Letter(c, n, p)]
                head = new[0] if first is None else first
                if len(new) >= min_len and c != head.c and pp == head.pi and is_primitive(cur):
                    word = Word(tuple(new))
                    lr = perron(cur).log_rho if with_log_rho else None
                    yield EnumItem(word, cur, lr)
                children.append((new, cur, "b" if c == "a" else "a", pp))
            stack.extend(reversed(children))


def _python_count(q: EnumQuery, orbit_rule: str, node_budget: int) -> tuple[int, int, int, float]:
    stats: dict = {}
    n_words = 0
    lyndon = 0
    canon = set()
    alpha = math.inf
    for item in enumerate_words(q, with_log_rho=False, node_budget=node_budget, stats=stats):
        n_words += 1
        letters = item.word.letters
        alpha = min(alpha, math.log(col_norm(item.matrix)) / len(letters))
        if orbit_rule == "canonical":
            if is_lyndon(letters):
                lyndon += 1
        else:
            canon.add(tuple(x.key for x in canonical_form(item.word).letters))
    n_orbits = lyndon if orbit_rule == "canonical" else len(canon)
    return n_words, n_orbits, stats["nodes"], alpha


# -- numba engine ---------------------------------------------------------


@dataclass(frozen=True)
class _Tables:
    members: tuple
    index: dict
    K: np.ndarray
    TGT: np.ndarray
    PAT0: np.ndarray
    PAT1: np.ndarray
    M1: np.ndarray
    M2: np.ndarray


def _pattern(mat) -> list[int]:
    return [sum(1 << j for j, x in enumerate(r) if x) for r in np.asarray(mat).tolist()]


@lru_cache(maxsize=32)
def _tables(rc: RauzyClass) -> _Tables:
    """Letter tables for the compiled kernel (layout documented there)."""
    members = rc.members
    idx = {p: i for i, p in enumerate(members)}
    m, P = rc.m, len(members)
    ident = np.eye(m, dtype=np.int64)

    def elem(c, p):
        return np.array(elementary_matrix(c, p).rows, dtype=np.int64)

    K = np.zeros((P, 2), dtype=np.int64)
    for p in members:
        for c, ci in LABEL_INDEX.items():
            k, x = 1, apply_op(c, p)
            while x != p:
                x, k = apply_op(c, x), k + 1
            K[idx[p], ci] = k
    kmax = int(K.max())
    TGT = np.zeros((P, 2, kmax), dtype=np.int64)
    PR = np.zeros((P, 2, kmax, m, m), dtype=np.int64)
    NN = np.zeros((P, 2, m, m), dtype=np.int64)
    PAT0 = np.zeros((P, 2, kmax, m), dtype=np.int64)
    PAT1 = np.zeros_like(PAT0)
    for p in members:
        i = idx[p]
        for c, ci in LABEL_INDEX.items():
            k = int(K[i, ci])
            C = np.array(letter_matrix(Letter(c, k, p)).rows, dtype=np.int64)
            N = C - ident
            if (N @ N).any():
                raise NotImplementedError("cycle matrix is not unipotent of order two")
            NN[i, ci] = N
            x, Pr = p, ident.copy()
            for r in range(k):
                TGT[i, ci, r] = idx[x]
                PR[i, ci, r] = Pr
                PAT0[i, ci, r] = _pattern(Pr)
                PAT1[i, ci, r] = _pattern(C @ Pr)
                Pr = Pr @ elem(c, x)
                x = apply_op(c, x)

    M1 = np.zeros((P, 2, kmax, 4, m, m), dtype=np.int64)
    M2 = np.zeros((P, 2, kmax, kmax, 6, m, m), dtype=np.int64)
    for i, p in enumerate(members):
        for ci in (0, 1):
            c2 = 1 - ci
            for r in range(int(K[i, ci])):
                tg = TGT[i, ci, r]
                Pr, NPr = PR[i, ci, r], NN[i, ci] @ PR[i, ci, r]
                E = elem("ab"[c2], members[tg])
                M1[i, ci, r] = [Pr, NPr, Pr @ E, NPr @ E]
                for r2 in range(int(K[tg, c2])):
                    P2 = PR[tg, c2, r2]
                    NP2 = NN[tg, c2] @ P2
                    qlo2 = 1 if r2 == 0 else 0
                    E2 = elem("ab"[ci], members[TGT[tg, c2, r2]])
                    G = (P2 + qlo2 * NP2) @ E2
                    M2[i, ci, r, r2] = [Pr @ P2, NPr @ P2, Pr @ NP2, NPr @ NP2, Pr @ G, NPr @ G]
    return _Tables(members, idx, K, TGT, PAT0, PAT1, M1, M2)


def _prenecklace_period(keys: Sequence[tuple]) -> int:
    """Period ``p`` if ``keys`` is a prenecklace (Lyndon prefix of length p), else 0."""
    if not keys:
        return 0
    p = 1
    for i in range(1, len(keys)):
        y = keys[i - p]
        if keys[i] == y:
            continue
        if keys[i] > y:
            p = i + 1
        else:
            return 0
    return p


def _inverse_closed(rc: RauzyClass) -> bool:
    return all(Permutation(p.inverse_images) in rc for p in rc.members)


def mirror_applies(q: EnumQuery) -> bool:
    """Whether b-rooted words may be counted through the a-rooted ones.

    Exchanging the two lines of a permutation turns ``pi`` into ``pi^-1`` and
    swaps the labels ``a`` and ``b``; the letter matrices are conjugated by a
    fixed permutation matrix, which keeps column-sum norms.  So the b-rooted
    words over ``pi`` match the a-rooted words over ``pi^-1`` one to one with
    equal norms and lengths.  Lyndon words start with an a-letter, so the
    b-rooted part adds words but no orbits.  Needs an unconstrained query on
    a class closed under inversion.
    """
    return q.prefix is None and q.sector is None and _inverse_closed(q.rclass)


def _root_states(q: EnumQuery, tab: _Tables, mirror: bool = False) -> list[tuple]:
    m = q.rclass.m
    ident_pat = np.array([1 << i for i in range(m)], dtype=np.int64)
    empty = np.zeros(0, dtype=np.int64)
    if q.prefix is None:
        out = []
        for c, p in q.roots():
            if mirror and c == "b":
                continue
            ci, pi_ = LABEL_INDEX[c], tab.index[p]
            out.append((np.ones(m, dtype=np.int64), ident_pat, pi_, ci, ci, pi_, empty, empty, empty, 0))
        return out
    w = q.prefix
    mat = w.matrix
    lc = np.array([LABEL_INDEX[x.c] for x in w], dtype=np.int64)
    ln = np.array([x.n for x in w], dtype=np.int64)
    lp = np.array([tab.index[x.pi] for x in w], dtype=np.int64)
    keys = [(int(a), int(b), int(c)) for a, b, c in zip(lc, ln, lp)]
    v0 = np.array(mat.col_sums(), dtype=np.int64)
    pat0 = np.array(_pattern(mat.rows), dtype=np.int64)
    last = w.letters[-1]
    return [(v0, pat0, tab.index[w.end], 1 - LABEL_INDEX[last.c], int(lc[0]), int(lp[0]),
             lc, ln, lp, _prenecklace_period(keys))]


def _numba_count(q: EnumQuery, threads: int, node_budget: int, max_depth: int = 4096,
                 mirror: bool = True):
    from ._kernel import get_kernel

    mirror = mirror and mirror_applies(q)
    bound = q.bound
    if q.prefix is not None and col_norm(q.prefix.matrix) > bound:
        return 0, 0, 0, math.inf, 0
    tab = _tables(q.rclass)
    count_kernel = get_kernel(q.rclass.m)
    roots = _root_states(q, tab, mirror)
    workers = max(1, threads)
    tasks = [(root, wid) for root in roots for wid in range(workers)]

    def run(task):
        root, wid = task
        return count_kernel(q.rclass.m, bound, tab.K, tab.TGT, tab.PAT0, tab.PAT1, tab.M1, tab.M2,
                            *root, wid, workers, node_budget, max_depth)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    n_words = sum(int(r[0]) for r in results) * (2 if mirror else 1)
    n_lyn = sum(int(r[1]) for r in results)
    nodes = sum(int(r[2]) for r in results)
    alpha = min(float(r[3]) for r in results)
    aborted = max(int(r[4]) for r in results)
    if nodes > node_budget and not aborted:
        aborted = 1
    return n_words, n_lyn, nodes, alpha, aborted


def choose_engine(q: EnumQuery, engine: str = "auto", orbit_rule: str = "canonical") -> str:
    if engine not in ("auto", "numba", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    if orbit_rule not in ORBIT_RULES:
        raise ValueError(f"orbit rule must be one of {ORBIT_RULES}")
    if orbit_rule == "any-rotation":
        if engine == "numba":
            raise ValueError("the any-rotation rule needs the python engine")
        return "python"
    fits = q.bound < INT64_SAFE_BOUND
    if engine == "numba" and not fits:
        raise ValueError("bound too large for the int64 kernel")
    if engine == "auto":
        return "numba" if fits else "python"
    return engine


def count_once(q: EnumQuery, engine: str = "auto", orbit_rule: str = "canonical", threads: int = 1,
               node_budget: int = DEFAULT_NODE_BUDGET, mirror: bool = True) -> tuple[int, int, int, float]:
    """``(n_words, n_orbits, nodes, alpha_min)`` for a single bound.

    ``nodes`` counts the prefixes actually visited; with ``mirror`` (compiled
    engine only, see :func:`mirror_applies`) the b-rooted half is skipped.
    """
    eng = choose_engine(q, engine, orbit_rule)
    if eng == "python":
        return _python_count(q, orbit_rule, node_budget)
    n_words, n_lyn, nodes, alpha, aborted = _numba_count(q, threads, node_budget, mirror=mirror)
    if aborted:
        why = "node budget exceeded" if aborted == 1 else "depth cap exceeded"
        raise BoundTooLargeError(f"bound too large: {why}", partial={"nodes": nodes})
    return n_words, n_lyn, nodes, alpha


def count_orbits(q: EnumQuery, grid: Sequence[float], engine: str = "auto", orbit_rule: str = "canonical",
                 threads: int = 1, node_budget: int = DEFAULT_NODE_BUDGET, mirror: bool = True) -> CountReport:
    """Counts at every ``T`` of an increasing grid, plus slope fits.

    Every grid point is an independent search, so the budget applies per point.
    When it runs out, ``BoundTooLargeError`` is raised with the finalized
    report for the completed grid prefix in ``partial``.
    """
    grid = list(grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    rep = CountReport(engine=choose_engine(q.with_T(max(grid)), engine, orbit_rule))
    t_start = time.perf_counter()
    for T in grid:
        t0 = time.perf_counter()
        try:
            n_words, n_orbits, nodes, alpha = count_once(q.with_T(T), rep.engine, orbit_rule, threads, node_budget, mirror)
        except BoundTooLargeError as exc:
            rep.aborted = True
            rep.wallclock = time.perf_counter() - t_start
            rep.finalize()
            raise BoundTooLargeError(f"{exc} at T={T}", partial=rep) from None
        rep.per_T.append(CountRow(T, n_words, n_orbits, nodes, time.perf_counter() - t0))
        rep.alpha_min = min(rep.alpha_min, alpha)
    rep.wallclock = time.perf_counter() - t_start
    return rep.finalize()


def make_grid(tmin: float, tmax: float, step: float) -> list[float]:
    """``tmin, tmin+step, ...`` up to ``tmax``.

    The last point snaps to ``tmax`` when it is within ``1e-3 * step`` of it, so
    a rounded step such as ``0.0986`` still ends exactly at ``tmax = log 3``.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if tmax < tmin:
        raise ValueError("Tmax must be >= Tmin")
    tol = 1e-3 * step
    n = int(math.floor((tmax - tmin + tol) / step))
    grid = [tmin + i * step for i in range(n + 1)]
    if abs(grid[-1] - tmax) <= tol:
        grid[-1] = tmax
    return grid


# -- prefixes -------------------------------------------------------------


def inject_prefix(q: Word, w: Word) -> Word:
    """``qw``; the junction must be compatible.

    ``||A(qw)|| <= ||A(q)|| ||A(w)||`` always holds (submultiplicativity).
    """
    if not len(q):
        return w
    if not len(w):
        return q
    if not b_compat(q.letters[-1], w.letters[0]):
        raise IncompatibleError("prefix does not chain into the word")
    out = q + w
    assert col_norm(out.matrix) <= col_norm(q.matrix) * col_norm(w.matrix)
    return out


def sector_of(w: Word) -> tuple[str, Permutation] | None:
    """``("Wpi", pi)`` or ``("Wpi-prime", pi)`` for an admissible word, else None."""
    if not is_admissible(w):
        return None
    first = w.letters[0]
    return ("Wpi" if first.c == "a" else "Wpi-prime", first.pi)


@dataclass
class GapReport:
    n: int
    min_ratio: float
    max_ratio: float
    c: float
    bounded: bool

    def to_dict(self) -> dict:
        return vars(self).copy()


def period_norm_gap(items) -> GapReport:
    """Bracket of ``exp(l(w)) / ||A(w)||`` over a stream of :class:`EnumItem`.

    The ratio never exceeds 1; ``c`` is the smallest constant with every
    ratio in ``[1/c, c]``.
    """
    lo, hi, n = math.inf, 0.0, 0
    for item in items:
        lr = item.log_rho if item.log_rho is not None else perron(item.matrix).log_rho
        ratio = math.exp(lr - math.log(col_norm(item.matrix)))
        lo, hi, n = min(lo, ratio), max(hi, ratio), n + 1
    if not n:
        return GapReport(0, math.nan, math.nan, math.nan, True)
    c = max(hi, 1.0 / lo)
    return GapReport(n, lo, hi, c, lo > 0 and hi <= 1 + 1e-12)
