"""Rauzy-Veech map, its Zorich acceleration and the symbolic coding.

Sector convention (fixed by positivity of the new lengths): when
``lambda_m > lambda_{pi^-1 m}`` the bottom-last interval is the shorter one
and operation ``b`` is applied; when ``lambda_{pi^-1 m} > lambda_m`` the
top-last interval is shorter and operation ``a`` is applied.  Either way
``lambda_old = A(c, pi) @ lambda_new`` with ``A = elementary_matrix(c, pi)``.

Lengths may be floats (fast) or ``Fraction`` (exact); the arithmetic is the
same code path, so the mode is just the number type of ``lam``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DegenerateError, IncompatibleError, InvalidWordError, StallError
from .linalg import RenormMatrix, elementary_matrix, perron
from .perm import Permutation, apply_op, rauzy_class
from .words import Letter, Word, is_admissible

N_MAX = 10**6


@dataclass(frozen=True)
class IETPoint:
    lam: tuple
    pi: Permutation

    def __post_init__(self) -> None:
        lam = tuple(self.lam)
        object.__setattr__(self, "lam", lam)
        if len(lam) != self.pi.m:
            raise ValueError("length vector and permutation sizes differ")
        if any(x <= 0 for x in lam):
            raise ValueError("lengths must be positive")

    @classmethod
    def make(cls, lam: Sequence, pi: Permutation | str, exact: bool = False) -> "IETPoint":
        if isinstance(pi, str):
            pi = Permutation.parse(pi)
        if exact:
            lam = tuple(Fraction(str(x)) if isinstance(x, float) else Fraction(x) for x in lam)
        else:
            lam = tuple(float(x) for x in lam)
        return cls(lam, pi)

    @property
    def exact(self) -> bool:
        return isinstance(self.lam[0], Fraction)

    @property
    def total(self):
        return sum(self.lam)

    def normalized(self) -> "IETPoint":
        s = self.total
        return IETPoint(tuple(x / s for x in self.lam), self.pi)

    def as_float(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.lam)


@dataclass(frozen=True)
class StepRecord:
    op: str
    pi_in: Permutation
    matrix: RenormMatrix
    shrink: object  # |lambda_new_unnormalized| / |lambda_in|


def step_type(lam: Sequence, pi: Permutation) -> str:
    """Label of the next Rauzy-Veech step; ties raise ``DegenerateError``."""
    top = lam[pi.m - 1]
    bottom = lam[pi.inv(pi.m) - 1]
    if top > bottom:
        return "b"
    if bottom > top:
        return "a"
    raise DegenerateError()


def _subtract_step(lam: Sequence, pi: Permutation, c: str) -> list:
    """Unnormalized lengths after one step of type ``c`` (re-indexed)."""
    m = pi.m
    k = pi.inv(m)
    new = list(lam)
    if c == "b":
        new[m - 1] = lam[m - 1] - lam[k - 1]
        return new
    # a: interval k is split; its tail (length lam_m) becomes label k+1
    out = list(lam[:k])
    out[k - 1] = lam[k - 1] - lam[m - 1]
    out.append(lam[m - 1])
    out.extend(lam[k : m - 1])
    return out


def rv_step(p: IETPoint) -> tuple[IETPoint, StepRecord]:
    """One Rauzy-Veech step ``T``; the result is renormalized to unit total length."""
    c = step_type(p.lam, p.pi)
    new = _subtract_step(p.lam, p.pi, c)
    total_in = p.total
    total = sum(new)
    lam = tuple(x / total for x in new)
    rec = StepRecord(c, p.pi, elementary_matrix(c, p.pi), total / total_in)
    return IETPoint(lam, apply_op(c, p.pi)), rec


def zorich_step(p: IETPoint, n_max: int = N_MAX) -> tuple[IETPoint, Letter]:
    """Accelerated map ``G``: the maximal run of equal-type steps, as one letter."""
    p, letter, _ = _zorich(p, n_max)
    return p, letter


def _zorich(p: IETPoint, n_max: int):
    pi0 = p.pi
    c = step_type(p.lam, p.pi)
    lam = list(p.lam)
    pi = p.pi
    n = 0
    log_shrink = 0.0
    total = sum(lam)
    while True:
        new = _subtract_step(lam, pi, c)
        new_total = sum(new)
        log_shrink += math.log(new_total / total)
        lam = [x / new_total for x in new]
        total = sum(lam)
        pi = apply_op(c, pi)
        n += 1
        nxt = step_type(lam, pi)
        if nxt != c:
            break
        if n >= n_max:
            raise StallError()
    return IETPoint(tuple(lam), pi), Letter(c, n, pi0), log_shrink


def zorich_orbit(p: IETPoint, k: int, n_max: int = N_MAX):
    """Yield ``(point_after, letter, log_shrink)`` for ``k`` accelerated steps."""
    for _ in range(k):
        p, letter, ls = _zorich(p, n_max)
        yield p, letter, ls


def encode(p: IETPoint, k: int, n_max: int = N_MAX) -> Word:
    """First ``k`` letters of the coding sequence of ``p``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    letters = []
    for _ in range(k):
        p, letter, _ = _zorich(p, n_max)
        letters.append(letter)
    return Word(tuple(letters))


def rv_itinerary(p: IETPoint, n_steps: int) -> tuple[str, ...]:
    ops = []
    for _ in range(n_steps):
        p, rec = rv_step(p)
        ops.append(rec.op)
    return tuple(ops)


def is_compatible(w: Word, p: IETPoint) -> bool:
    """``w`` ends at ``p.pi`` and ``p`` sits where the next step has the other label."""
    if not len(w):
        return False
    last = w.letters[-1]
    if last.target != p.pi:
        return False
    try:
        return step_type(p.lam, p.pi) != last.c
    except DegenerateError:
        return False


def inverse_branch(w: Word, p: IETPoint) -> IETPoint:
    """Branch ``t_w`` of ``G^{-|w|}``: ``(A(w) lam / |A(w) lam|, pi(w_1))``."""
    if not is_compatible(w, p):
        raise IncompatibleError("word not compatible with point")
    lam = w.matrix.apply(p.lam)
    s = sum(lam)
    return IETPoint(tuple(x / s for x in lam), w.start)


def periodic_point(w: Word, verify: bool = False, tol: float = 1e-8) -> tuple[IETPoint, float]:
    """Fixed point of ``G^{|w|}`` coded by ``...www...`` and the orbit length ``l(w)``.

    Computed spectrally (Perron vector of ``A(w)``).  With ``verify`` the point
    is pushed through ``|w|`` accelerated steps and must come back within ``tol``.
    """
    if not is_admissible(w):
        raise InvalidWordError("periodic point needs an admissible word")
    data = perron(w.matrix)
    point = IETPoint(data.eigvec, w.start)
    if verify:
        dev = fixed_point_defect(w, point)
        if dev > tol:
            raise ArithmeticError(f"G^|w| moved the periodic point by {dev:.3e}")
    return point, data.log_rho


def fixed_point_defect(w: Word, point: IETPoint) -> float:
    q = point
    for _ in range(len(w)):
        q, _ = zorich_step(q)
    if q.pi != point.pi:
        return math.inf
    return max(abs(float(x) - float(y)) for x, y in zip(q.lam, point.lam))


def random_simplex_point(pi: Permutation, rng: random.Random | None = None, exact: bool = False) -> IETPoint:
    rng = rng or random.Random()
    e = [rng.expovariate(1.0) for _ in range(pi.m)]
    s = sum(e)
    lam = [x / s for x in e]
    if exact:
        lam = [Fraction(x).limit_denominator(10**12) for x in lam]
        s = sum(lam)
        lam = [x / s for x in lam]
    return IETPoint(tuple(lam), pi)


def self_check(pis: Sequence[Permutation] = (), samples: int = 1000, seed: int = 0) -> None:
    """Assert that the sector convention never produces a nonpositive length.

    Also checks ``lambda_in = A @ lambda_out_unnormalized`` for every sample.
    """
    rng = random.Random(seed)
    pis = list(pis) or [Permutation((2, 1)), Permutation((3, 2, 1)), Permutation((4, 3, 2, 1))]
    for base in pis:
        members = list(rauzy_class(base))
        for i in range(samples):
            p = random_simplex_point(members[i % len(members)], rng)
            c = step_type(p.lam, p.pi)
            new = _subtract_step(p.lam, p.pi, c)
            if min(new) <= 0:
                raise AssertionError(f"negative length after {c} at {p}")
            back = elementary_matrix(c, p.pi).apply(new)
            if max(abs(x - y) for x, y in zip(back, p.lam)) > 1e-12:
                raise AssertionError("matrix does not match the geometric step")
