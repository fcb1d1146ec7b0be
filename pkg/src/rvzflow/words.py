"""Letters ``(c, n, pi)`` of the countable alphabet and the words built from them."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

from .errors import ActionUndefinedError, InvalidWordError
from .linalg import RenormMatrix, col_norm, elementary_matrix, is_primitive
from .perm import Permutation, apply_op


@dataclass(frozen=True)
class Letter:
    c: str
    n: int
    pi: Permutation

    def __post_init__(self) -> None:
        if self.c not in ("a", "b"):
            raise InvalidWordError(f"bad label {self.c!r}")
        if int(self.n) < 1:
            raise InvalidWordError("letter exponent must be >= 1")
        object.__setattr__(self, "n", int(self.n))

    @property
    def key(self) -> tuple:
        # total order used for canonical forms: label, then exponent, then image array
        return (self.c, self.n, self.pi.images)

    @cached_property
    def target(self) -> Permutation:
        """``c^n pi``."""
        return _power(self.c, self.n, self.pi)

    def __str__(self) -> str:
        return f"{self.c}{self.n}"


@lru_cache(maxsize=65536)
def _power(c: str, n: int, pi: Permutation) -> Permutation:
    # c-orbits are cycles, so only n modulo the cycle length matters
    orbit = [pi]
    q = apply_op(c, pi)
    while q != pi:
        orbit.append(q)
        q = apply_op(c, q)
    return orbit[n % len(orbit)]


def b_compat(w1: Letter, w2: Letter) -> int:
    """1 iff ``c1^n1 pi1 = pi2`` and ``c1 != c2``."""
    return int(w1.c != w2.c and w1.target == w2.pi)


@lru_cache(maxsize=65536)
def letter_matrix(w1: Letter) -> RenormMatrix:
    """``A(c,pi) A(c,c pi) ... A(c, c^{n-1} pi)``."""
    m = w1.pi.m
    out = RenormMatrix.identity(m)
    p = w1.pi
    for _ in range(w1.n):
        out = out @ elementary_matrix(w1.c, p)
        p = apply_op(w1.c, p)
    return out


@dataclass(frozen=True)
class Word:
    letters: tuple[Letter, ...]

    def __post_init__(self) -> None:
        letters = tuple(self.letters)
        object.__setattr__(self, "letters", letters)
        for u, v in zip(letters, letters[1:]):
            if not b_compat(u, v):
                raise InvalidWordError(f"letters {u} -> {v} are not compatible")
        if letters and len({x.pi.m for x in letters}) != 1:
            raise InvalidWordError("letters mix permutation sizes")

    @classmethod
    def parse(cls, text: str, pi: Permutation | str) -> "Word":
        """``"a1,b1"`` (or ``"a1.b2"``, ``"a 1, b 2"``) chained from base permutation ``pi``."""
        if isinstance(pi, str):
            pi = Permutation.parse(pi)
        tokens = re.findall(r"([ab])\s*(\d+)", text)
        rest = re.sub(r"[ab]\s*\d+|[\s,.]", "", text)
        if rest or not tokens:
            raise InvalidWordError(f"cannot parse word {text!r}")
        letters = []
        for c, n in tokens:
            letter = Letter(c, int(n), pi)
            letters.append(letter)
            pi = letter.target
        return cls(tuple(letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Word(self.letters[i])
        return self.letters[i]

    def __add__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def __str__(self) -> str:
        return ",".join(map(str, self.letters))

    @property
    def m(self) -> int:
        return self.letters[0].pi.m

    @property
    def start(self) -> Permutation:
        return self.letters[0].pi

    @property
    def end(self) -> Permutation:
        return self.letters[-1].target

    @cached_property
    def matrix(self) -> RenormMatrix:
        if not self.letters:
            raise InvalidWordError("empty word has no dimension")
        out = letter_matrix(self.letters[0])
        for x in self.letters[1:]:
            out = out @ letter_matrix(x)
        return out

    @property
    def norm(self) -> int:
        return col_norm(self.matrix)

    def rotate(self, k: int) -> "Word":
        k %= len(self)
        return Word(self.letters[k:] + self.letters[:k])

    def to_dict(self) -> dict:
        return {"pi": list(self.start.images), "letters": [{"c": x.c, "n": x.n} for x in self.letters]}

    @classmethod
    def from_dict(cls, data: dict) -> "Word":
        text = ",".join(f"{x['c']}{x['n']}" for x in data["letters"])
        return cls.parse(text, Permutation(tuple(data["pi"])))


def word_from_letters(letters: Iterable[Letter]) -> Word:
    return Word(tuple(letters))


def concat_is_valid(w1: Word, w2: Word) -> bool:
    if not len(w1) or not len(w2):
        return True
    return bool(b_compat(w1.letters[-1], w2.letters[0]))


def act(w: Word, pi: Permutation) -> Permutation:
    """``w pi``; defined only when ``pi`` is the base permutation of ``w``."""
    if not len(w) or pi != w.start:
        raise ActionUndefinedError()
    for x in w:
        if x.pi != pi:
            raise ActionUndefinedError()
        pi = x.target
    return pi


def is_admissible(w: Word) -> bool:
    """``ww`` is a valid word and ``A(w)`` is primitive."""
    if not len(w):
        return False
    if not b_compat(w.letters[-1], w.letters[0]):
        return False
    return is_primitive(w.matrix)


def primitive_root(letters: Sequence[Letter]) -> tuple[Letter, ...]:
    n = len(letters)
    for d in range(1, n + 1):
        if n % d == 0 and all(letters[i] == letters[i % d] for i in range(n)):
            return tuple(letters[:d])
    return tuple(letters)


def least_rotation(letters: Sequence[Letter]) -> tuple[Letter, ...]:
    keys = [x.key for x in letters]
    n = len(keys)
    best = min(range(n), key=lambda k: keys[k:] + keys[:k])
    return tuple(letters[best:]) + tuple(letters[:best])


def canonical_form(w: Word) -> Word:
    """Primitive root of ``w`` turned to its least rotation; one per periodic orbit."""
    if not is_admissible(w):
        raise InvalidWordError("canonical form needs an admissible word")
    return Word(least_rotation(primitive_root(w.letters)))


def is_lyndon(letters: Sequence[Letter]) -> bool:
    """Strictly smaller than every proper rotation (so primitive and canonical)."""
    keys = [x.key for x in letters]
    n = len(keys)
    return all(keys < keys[k:] + keys[:k] for k in range(1, n))


def cylinder_leb(w: Word) -> Fraction:
    """``1 / prod_j sum_i A(w)_ij``.

    This is the normalized Lebesgue measure of the projective image of the
    simplex under ``A(w)``: the points whose Rauzy-Veech itinerary begins with
    the elementary steps spelled by ``w``.  The empty word gives 1.
    """
    if not len(w):
        return Fraction(1)
    prod = 1
    for s in w.matrix.col_sums():
        prod *= s
    return Fraction(1, prod)
