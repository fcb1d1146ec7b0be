"""Exact renormalization matrices and their Perron data.

Entries are Python ints, so products never overflow; JSON output switches a
value to a decimal string once it leaves the signed 64-bit range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, NotPrimitiveError
from .perm import Permutation, _require_irreducible

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class RenormMatrix:
    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(x) for x in r) for r in self.rows)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise DimensionError("matrix must be square and nonempty")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def identity(cls, m: int) -> "RenormMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(m)) for i in range(m)))

    @property
    def m(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other: "RenormMatrix") -> "RenormMatrix":
        if self.m != other.m:
            raise DimensionError(f"cannot multiply {self.m}x{self.m} by {other.m}x{other.m}")
        cols = list(zip(*other.rows))
        return RenormMatrix(tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in self.rows))

    def __pow__(self, k: int) -> "RenormMatrix":
        out = RenormMatrix.identity(self.m)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def col_sums(self) -> tuple[int, ...]:
        return tuple(sum(c) for c in zip(*self.rows))

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for r in self.rows for x in r)

    def is_positive(self) -> bool:
        return all(x > 0 for r in self.rows for x in r)

    @cached_property
    def det(self) -> int:
        """Exact determinant by fraction-free (Bareiss) elimination."""
        a = [list(r) for r in self.rows]
        n = self.m
        sign, prev = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
                if swap is None:
                    return 0
                a[k], a[swap] = a[swap], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def apply(self, vec: Sequence) -> list:
        """``M @ vec`` with whatever number type ``vec`` carries."""
        return [sum(a * x for a, x in zip(r, vec)) for r in self.rows]

    def solve(self, vec: Sequence) -> list:
        """``M^{-1} @ vec`` exactly for ints/Fractions (unimodular M), else in floats."""
        from fractions import Fraction

        if all(isinstance(x, (int, Fraction)) for x in vec):
            return _solve_exact(self.rows, [Fraction(x) for x in vec])
        return list(np.linalg.solve(self.to_numpy(float), np.asarray(vec, dtype=float)))

    def to_numpy(self, dtype=float) -> np.ndarray:
        if dtype is object:
            return np.array(self.rows, dtype=object)
        return np.array(self.rows, dtype=dtype)

    def to_json(self) -> list:
        return [[x if abs(x) <= INT64_MAX else str(x) for x in r] for r in self.rows]

    @classmethod
    def from_json(cls, data: list) -> "RenormMatrix":
        return cls(tuple(tuple(int(x) for x in r) for r in data))

    def __str__(self) -> str:
        return str([list(r) for r in self.rows])


def _solve_exact(rows, rhs):
    from fractions import Fraction

    n = len(rows)
    a = [[Fraction(x) for x in r] + [b] for r, b in zip(rows, rhs)]
    for k in range(n):
        piv = next(i for i in range(k, n) if a[i][k] != 0)
        a[k], a[piv] = a[piv], a[k]
        for i in range(n):
            if i != k and a[i][k] != 0:
                f = a[i][k] / a[k][k]
                a[i] = [x - f * y for x, y in zip(a[i], a[k])]
    return [a[i][n] / a[i][i] for i in range(n)]


def elementary_matrix(c: str, pi: Permutation) -> RenormMatrix:
    """Matrix of one Rauzy-Veech step, with ``lambda_old = A @ lambda_new``."""
    _require_irreducible(pi)
    m = pi.m
    k = pi.inv(m)
    a = [[int(i == j) for j in range(m)] for i in range(m)]
    if c == "b":
        a[m - 1][k - 1] += 1
    elif c == "a":
        # rows k..m-1 shift one column right, row m picks up the new column k+1
        a = [[0] * m for _ in range(m)]
        for i in range(1, k + 1):
            a[i - 1][i - 1] = 1
        for i in range(k, m):
            a[i - 1][i] = 1
        a[m - 1][k] = 1
    else:
        raise ValueError(f"unknown operation label {c!r}")
    return RenormMatrix(tuple(tuple(r) for r in a))


def word_matrix(mats: Iterable[RenormMatrix]) -> RenormMatrix:
    """Left-to-right product of a nonempty sequence."""
    it = iter(mats)
    try:
        out = next(it)
    except StopIteration:
        raise DimensionError("empty matrix sequence") from None
    for mat in it:
        out = out @ mat
    return out


def col_norm(mat: RenormMatrix) -> int:
    """``max_j sum_i |M_ij|``."""
    return max(sum(abs(x) for x in c) for c in zip(*mat.rows))


def _bool_pattern(mat: RenormMatrix) -> list[int]:
    return [sum(1 << j for j, x in enumerate(r) if x) for r in mat.rows]


def _bool_mul(p: list[int], q: list[int]) -> list[int]:
    out = []
    for row in p:
        acc = 0
        j = 0
        while row:
            if row & 1:
                acc |= q[j]
            row >>= 1
            j += 1
        out.append(acc)
    return out


def is_primitive(mat: RenormMatrix) -> bool:
    """Some power is strictly positive; checked up to Wielandt's bound (m-1)^2+1."""
    m = mat.m
    full = (1 << m) - 1
    base = _bool_pattern(mat)
    cur = base
    for _ in range((m - 1) ** 2 + 1):
        if all(r == full for r in cur):
            return True
        cur = _bool_mul(cur, base)
    return all(r == full for r in cur)


@dataclass(frozen=True)
class PerronData:
    rho: float
    eigvec: tuple[float, ...]
    log_rho: float
    iterations: int = 0


def perron(mat: RenormMatrix, tol: float = 1e-13, max_iter: int = 10**6) -> PerronData:
    """Perron root and unit-sum eigenvector by power iteration from the uniform vector."""
    if not mat.is_nonnegative() or not is_primitive(mat):
        raise NotPrimitiveError()
    a = mat.to_numpy(float)
    scale = float(a.max())
    a = a / scale
    m = mat.m
    v = np.full(m, 1.0 / m)
    prev = None
    for it in range(1, max_iter + 1):
        w = a @ v
        q = w.sum()  # l1 growth; v has unit sum
        v = w / q
        if prev is not None and abs(q - prev) <= tol * abs(q):
            # a few extra sweeps settle the vector below the quotient tolerance
            for _ in range(3):
                w = a @ v
                q = w.sum()
                v = w / q
            rho = q * scale
            resid = np.abs(a @ v - q * v) / np.maximum(q * v, np.finfo(float).tiny)
            if resid.max() > 1e-9:
                continue
            return PerronData(float(rho), tuple(float(x) for x in v), math.log(rho), it)
        prev = q
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
