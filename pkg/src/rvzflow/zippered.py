"""Zippered rectangles ``(lam, h, a, pi)`` and their delta coordinates.

Scalar functions accept floats or ``Fraction`` entries and never convert, so
rational inputs give exact results.  The ``*_batch`` helpers are numpy
versions used by the Monte-Carlo checks.

Transversal sectors (first-return map of the flow):

* ``Y+``: next Rauzy step is ``a`` and ``a_m <= 0`` (the previous step was ``b``);
* ``Y-``: next Rauzy step is ``b`` and ``a_m >= 0`` (the previous step was ``a``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConstraintError, DegenerateError, StallError
from .induction import IETPoint, N_MAX, _subtract_step, step_type
from .perm import Permutation, apply_op
from .words import Letter

TOL = 1e-9


@dataclass(frozen=True)
class ZippedRectangle:
    lam: tuple
    h: tuple
    a: tuple
    pi: Permutation

    def __post_init__(self) -> None:
        for name in ("lam", "h", "a"):
            val = tuple(getattr(self, name))
            if len(val) != self.pi.m:
                raise ValueError(f"{name} must have length m={self.pi.m}")
            object.__setattr__(self, name, val)


@dataclass(frozen=True)
class DeltaCoords:
    lam: tuple
    pi: Permutation
    delta: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", tuple(self.lam))
        object.__setattr__(self, "delta", tuple(self.delta))
        if len(self.lam) != self.pi.m or len(self.delta) != self.pi.m:
            raise ValueError("lam and delta must have length m")

    @property
    def a_m(self):
        return -sum(self.delta)

    def as_float(self) -> "DeltaCoords":
        return DeltaCoords(tuple(map(float, self.lam)), self.pi, tuple(map(float, self.delta)))


# -- constraints ----------------------------------------------------------


def validate(z: ZippedRectangle, tol: float = TOL) -> list[str]:
    """Identifiers of violated constraints; an empty list means ``z`` is valid.

    Identifiers: ``zipone:i=<i>``, ``ziptwo:h<i>``, ``ziptwo:a<i>``,
    ``zipthree:i=<i>``, ``zipfour:1``, ``zipfour:2``, ``zipfour:3``.
    """
    pi, m = z.pi, z.pi.m
    h = (0,) + z.h + (0,)
    a = (0,) + z.a + (0,)
    scale = max([1.0] + [abs(float(x)) for x in z.h + z.a])
    eps = tol * scale
    out = []
    for i in range(m + 1):
        pi_i = 0 if i == 0 else pi(i)
        j = m + 1 if pi_i + 1 == m + 1 else pi.inv(pi_i + 1)
        lhs = h[i] - a[i]
        rhs = h[j] - a[j - 1]
        if abs(lhs - rhs) > eps:
            out.append(f"zipone:i={i}")
    for i in range(1, m + 1):
        if h[i] < -eps:
            out.append(f"ziptwo:h{i}")
    for i in range(1, m):
        if a[i] < -eps:
            out.append(f"ziptwo:a{i}")
    k = pi.inv(m)
    for i in range(1, m):
        if i != k and a[i] > min(h[i], h[i + 1]) + eps:
            out.append(f"zipthree:i={i}")
    if a[m] > h[m] + eps:
        out.append("zipfour:1")
    if a[m] < -h[k] - eps:
        out.append("zipfour:2")
    if a[k] > h[k + 1] + eps:
        out.append("zipfour:3")
    return out


def families(violations: Sequence[str]) -> set[str]:
    return {v.split(":")[0] for v in violations}


def in_cone(pi: Permutation, delta: Sequence, tol: float = TOL) -> bool:
    """Membership of ``delta`` in the cone ``K_pi``."""
    m = pi.m
    s = 0
    for i in range(m - 1):
        s += delta[i]
        if s > tol:
            return False
    s = 0
    for l in range(1, m):
        s += delta[pi.inv(l) - 1]
        if s < -tol:
            return False
    return True


# -- coordinate changes ---------------------------------------------------


def to_delta(z: ZippedRectangle) -> DeltaCoords:
    """``delta_i = a_{i-1} - a_i`` with ``a_0 = 0``."""
    a = (0,) + z.a
    return DeltaCoords(z.lam, z.pi, tuple(a[i - 1] - a[i] for i in range(1, z.pi.m + 1)))


def heights(pi: Permutation, delta: Sequence) -> tuple:
    m = pi.m
    out = []
    for r in range(1, m + 1):
        hr = 0
        for i in range(1, r):
            hr -= delta[i - 1]
        for l in range(1, pi(r)):
            hr += delta[pi.inv(l) - 1]
        out.append(hr)
    return tuple(out)


def from_delta(d: DeltaCoords, check: bool = True) -> ZippedRectangle:
    """Heights from the delta sums and ``a_i = -(delta_1 + ... + delta_i)``.

    With ``check`` a delta outside the cone raises ``ConstraintError`` naming
    the offending constraint.
    """
    h = heights(d.pi, d.delta)
    a = []
    s = 0
    for x in d.delta:
        s += x
        a.append(-s)
    z = ZippedRectangle(d.lam, h, tuple(a), d.pi)
    if check and not in_cone(d.pi, d.delta):
        bad = validate(z)
        raise ConstraintError(f"delta outside the cone K_pi; violated: {', '.join(bad) or 'cone'}")
    return z


# -- area, flow, U --------------------------------------------------------


def area(d: DeltaCoords):
    """Area from delta coordinates (no heights involved)."""
    pi, m, lam = d.pi, d.pi.m, d.lam
    total = 0
    for i in range(1, m + 1):
        coef = 0
        for r in range(i + 1, m + 1):
            coef -= lam[r - 1]
        for r in range(pi(i) + 1, m + 1):
            coef += lam[pi.inv(r) - 1]
        total += d.delta[i - 1] * coef
    return total


def area_zip(z: ZippedRectangle):
    return sum(x * y for x, y in zip(z.lam, z.h))


def scale(d: DeltaCoords, s) -> DeltaCoords:
    """``lam -> s lam``, ``delta -> delta / s`` (the flow with ``s = e^t``)."""
    return DeltaCoords(tuple(x * s for x in d.lam), d.pi, tuple(x / s for x in d.delta))


def flow(d: DeltaCoords, t: float) -> DeltaCoords:
    return scale(d, math.exp(t))


def flow_zip(z: ZippedRectangle, t: float) -> ZippedRectangle:
    e = math.exp(t)
    return ZippedRectangle(tuple(x * e for x in z.lam), tuple(x / e for x in z.h), tuple(x / e for x in z.a), z.pi)


def u_map(d: DeltaCoords) -> DeltaCoords:
    """Veech's map ``U``: ``A^{-1}`` applied to both ``lam`` and ``delta``."""
    c = step_type(d.lam, d.pi)
    lam = _subtract_step(d.lam, d.pi, c)
    delta = _subtract_step(d.delta, d.pi, c)
    return DeltaCoords(tuple(lam), apply_op(c, d.pi), tuple(delta))


def return_time(p: IETPoint) -> float:
    """``-log(1 - min(lam_m, lam_{pi^-1 m}))`` for a unit-length point."""
    if abs(float(p.total) - 1.0) > 1e-9:
        raise ValueError("return time is defined on |lambda| = 1")
    step_type(p.lam, p.pi)  # raises on ties
    mn = min(p.lam[p.pi.m - 1], p.lam[p.pi.inv(p.pi.m) - 1])
    return -math.log(1 - mn)


def sector(d: DeltaCoords) -> str | None:
    """``"+"`` or ``"-"`` when ``d`` lies on ``Y+`` / ``Y-``, else ``None``."""
    try:
        c = step_type(d.lam, d.pi)
    except DegenerateError:
        return None
    am = d.a_m
    if c == "a" and am <= 0:
        return "+"
    if c == "b" and am >= 0:
        return "-"
    return None


@dataclass(frozen=True)
class FirstReturn:
    point: DeltaCoords
    time: float
    letter: Letter
    scale: object  # exact product of per-step expansions (Fraction in rational mode)
    step_times: tuple


def first_return(d: DeltaCoords, n_max: int = N_MAX) -> FirstReturn:
    """First return of the flow to ``Y+ u Y-``; the ``(lam, pi)`` part is ``G``."""
    if sector(d) is None:
        raise ConstraintError("point is not on the transversal Y+/Y-")
    if abs(float(sum(d.lam)) - 1.0) > 1e-9:
        raise ConstraintError("transversal points have |lambda| = 1")
    pi0 = d.pi
    c = step_type(d.lam, d.pi)
    total_scale = 1
    times = []
    steps = 0
    while True:
        d = u_map(d)
        s = 1 / sum(d.lam)
        d = scale(d, s)
        total_scale *= s
        times.append(math.log(s))
        steps += 1
        if sector(d) is not None:
            break
        if steps >= n_max:
            raise StallError()
    return FirstReturn(d, math.fsum(times), Letter(c, steps, pi0), total_scale, tuple(times))


def sample_transversal(pi: Permutation, rng: np.random.Generator, want: str | None = None,
                       box: float = 1.0, max_tries: int = 100000) -> DeltaCoords:
    """Random area-one point on ``Y+``/``Y-`` over ``pi`` (rejection sampling)."""
    m = pi.m
    for _ in range(max_tries):
        lam = rng.exponential(size=m)
        lam = lam / lam.sum()
        delta = rng.uniform(-box, box, size=m)
        if not in_cone(pi, delta, tol=0.0):
            continue
        d = DeltaCoords(tuple(lam), pi, tuple(delta))
        sec = sector(d)
        if sec is None or (want is not None and sec != want):
            continue
        ar = area(d)
        if ar <= 0:
            continue
        return DeltaCoords(d.lam, pi, tuple(x / ar for x in d.delta))
    raise RuntimeError("rejection sampling cap reached")


# -- numpy batch versions -------------------------------------------------


def h_matrix(pi: Permutation) -> np.ndarray:
    """``H`` with ``h = H @ delta``."""
    m = pi.m
    H = np.zeros((m, m))
    for r in range(1, m + 1):
        for i in range(1, r):
            H[r - 1, i - 1] -= 1
        for l in range(1, pi(r)):
            H[r - 1, pi.inv(l) - 1] += 1
    return H


def area_matrix(pi: Permutation) -> np.ndarray:
    """``G`` with ``area = delta @ G @ lam``, read off the delta-area formula."""
    m = pi.m
    G = np.zeros((m, m))
    for i in range(1, m + 1):
        for r in range(i + 1, m + 1):
            G[i - 1, r - 1] -= 1
        for r in range(pi(i) + 1, m + 1):
            G[i - 1, pi.inv(r) - 1] += 1
    return G


def cone_mask(pi: Permutation, deltas: np.ndarray, tol: float = 0.0) -> np.ndarray:
    m = pi.m
    s = np.cumsum(deltas, axis=1)[:, : m - 1]
    order = [pi.inv(l) - 1 for l in range(1, m + 1)]
    sp = np.cumsum(deltas[:, order], axis=1)[:, : m - 1]
    return np.all(s <= tol, axis=1) & np.all(sp >= -tol, axis=1)


def from_delta_batch(pi: Permutation, deltas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = deltas @ h_matrix(pi).T
    a = -np.cumsum(deltas, axis=1)
    return h, a


def to_delta_batch(a: np.ndarray) -> np.ndarray:
    prev = np.concatenate([np.zeros((a.shape[0], 1)), a[:, :-1]], axis=1)
    return prev - a


def zip_valid_batch(pi: Permutation, h: np.ndarray, a: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Row-wise validity under all four constraint families."""
    m = pi.m
    n = h.shape[0]
    z = np.zeros((n, 1))
    H = np.concatenate([z, h, z], axis=1)
    A = np.concatenate([z, a, z], axis=1)
    scale = np.maximum(1.0, np.max(np.abs(np.concatenate([h, a], axis=1)), axis=1))
    eps = tol * scale
    ok = np.ones(n, dtype=bool)
    for i in range(m + 1):
        pi_i = 0 if i == 0 else pi(i)
        j = m + 1 if pi_i + 1 == m + 1 else pi.inv(pi_i + 1)
        ok &= np.abs((H[:, i] - A[:, i]) - (H[:, j] - A[:, j - 1])) <= eps
    ok &= np.all(H[:, 1 : m + 1] >= -eps[:, None], axis=1)
    if m > 1:
        ok &= np.all(A[:, 1:m] >= -eps[:, None], axis=1)
    k = pi.inv(m)
    for i in range(1, m):
        if i != k:
            ok &= A[:, i] <= np.minimum(H[:, i], H[:, i + 1]) + eps
    ok &= A[:, m] <= H[:, m] + eps
    ok &= A[:, m] >= -H[:, k] - eps
    ok &= A[:, k] <= H[:, k + 1] + eps
    return ok


def zipone_basis(pi: Permutation) -> np.ndarray:
    """Orthonormal basis (columns) of the ``(h, a)`` solutions of the zipone equations.

    Built by SVD of the linear system alone, independent of the delta formulas.
    """
    m = pi.m
    rows = []
    for i in range(m + 1):
        row = np.zeros(2 * m)
        pi_i = 0 if i == 0 else pi(i)
        j = m + 1 if pi_i + 1 == m + 1 else pi.inv(pi_i + 1)
        if 1 <= i <= m:
            row[i - 1] += 1
            row[m + i - 1] -= 1
        if 1 <= j <= m:
            row[j - 1] -= 1
        if 1 <= j - 1 <= m:
            row[m + j - 2] += 1
        rows.append(row)
    mat = np.array(rows)
    _, s, vt = np.linalg.svd(mat)
    rank = int(np.sum(s > 1e-10))
    return vt[rank:].T


def as_fraction_coords(d: DeltaCoords) -> DeltaCoords:
    return DeltaCoords(tuple(Fraction(x) for x in d.lam), d.pi, tuple(Fraction(x) for x in d.delta))
