"""Seeded Monte-Carlo checks of the measure-theoretic statements.

Randomness comes from numpy ``Philox`` generators.  The sample budget is cut
into fixed-size chunks and chunk ``i`` always draws from substream ``i`` of
``SeedSequence(seed)``, so results do not depend on the thread count: the
per-chunk tallies are integers and are summed in chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateError, StallError
from .induction import IETPoint, N_MAX, _zorich, random_simplex_point
from .perm import Permutation, apply_op
from .words import Word, cylinder_leb, is_admissible
from . import zippered as zp

CHUNK = 8192


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    samples: int = 100_000
    tolerance_sigmas: float = 3.0
    threads: int = 1
    bracket_factor: float = 100.0
    birkhoff_steps: int = 10**6
    burn_in: int = 1000

    def __post_init__(self) -> None:
        if self.samples < 1000:
            raise ValueError("samples must be at least 1000")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _chunks(cfg: McConfig) -> list[tuple[int, int]]:
    """``(chunk_index, size)`` pairs covering ``cfg.samples``."""
    out, left, i = [], cfg.samples, 0
    while left > 0:
        n = min(CHUNK, left)
        out.append((i, n))
        left -= n
        i += 1
    return out


def _generators(seed: int, n: int, salt: int = 0) -> list[np.random.Generator]:
    ss = np.random.SeedSequence(seed, spawn_key=(salt,))
    return [np.random.Generator(np.random.Philox(s)) for s in ss.spawn(n)]


def _map_chunks(cfg: McConfig, fn: Callable, salt: int = 0) -> np.ndarray:
    """Sum of integer tallies ``fn(rng, n)`` over all chunks."""
    chunks = _chunks(cfg)
    gens = _generators(cfg.seed, len(chunks), salt)
    jobs = [(gens[i], n) for i, n in chunks]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda j: fn(*j), jobs))
    else:
        parts = [fn(*j) for j in jobs]
    return np.sum(np.array(parts, dtype=np.int64), axis=0)


def _ratio_se(r: float, var_log: float) -> float:
    return r * math.sqrt(max(var_log, 0.0))


# -- cylinder measures ----------------------------------------------------


def _rv_steps(w: Word) -> list[tuple[str, Permutation]]:
    steps = []
    for letter in w:
        p = letter.pi
        for _ in range(letter.n):
            steps.append((letter.c, p))
            p = apply_op(letter.c, p)
    return steps


def _cylinder_hits(steps, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Masks (in cylinder, tie met) for rows of ``lam`` following ``steps``."""
    n, m = lam.shape
    alive = np.ones(n, dtype=bool)
    tie = np.zeros(n, dtype=bool)
    lam = lam.copy()
    for c, p in steps:
        k = p.inv(m)
        top, bottom = lam[:, m - 1], lam[:, k - 1]
        tie |= alive & (top == bottom)
        alive &= (top > bottom) if c == "b" else (bottom > top)
        if c == "b":
            lam[:, m - 1] = top - bottom
        else:
            lam = np.concatenate(
                [lam[:, : k - 1], (bottom - top)[:, None], top[:, None], lam[:, k : m - 1]], axis=1)
    return alive & ~tie, tie


def mc_cylinder(w1: Word, w2: Word | None, cfg: McConfig) -> dict:
    """Empirical frequency ratio of two cylinders against ``cylinder_leb``.

    ``lam`` is uniform on the simplex over the common start permutation.  The
    cylinder of ``w`` is the set of points whose Rauzy-Veech itinerary begins
    with the steps spelled by ``w``.  Passing ``w2=None`` compares ``w1`` with
    itself, which gives ratio 1 exactly.
    """
    w2 = w1 if w2 is None else w2
    if w1.start != w2.start:
        raise ValueError("both words must start at the same permutation")
    m = w1.m
    s1, s2 = _rv_steps(w1), _rv_steps(w2)

    def tally(rng, n):
        lam = rng.dirichlet(np.ones(m), size=n)
        h1, t1 = _cylinder_hits(s1, lam)
        h2, t2 = _cylinder_hits(s2, lam)
        return [int(h1.sum()), int(h2.sum()), int((h1 & h2).sum()), int((t1 | t2).sum())]

    n1, n2, n12, ties = (int(x) for x in _map_chunks(cfg, tally))
    n = cfg.samples - ties
    leb1, leb2 = cylinder_leb(w1), cylinder_leb(w2)
    expected = float(leb1 / leb2)
    rep = {
        "w1": str(w1), "w2": str(w2), "samples": cfg.samples, "discarded": ties,
        "discard_fraction": ties / cfg.samples, "hits": [n1, n2],
        "leb": [str(leb1), str(leb2)], "expected_ratio": expected,
        "config": cfg.to_dict(),
    }
    if n1 == 0 or n2 == 0:
        rep.update(ratio=None, se=None, z=None, passed=False)
        return rep
    p1, p2, p12 = n1 / n, n2 / n, n12 / n
    ratio = n1 / n2
    var_log = ((1 - p1) / p1 + (1 - p2) / p2 - 2 * (p12 - p1 * p2) / (p1 * p2)) / n
    se = _ratio_se(ratio, var_log)
    z = 0.0 if se == 0 else (ratio - expected) / se
    passed = abs(ratio - expected) <= cfg.tolerance_sigmas * se
    rep.update(ratio=ratio, se=se, z=z, passed=bool(passed))
    return rep


def leb_identity(w: Word) -> bool:
    """``Leb(Delta(w)) * prod_j colsum_j(A(w)) == 1`` in exact arithmetic."""
    prod = Fraction(1)
    for s in w.matrix.col_sums():
        prod *= s
    return cylinder_leb(w) * prod == 1


# -- Lemma 2 bracket ------------------------------------------------------


def g_orbit_letters(pi: Permutation, steps: int, seed: int, burn_in: int = 1000,
                    n_max: int = N_MAX) -> list[tuple]:
    """Letter keys of a float orbit of the accelerated map ``G``.

    A stall or tie (both are float accidents of measure zero) restarts the
    orbit from a fresh random point of the same class position.
    """
    import random

    rng = random.Random(seed)
    p = random_simplex_point(pi, rng)
    out: list[tuple] = []
    done = -burn_in
    while done < steps:
        try:
            p, letter, _ = _zorich(p, n_max)
        except (DegenerateError, StallError):
            p = random_simplex_point(p.pi, rng)
            continue
        s = sum(p.lam)
        p = IETPoint(tuple(x / s for x in p.lam), p.pi)
        if done >= 0:
            out.append(letter.key)
        done += 1
    return out


def _block_count(seq: Sequence[tuple], block: Sequence[tuple]) -> int:
    L = len(block)
    first = block[0]
    block = list(block)
    return sum(1 for i in range(len(seq) - L + 1) if seq[i] == first and seq[i : i + L] == block)


def lemma2_bracket(q: Word, ws: Sequence[Word], cfg: McConfig) -> dict:
    """Spread of ``Prob(C(w)) * ||A(w)||^m`` over words ``w = q w~ q``.

    ``Prob`` is the Birkhoff frequency of the block ``w`` along one long
    orbit of ``G``.  Passes when max/min is at most ``cfg.bracket_factor``.
    """
    rep = {"q": str(q), "config": cfg.to_dict(), "words": []}
    if not ws:
        rep.update(spread=1.0, passed=True)
        return rep
    if not q.matrix.is_positive():
        raise ValueError("A(q) must be positive")
    for w in ws:
        if not is_admissible(w):
            raise ValueError(f"word {w} is not admissible")
        L = len(q)
        if w.letters[:L] != q.letters or w.letters[-L:] != q.letters:
            raise ValueError(f"word {w} does not begin and end with q")
    m = q.m
    seq = g_orbit_letters(q.start, cfg.birkhoff_steps, cfg.seed, cfg.burn_in)
    products = []
    for w in ws:
        hits = _block_count(seq, [x.key for x in w])
        prob = hits / len(seq)
        prod = prob * float(w.norm) ** m
        se = math.sqrt(prob * (1 - prob) / len(seq)) * float(w.norm) ** m
        products.append(prod)
        rep["words"].append({"word": str(w), "hits": hits, "prob": prob, "product": prod,
                             "product_se_iid": se, "leb_identity": leb_identity(w)})
    if min(products) <= 0:
        rep.update(spread=None, passed=False)
        return rep
    spread = max(products) / min(products)
    rep.update(spread=spread, passed=bool(spread <= cfg.bracket_factor))
    return rep


# -- expansion / contraction on leaves ------------------------------------


def _leaf_setup(pi: Permutation, seed: int):
    """Fixed base point: a transversal sample ``(lam0, delta0)``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(99,))))
    return zp.sample_transversal(pi, rng)


def _in_leaf_box(pi, lam, delta, G):
    """Cell of the leaf box: positive lengths, ``|lam| <= 1``, delta in the cone, positive area."""
    area = np.einsum("ni,ij,nj->n", delta, G, lam)
    return (np.all(lam > 0, axis=1) & (lam.sum(axis=1) <= 1.0)
            & zp.cone_mask(pi, delta) & (area > 0))


def mc_expansion(pi: Permutation, t: float, cfg: McConfig) -> dict:
    """Leaf-measure ratios of a fixed box ``B`` and of its image under the flow.

    ``F+`` leaf (delta fixed, lam free): the measure is Lebesgue in ``lam``
    and the image ``flow(B, t)`` should weigh ``e^{mt}`` times ``B``.
    ``F-`` leaf (lam fixed, delta free): Lebesgue in ``delta`` with factor
    ``e^{-mt}``.  Both sets are tested on common uniform samples of a box
    containing them, and the ratio error uses the multinomial delta method.
    """
    if not 0 <= t <= 1:
        raise ValueError("t must be in [0, 1]")
    m = pi.m
    base = _leaf_setup(pi, cfg.seed)
    lam0, del0 = np.array(base.lam), np.array(base.delta)
    G = zp.area_matrix(pi)
    e = math.exp(t)
    out = {"pi": str(pi), "t": t, "m": m, "config": cfg.to_dict()}

    # F+: B = {(lam, del0) in the cell}; image = {(e lam, del0 / e)}
    hi_plus = e * 1.0

    def plus(rng, n):
        lam = rng.uniform(0, hi_plus, size=(n, m))
        d0 = np.broadcast_to(del0, (n, m))
        b = _in_leaf_box(pi, lam, d0, G)
        img = _in_leaf_box(pi, lam / e, d0, G)
        return [int(b.sum()), int(img.sum()), int((b & img).sum())]

    # F-: B = {(lam0, delta)} with delta in a box around the cone apex
    R = float(np.max(np.abs(del0))) * 2.0 + 1.0

    def minus(rng, n):
        delta = rng.uniform(-R, R, size=(n, m))
        l0 = np.broadcast_to(lam0, (n, m))
        b = _in_leaf_box(pi, l0, delta, G) & (np.abs(delta).max(axis=1) <= R / e)
        dd = delta * e
        img = _in_leaf_box(pi, l0, dd, G) & (np.abs(dd).max(axis=1) <= R / e)
        return [int(b.sum()), int(img.sum()), int((b & img).sum())]

    for name, fn, target, salt in (("F+", plus, math.exp(m * t), 1), ("F-", minus, math.exp(-m * t), 2)):
        nb, ni, nboth = (int(x) for x in _map_chunks(cfg, fn, salt))
        n = cfg.samples
        if nb == 0 or ni == 0:
            out[name] = {"hits": [nb, ni], "ratio": None, "expected": target, "passed": False}
            continue
        p1, p2, p12 = nb / n, ni / n, nboth / n
        ratio = ni / nb
        var_log = ((1 - p1) / p1 + (1 - p2) / p2 - 2 * (p12 - p1 * p2) / (p1 * p2)) / n
        se = _ratio_se(ratio, var_log)
        ok = abs(ratio - target) <= cfg.tolerance_sigmas * se if se > 0 else ratio == target
        out[name] = {"hits": [nb, ni], "ratio": ratio, "se": se, "expected": target,
                     "z": 0.0 if se == 0 else (ratio - target) / se, "passed": bool(ok)}
    out["passed"] = bool(out["F+"]["passed"] and out["F-"]["passed"])
    return out


def flow_jacobian(pi: Permutation, t: float, point: zp.DeltaCoords | None = None, h: float = 1e-6) -> float:
    """Determinant of the central-difference Jacobian of the flow in ``(lam, delta)``."""
    m = pi.m
    if point is None:
        point = zp.DeltaCoords(tuple([1.0 / m] * m), pi, tuple([0.0] * m))
    x0 = np.array(point.lam + point.delta, dtype=float)

    def f(x):
        d = zp.flow(zp.DeltaCoords(tuple(x[:m]), pi, tuple(x[m:])), t)
        return np.array(d.lam + d.delta)

    J = np.zeros((2 * m, 2 * m))
    for i in range(2 * m):
        dx = np.zeros(2 * m)
        dx[i] = h
        J[:, i] = (f(x0 + dx) - f(x0 - dx)) / (2 * h)
    return float(np.linalg.det(J))


def mc_volume(pi: Permutation, t: float, cfg: McConfig, factor: int = 10) -> dict:
    """Monte-Carlo ``2m``-volume of a set before and after the flow.

    ``S = {lam in [0,1]^m, delta in K_pi with |delta|_inf <= 1}``.  Both ``S``
    and ``flow(S, t)`` fit in ``[0, e^|t|]^m x [-e^|t|, e^|t|]^m``, sampled
    ``factor * cfg.samples`` times.  Passes when the volume ratio is within
    2% of 1 and the finite-difference Jacobian determinant is 1.
    """
    m = pi.m
    e = math.exp(abs(t))
    big = replace(cfg, samples=cfg.samples * factor)

    def in_s(lam, delta):
        return (np.all(lam <= 1.0, axis=1) & (np.abs(delta).max(axis=1) <= 1.0) & zp.cone_mask(pi, delta))

    def tally(rng, n):
        lam = rng.uniform(0, e, size=(n, m))
        delta = rng.uniform(-e, e, size=(n, m))
        b = in_s(lam, delta)
        img = in_s(lam * math.exp(-t), delta * math.exp(t))
        return [int(b.sum()), int(img.sum()), int((b & img).sum())]

    nb, ni, nboth = (int(x) for x in _map_chunks(big, tally, 3))
    n = big.samples
    out = {"pi": str(pi), "t": t, "samples": n, "hits": [nb, ni], "jacobian_det": flow_jacobian(pi, t),
           "config": cfg.to_dict()}
    if nb == 0 or ni == 0:
        out.update(ratio=None, se=None, passed=False)
        return out
    p1, p2, p12 = nb / n, ni / n, nboth / n
    ratio = ni / nb
    se = _ratio_se(ratio, ((1 - p1) / p1 + (1 - p2) / p2 - 2 * (p12 - p1 * p2) / (p1 * p2)) / n)
    ok = abs(ratio - 1.0) <= 0.02 and abs(out["jacobian_det"] - 1.0) <= 1e-6
    out.update(ratio=ratio, se=se, passed=bool(ok))
    return out


# -- zippered-rectangle batch checks --------------------------------------


def zip_check(pi: Permutation, cfg: McConfig, box: float = 1.0) -> dict:
    """Constraint equivalence, area identity, round trip, volume and scaling.

    ``delta`` is drawn uniformly from ``[-box, box]^m``; samples in the cone
    must give valid rectangles and samples outside it invalid ones.
    Conversely random points of the zipone solution space that satisfy every
    constraint must map back into the cone.
    """
    m = pi.m
    G = zp.area_matrix(pi)
    basis = zp.zipone_basis(pi)

    def tally(rng, n):
        lam = rng.dirichlet(np.ones(m), size=n)
        delta = rng.uniform(-box, box, size=(n, m))
        cone = zp.cone_mask(pi, delta)
        h, a = zp.from_delta_batch(pi, delta)
        valid = zp.zip_valid_batch(pi, h, a)
        a1 = np.einsum("ni,ij,nj->n", delta, G, lam)
        a2 = np.sum(lam * h, axis=1)
        scale = np.maximum(np.abs(a2), 1e-300)
        area_bad = np.abs(a1 - a2) > 1e-12 * np.maximum(scale, np.abs(lam).max(axis=1) * np.abs(h).max(axis=1))
        back = zp.to_delta_batch(a)
        rt_bad = np.abs(back - delta).max(axis=1) > 1e-12 * max(box, 1.0)
        # converse: random (h, a) in the zipone space
        coef = rng.normal(size=(n, basis.shape[1]))
        ha = coef @ basis.T
        hv, av = ha[:, :m], ha[:, m:]
        ok = zp.zip_valid_batch(pi, hv, av)
        conv_bad = ok & ~zp.cone_mask(pi, zp.to_delta_batch(av), tol=1e-9)
        return [int(cone.sum()), int((cone != valid).sum()), int(area_bad.sum()),
                int(rt_bad.sum()), int(ok.sum()), int(conv_bad.sum())]

    n_cone, mismatch, area_bad, rt_bad, n_conv, conv_bad = (int(x) for x in _map_chunks(cfg, tally, 4))
    rep = {
        "pi": str(pi), "samples": cfg.samples, "in_cone": n_cone,
        "constraint_mismatches": mismatch, "area_failures": area_bad,
        "roundtrip_failures": rt_bad, "converse_valid": n_conv, "converse_failures": conv_bad,
        "config": cfg.to_dict(),
    }
    vol = mc_volume(pi, 0.1, cfg)
    exp_ = mc_expansion(pi, 0.1, cfg)
    rep["volume"] = {k: vol[k] for k in ("ratio", "se", "jacobian_det", "passed")}
    rep["scaling"] = {"F+": exp_["F+"], "F-": exp_["F-"], "passed": exp_["passed"]}
    rep["passed"] = bool(mismatch == 0 and area_bad == 0 and rt_bad == 0 and conv_bad == 0
                         and vol["passed"] and exp_["passed"])
    return rep
