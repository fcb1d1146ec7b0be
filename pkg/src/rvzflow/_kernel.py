"""Compiled DFS counting kernel.

The state of a node is the column-sum row vector ``v = 1^T A(u)`` of the
current prefix ``u``: the norm of every extension ``u x`` is ``max(v A(x))``,
so ``v`` is all the pruning needs.  A letter ``(c, n, p)`` whose ``c``-cycle at
``p`` has length ``K`` is written ``n = qK + r``; its matrix is ``C^q P_r`` with
``C = I + N`` and ``N^2 = 0``, which makes ``v A(x) = s + q t`` affine in ``q``.

Two levels are handled in closed form:

* leaf words ending with the next letter are counted per residue ``r``;
* children without grandchildren are never visited: the words ending one
  letter below them are summed over the child exponent, using that the
  child's leaf count ``f(q)`` is nonincreasing and ``f(q) >= v`` is linear in
  ``q``.

Orbits are counted as Lyndon words (least rotation, primitive) using the
prenecklace period of the prefix, maintained incrementally as in Duval's
algorithm.  The second-level closed form assumes the prefix matrix is already
positive, so primitivity is automatic there; earlier nodes are visited one by
one.
"""

from __future__ import annotations

import math

import numpy as np
from functools import lru_cache

from numba import njit

# Tables (built by counting._tables), indexed by a letter slot [p, c, r]:
#   K[p, c]              cycle length of c at p
#   TGT[p, c, r]         c^r p
#   PAT0, PAT1           boolean row masks of P_r and of C P_r
#   M1[p, c, r, s]       s=0: P_r   s=1: N P_r   s=2: P_r E'   s=3: N P_r E'
#                        (E' = n=1 matrix of the other label at TGT)
#   M2[p, c, r, r2, s]   the same affine pieces one letter further down,
#                        for the child residue r2 (see _tables)

BIG = np.int64(1) << 62


@lru_cache(maxsize=None)
def get_kernel(MM: int):
    """Compile the kernel for ``m = MM``.

    ``MM`` is a compile-time constant inside, so the short loops over
    coordinates are unrolled.  Compilation takes a few seconds per ``m``.
    """

    @njit(nogil=True, error_model="numpy")
    def _primitive(a, m, cur, tmp):
        full = (1 << m) - 1
        for i in range(MM):
            cur[i] = a[i]
        for _ in range((m - 1) * (m - 1) + 2):
            done = True
            for i in range(MM):
                if cur[i] != full:
                    done = False
            if done:
                return True
            for i in range(MM):
                acc = 0
                row = cur[i]
                for j in range(MM):
                    if (row >> j) & 1:
                        acc |= a[j]
                tmp[i] = acc
            for i in range(MM):
                cur[i] = tmp[i]
        return False


    @njit(nogil=True, error_model="numpy")
    def _qmax(W, s0, s1, m, bound):
        """Largest q >= 0 with max(W[s0] + q W[s1]) <= bound, or -1."""
        best = BIG
        for j in range(MM):
            a = W[s0, j]
            if a > bound:
                return -1
            b = W[s1, j]
            if b > 0:
                x = (bound - a) // b
                if x < best:
                    best = x
        return best


    @njit(nogil=True, error_model="numpy")
    def _sum_f(W, m, bound, qa, qb, lo):
        """Sum over q in [qa, qb] of max(0, f(q) - lo + 1).

        ``f(q)`` is the largest q' with ``A0 + q A1 + q' (B0 + q B1) <= bound``
        where ``A0, A1, B0, B1 = W[0..3]``.  ``f`` is nonincreasing and
        ``f(q) >= v`` is linear in q, so the loop runs over distinct values of f.
        """
        total = np.int64(0)
        q = qa
        while q <= qb:
            v = BIG
            for j in range(MM):
                s = W[0, j] + q * W[1, j]
                if s > bound:
                    return total
                t = W[2, j] + q * W[3, j]
                if t > 0:
                    x = (bound - s) // t
                    if x < v:
                        v = x
            if v < lo:
                return total
            q2 = qb
            for j in range(MM):
                den = W[1, j] + v * W[3, j]
                if den > 0:
                    x = (bound - W[0, j] - v * W[2, j]) // den
                    if x < q2:
                        q2 = x
            total += (q2 - q + 1) * (v - lo + 1)
            q = q2 + 1
        return total


    @njit(nogil=True, error_model="numpy")
    def _lower_alpha(ALIM, alpha, nrm, n):
        al = math.log(nrm) / n
        if al < alpha:
            alpha = al
            for i in range(ALIM.shape[0]):
                ALIM[i] = math.exp(alpha * i)
        return alpha


    @njit(nogil=True, error_model="numpy")
    def _lyn_threshold(c2, pos2, r2, k2, yc, yn, yp):
        """Smallest q' making the letter (c2, q' k2 + r2, pos2) exceed y."""
        if c2 > yc:
            return np.int64(0)
        if c2 < yc:
            return BIG
        nmin = yn if pos2 > yp else yn + 1
        ql = (nmin - r2 + k2 - 1) // k2
        return ql if ql > 0 else np.int64(0)


    @njit(nogil=True, error_model="numpy")
    def count_kernel(
        m, bound, K, TGT, PAT0, PAT1, M1, M2,
        v0, pat0, pos0, c0, first_c, first_p, letters_c, letters_n, letters_p, per0,
        wid, nworkers, node_budget, max_depth,
    ):
        """Count admissible words (and Lyndon ones) with ``max colsum <= bound``.

        The root is the given prefix state (possibly empty).  Only the children of
        the root whose exponent satisfies ``n % nworkers == wid`` are explored;
        root leaves are counted by worker 0.  Returns
        ``(n_words, n_lyndon, nodes, alpha_min, aborted)`` where ``aborted`` is 0,
        1 (node budget) or 2 (depth cap).
        """
        L0 = letters_c.shape[0]
        D = max_depth + L0 + 2
        kmax = K.max()
        full_mask = (1 << m) - 1
        V = np.zeros((D, m), dtype=np.int64)
        PAT = np.zeros((D, m), dtype=np.int64)
        FULL = np.zeros(D, dtype=np.bool_)
        POS = np.zeros(D, dtype=np.int64)
        CN = np.zeros(D, dtype=np.int64)
        PER = np.zeros(D, dtype=np.int64)
        LC = np.zeros(D, dtype=np.int64)
        LN = np.zeros(D, dtype=np.int64)
        LP = np.zeros(D, dtype=np.int64)
        ST = np.zeros((D, kmax, 2, m), dtype=np.int64)  # s and t per residue
        QE = np.full((D, kmax), -1, dtype=np.int64)
        RC = np.zeros(D, dtype=np.int64)
        QC = np.zeros(D, dtype=np.int64)
        W1 = np.zeros((4, m), dtype=np.int64)
        W2 = np.zeros((kmax, 6, m), dtype=np.int64)
        # ALIM[n] = exp(alpha * n): a word of n letters can only lower alpha
        # when its norm is below ALIM[n]
        ALIM = np.full(D + 2, np.inf)
        prod = np.zeros(m, dtype=np.int64)
        cur = np.zeros(m, dtype=np.int64)
        tmp = np.zeros(m, dtype=np.int64)

        for i in range(L0):
            LC[i] = letters_c[i]
            LN[i] = letters_n[i]
            LP[i] = letters_p[i]
        d = L0
        isfull = True
        for j in range(MM):
            V[d, j] = v0[j]
            PAT[d, j] = pat0[j]
            if pat0[j] != full_mask:
                isfull = False
        FULL[d] = isfull
        POS[d] = pos0
        CN[d] = c0
        PER[d] = per0

        n_words = np.int64(0)
        n_lyn = np.int64(0)
        nodes = np.int64(1)
        alpha = math.inf
        aborted = 0
        entering = True

        while d >= L0:
            p = POS[d]
            c = CN[d]
            k = K[p, c]
            if entering:
                entering = False
                full = FULL[d]
                count_here = d > L0 or wid == 0
                fast = full and (d > L0 or nworkers == 1)
                c2 = 1 - c
                per = PER[d]
                for r in range(k):
                    for sl in range(4):
                        for j in range(MM):
                            acc = 0
                            for i in range(MM):
                                acc += V[d, i] * M1[p, c, r, sl, i, j]
                            W1[sl, j] = acc
                    for j in range(MM):
                        ST[d, r, 0, j] = W1[0, j]
                        ST[d, r, 1, j] = W1[1, j]
                    qlo = 1 if r == 0 else 0
                    tg = TGT[p, c, r]
                    # children must allow one more letter; this also bounds q <= qhi
                    qext = _qmax(W1, 2, 3, m, bound)
                    QE[d, r] = qext

                    # words ending with this letter
                    if count_here and d > 0 and c != first_c and tg == first_p:
                        qhi = _qmax(W1, 0, 1, m, bound)
                        if qhi >= qlo:
                            ok0 = full
                            ok1 = full
                            if not full:
                                if qlo == 0:
                                    for i in range(MM):
                                        acc = 0
                                        row = PAT[d, i]
                                        for j in range(MM):
                                            if (row >> j) & 1:
                                                acc |= PAT0[p, c, r, j]
                                        prod[i] = acc
                                    ok0 = _primitive(prod, m, cur, tmp)
                                for i in range(MM):
                                    acc = 0
                                    row = PAT[d, i]
                                    for j in range(MM):
                                        if (row >> j) & 1:
                                            acc |= PAT1[p, c, r, j]
                                    prod[i] = acc
                                ok1 = _primitive(prod, m, cur, tmp)
                            cnt = np.int64(0)
                            first_q = np.int64(-1)
                            if qlo == 0 and ok0:
                                cnt += 1
                                first_q = 0
                            if ok1 and qhi >= 1:
                                cnt += qhi
                                if first_q < 0:
                                    first_q = 1
                            if cnt > 0:
                                n_words += cnt
                                nrm = np.int64(0)
                                for j in range(MM):
                                    x = W1[0, j] + first_q * W1[1, j]
                                    if x > nrm:
                                        nrm = x
                                if nrm < ALIM[d + 1]:
                                    alpha = _lower_alpha(ALIM, alpha, nrm, d + 1)
                                # Lyndon: the new letter must beat y = u[d - per]
                                if per > 0:
                                    yy = d - per
                                    ql = _lyn_threshold(c, p, r, k, LC[yy], LN[yy], LP[yy])
                                    if qlo == 0 and ok0 and ql == 0:
                                        n_lyn += 1
                                    lo = 1 if ql < 1 else ql
                                    if ok1 and qhi >= lo:
                                        n_lyn += qhi - lo + 1

                    if not fast or qext < qlo:
                        continue
                    # children past qstar have no grandchildren: add the words one
                    # letter below them here instead of visiting them
                    k2 = K[tg, c2]
                    qstar = np.int64(-1)
                    for r2 in range(k2):
                        for sl in range(4, 6):
                            for j in range(MM):
                                acc = 0
                                for i in range(MM):
                                    acc += V[d, i] * M2[p, c, r, r2, sl, i, j]
                                W2[r2, sl, j] = acc
                        qs = _qmax(W2[r2], 4, 5, m, bound)
                        if qs > qstar:
                            qstar = qs
                    qa = qstar + 1
                    if qa < qlo:
                        qa = qlo
                    if qa > qext:
                        continue
                    QE[d, r] = qa - 1
                    for r2 in range(k2):
                        tg2 = TGT[tg, c2, r2]
                        if c2 == first_c or tg2 != first_p:
                            continue
                        qlo2 = 1 if r2 == 0 else 0
                        for sl in range(4):
                            for j in range(MM):
                                acc = 0
                                for i in range(MM):
                                    acc += V[d, i] * M2[p, c, r, r2, sl, i, j]
                                W2[r2, sl, j] = acc
                        Wr = W2[r2]
                        w = _sum_f(Wr, m, bound, qa, qext, qlo2)
                        if w == 0:
                            continue
                        n_words += w
                        nrm = np.int64(0)
                        for j in range(MM):
                            x = Wr[0, j] + qa * Wr[1, j] + qlo2 * (Wr[2, j] + qa * Wr[3, j])
                            if x > nrm:
                                nrm = x
                        if nrm < ALIM[d + 2]:
                            alpha = _lower_alpha(ALIM, alpha, nrm, d + 2)
                        # Lyndon words among them, split by the child's prenecklace state
                        if d == 0:
                            if c2 > c:
                                n_lyn += w
                            continue
                        if per == 0:
                            continue
                        yy = d - per
                        yc = LC[yy]
                        if c < yc:
                            continue
                        l0 = _lyn_threshold(c2, tg, r2, k2, LC[0], LN[0], LP[0])
                        if l0 < qlo2:
                            l0 = qlo2
                        if c > yc:
                            n_lyn += w if l0 == qlo2 else _sum_f(Wr, m, bound, qa, qext, l0)
                            continue
                        yn = LN[yy]
                        yp = LP[yy]
                        if yn >= r and (yn - r) % k == 0:
                            qeq = (yn - r) // k
                            g = qeq if p > yp else qeq + 1
                            if p == yp and qa <= qeq <= qext:
                                ye = d + 1 - per
                                l1 = _lyn_threshold(c2, tg, r2, k2, LC[ye], LN[ye], LP[ye])
                                if l1 < qlo2:
                                    l1 = qlo2
                                n_lyn += _sum_f(Wr, m, bound, qeq, qeq, l1)
                        else:
                            g = (yn - r + k - 1) // k
                        if g < qa:
                            g = qa
                        n_lyn += _sum_f(Wr, m, bound, g, qext, l0)
                RC[d] = 0
                QC[d] = 1
            # advance to the next child
            r = RC[d]
            if r >= k:
                d -= 1
                continue
            q = QC[d]
            if q > QE[d, r]:
                RC[d] = r + 1
                QC[d] = 0
                continue
            QC[d] = q + 1
            n = q * k + r
            if d == L0 and n % nworkers != wid:
                continue
            nodes += 1
            if nodes > node_budget:
                aborted = 1
                break
            if d + 1 >= D:
                aborted = 2
                break
            e = d + 1
            for j in range(MM):
                V[e, j] = ST[d, r, 0, j] + q * ST[d, r, 1, j]
            if FULL[d]:
                FULL[e] = True
            else:
                isfull = True
                for i in range(MM):
                    acc = 0
                    row = PAT[d, i]
                    for j in range(MM):
                        if (row >> j) & 1:
                            acc |= PAT0[p, c, r, j] if q == 0 else PAT1[p, c, r, j]
                    PAT[e, i] = acc
                    if acc != full_mask:
                        isfull = False
                FULL[e] = isfull
            LC[d] = c
            LN[d] = n
            LP[d] = p
            per = PER[d]
            if d == 0:
                nper = 1
            elif per > 0:
                y = d - per
                if c == LC[y] and n == LN[y] and p == LP[y]:
                    nper = per
                elif c > LC[y] or (c == LC[y] and (n > LN[y] or (n == LN[y] and p > LP[y]))):
                    nper = d + 1
                else:
                    nper = 0
            else:
                nper = 0
            PER[e] = nper
            POS[e] = TGT[p, c, r]
            CN[e] = 1 - c
            d = e
            entering = True

        return n_words, n_lyn, nodes, alpha, aborted

    return count_kernel
