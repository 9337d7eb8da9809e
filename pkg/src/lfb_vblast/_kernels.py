"""Compiled enumeration kernels.

Coordinates are handled by level index: coordinate value is
``lo + step * idx`` for ``idx`` in ``[0, nlev)``. Every kernel takes an
``ops`` int64 array of length 3 that it increments in place:
``ops[0]`` real multiplications (divisions and square roots included),
``ops[1]`` real additions/subtractions, ``ops[2]`` leaf candidates
whose full distance was evaluated.
"""

import math

import numpy as np
from numba import njit

RIDGE = 1e-9
# relative gap below which two squared distances count as a tie
TIE_RTOL = 1e-9


@njit(cache=True, nogil=True)
def triangularize(a, n, ops):
    """Householder-reduce the first ``n`` columns of ``a`` in place.

    Reflections are applied to every column of ``a``, so extra columns
    holding received vectors come out as ``Q^T y``. Requires
    ``a.shape[0] >= n``. Near-zero diagonal entries are replaced by
    ``RIDGE``.
    """
    m, p = a.shape
    v = np.empty(m)
    for j in range(n):
        rows = m - j
        norm2 = 0.0
        for i in range(j, m):
            norm2 += a[i, j] * a[i, j]
        ops[0] += rows + 1
        ops[1] += rows - 1
        norm = math.sqrt(norm2)
        if norm == 0.0:
            continue
        alpha = -norm if a[j, j] >= 0.0 else norm
        for i in range(j, m):
            v[i] = a[i, j]
        v[j] -= alpha
        vn2 = norm2 - a[j, j] * a[j, j] + v[j] * v[j]
        ops[0] += 2
        ops[1] += 3
        a[j, j] = alpha
        for i in range(j + 1, m):
            a[i, j] = 0.0
        for c in range(j + 1, p):
            s = 0.0
            for i in range(j, m):
                s += v[i] * a[i, c]
            f = 2.0 * s / vn2
            for i in range(j, m):
                a[i, c] -= f * v[i]
            ops[0] += 2 * rows + 2
            ops[1] += 2 * rows - 1
    for j in range(n):
        if abs(a[j, j]) < RIDGE:
            a[j, j] = RIDGE


@njit(cache=True, nogil=True)
def se_search(r, yt, lo, step, nlev, svp, radius2, best, ops, floor2=-1.0):
    """Depth-first Schnorr-Euchner enumeration over a bounded box.

    Minimises ``||yt - r x||^2`` over ``x`` with every coordinate on the
    level grid, where ``r`` is upper triangular. Level ``n-1`` is fixed
    first. Candidates at a level are visited in order of distance from
    the projected centre by merging the two sorted half-sequences to its
    right and left, so the first out-of-radius candidate ends the level.

    In ``svp`` mode ``yt`` must be zero, the all-zero leaf is skipped and
    the first nonzero coordinate in enumeration order is restricted to be
    positive. ``best`` holds level indices; it is overwritten only when a
    strictly shorter candidate is found. The search stops early once the
    radius falls to ``floor2`` or below. Returns the final squared radius.
    """
    n = r.shape[0]
    x = np.zeros(n)
    xi = np.zeros(n, np.int64)
    kr = np.zeros(n, np.int64)
    kl = np.zeros(n, np.int64)
    ctr = np.zeros(n)
    pd = np.zeros(n + 1)
    zero_above = np.ones(n + 1, np.bool_)
    zero_idx = int(round(-lo / step))

    k = n - 1
    c = yt[k] / r[k, k]
    ops[0] += 1
    ctr[k] = c
    if svp:
        kr[k] = zero_idx
        kl[k] = -1
    else:
        ri = int(math.ceil((c - lo) / step))
        ri = min(max(ri, 0), nlev)
        kr[k] = ri
        kl[k] = ri - 1

    while True:
        pick = -1
        r_ok = kr[k] < nlev
        l_ok = kl[k] >= 0
        if r_ok and l_ok:
            if (lo + step * kr[k]) - ctr[k] <= ctr[k] - (lo + step * kl[k]):
                pick = kr[k]
                kr[k] += 1
            else:
                pick = kl[k]
                kl[k] -= 1
        elif r_ok:
            pick = kr[k]
            kr[k] += 1
        elif l_ok:
            pick = kl[k]
            kl[k] -= 1

        if pick >= 0:
            val = lo + step * pick
            e = (val - ctr[k]) * r[k, k]
            d = pd[k + 1] + e * e
            ops[0] += 2
            ops[1] += 2
            if k == 0:
                ops[2] += 1
            if d < radius2:
                if k == 0:
                    if svp and zero_above[1] and pick == zero_idx:
                        continue
                    radius2 = d
                    best[0] = pick
                    for j in range(1, n):
                        best[j] = xi[j]
                    if radius2 <= floor2:
                        break
                    continue
                x[k] = val
                xi[k] = pick
                pd[k] = d
                zero_above[k] = zero_above[k + 1] and pick == zero_idx
                k -= 1
                s = yt[k]
                for j in range(k + 1, n):
                    s -= r[k, j] * x[j]
                c = s / r[k, k]
                ops[0] += n - k
                ops[1] += n - 1 - k
                ctr[k] = c
                if svp and zero_above[k + 1]:
                    kr[k] = zero_idx
                    kl[k] = -1
                else:
                    ri = int(math.ceil((c - lo) / step))
                    ri = min(max(ri, 0), nlev)
                    kr[k] = ri
                    kl[k] = ri - 1
                continue
        k += 1
        if k == n:
            break
    return radius2


@njit(cache=True, nogil=True)
def svp_one(basis, lo, step, nlev, best, ops, floor2=-1.0):
    """Constrained shortest vector of one real basis; returns squared length.

    With ``floor2 >= 0`` the result is only exact when it exceeds
    ``floor2``; otherwise it is some achievable length ``<= floor2``.
    """
    m, n = basis.shape
    # start from the shortest basis column (coordinate +1 on one axis)
    zero_idx = int(round(-lo / step))
    one_idx = int(round((1.0 - lo) / step))
    radius2 = np.inf
    jbest = 0
    for j in range(n):
        s = 0.0
        for i in range(m):
            s += basis[i, j] * basis[i, j]
        if s < radius2:
            radius2 = s
            jbest = j
    ops[0] += m * n
    ops[1] += (m - 1) * n
    for j in range(n):
        best[j] = zero_idx
    best[jbest] = one_idx
    if radius2 <= floor2:
        return radius2
    work = np.zeros((max(m, n), n))
    work[:m, :] = basis
    triangularize(work, n, ops)
    yt = np.zeros(n)
    return se_search(work[:n, :n], yt, lo, step, nlev, True, radius2, best, ops, floor2)


@njit(cache=True, nogil=True)
def svp_batch(bases, lo, step, nlev, out_d2, out_idx, ops):
    for b in range(bases.shape[0]):
        out_d2[b] = svp_one(bases[b], lo, step, nlev, out_idx[b], ops)


@njit(cache=True, nogil=True)
def select_batch(bases, lo, step, nlev, out_p, out_d2, ops):
    """Per block, index of the basis with the largest constrained-SVP length.

    ``bases`` has shape (blocks, codebook, m, n). Ties, up to ``TIE_RTOL``,
    keep the lowest index; some codebooks contain entries whose distances
    agree exactly in real arithmetic. A candidate's search is abandoned as
    soon as it finds a vector no longer than the current leader's.
    """
    nb, ncb, m, n = bases.shape
    best = np.zeros(n, np.int64)
    for b in range(nb):
        top = -1.0
        arg = 0
        for i in range(ncb):
            bar = top * (1.0 + TIE_RTOL)
            d2 = svp_one(bases[b, i], lo, step, nlev, best, ops, bar)
            if d2 > bar:
                top = d2
                arg = i
        out_p[b] = arg
        out_d2[b] = top


@njit(cache=True, nogil=True)
def decode_batch(bases, ys, lo, step, nlev, out_idx, ops):
    """Exact ML decisions for ``ys[b, :, c]`` against ``bases[b]``.

    One triangularisation per block is shared by all of the block's
    received vectors. ``out_idx`` has shape (blocks, vectors, n).
    """
    nb, m, n = bases.shape
    k = ys.shape[2]
    work = np.zeros((max(m, n), n + k))
    for b in range(nb):
        work[:, :] = 0.0
        work[:m, :n] = bases[b]
        work[:m, n:] = ys[b]
        triangularize(work, n, ops)
        r = work[:n, :n]
        for c in range(k):
            yt = work[:n, n + c].copy()
            se_search(r, yt, lo, step, nlev, False, np.inf, out_idx[b, c], ops)
