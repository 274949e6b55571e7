"""Batch oracle kernels (numba).

Everything here works in the syndrome domain: a test pattern's syndromes are
the hard-decision syndromes XOR the syndromes of the flipped positions, so no
per-pattern word copies are needed.  The kernels must agree exactly with the
reference decoders in ``chase`` and ``orbgrand``; the test suite checks this
record by record.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _mod255(v):
    v = v % 255
    if v < 0:
        v += 255
    return v


@njit(cache=True)
def bd_from_syndromes(s1, s3, exp, log, roots, out):
    """Fill ``out[0:2]`` with error positions; return their count or -1."""
    if s1 == 0:
        if s3 == 0:
            return 0
        return -1
    l1 = log[s1]
    s1c = exp[_mod255(3 * l1)]
    if s3 == s1c:
        out[0] = l1
        return 1
    # X1, X2 are the roots of z^2 + s1 z + (s3 + s1^3)/s1; substitute z = s1 u
    c = exp[_mod255(log[s3 ^ s1c] - 3 * l1)]
    u = roots[c]
    if u < 0:
        return -1
    x1 = exp[_mod255(l1 + log[u])]
    x2 = x1 ^ s1
    a, b = log[x1], log[x2]
    if a < b:
        out[0], out[1] = a, b
    else:
        out[0], out[1] = b, a
    return 2


@njit(cache=True)
def smallest_k(mag, k, out):
    """Indices of the k smallest ``mag`` values, ties by ascending index."""
    n = mag.size
    cnt = 0
    for i in range(n):
        v = mag[i]
        if cnt == k and not v < mag[out[cnt - 1]]:
            continue
        j = cnt if cnt < k else k - 1
        while j > 0 and mag[out[j - 1]] > v:
            out[j] = out[j - 1]
            j -= 1
        out[j] = i
        if cnt < k:
            cnt += 1


@njit(cache=True)
def _sorted_sum(mag, pos, m):
    # insertion sort then left-to-right sum, matching the reference ordering
    for a in range(1, m):
        v = pos[a]
        b = a
        while b > 0 and pos[b - 1] > v:
            pos[b] = pos[b - 1]
            b -= 1
        pos[b] = v
    s = 0.0
    for a in range(m):
        s += mag[pos[a]]
    return s


@njit(cache=True)
def trial_oracles(
    y, tx, p_max, exp, log, roots,
    orb_parts, orb_lengths, orb_mask_sorted, orb_mask_index, orb_rank,
    n_store, gamma_grid,
    minp_mask, sorted_mag, counts, orb_true, orb_any, n_errors,
):
    """Fill per-trial oracle arrays for a block of trials.

    ``p_max < 0`` skips the Chase oracle; an empty ``orb_parts`` skips ORBGRAND.
    """
    T, n = y.shape
    n_pat = orb_parts.shape[0]
    k_sel = max(p_max, orb_rank, n_store, 1)
    lrp = np.empty(k_sel, dtype=np.int64)
    mag = np.empty(n, dtype=np.float64)
    n_chase = 1 << max(p_max, 0)
    syn1 = np.zeros(n_chase, dtype=np.int64)
    syn3 = np.zeros(n_chase, dtype=np.int64)
    a1 = np.zeros(max(k_sel, 1), dtype=np.int64)
    a3 = np.zeros(max(k_sel, 1), dtype=np.int64)
    bd = np.zeros(2, dtype=np.int64)
    fpos = np.empty(p_max + 3 if p_max >= 0 else 3, dtype=np.int64)
    n_gam = gamma_grid.size

    for t in range(T):
        s1 = 0
        s3 = 0
        ne = 0
        for i in range(n):
            v = y[t, i]
            m = -v if v < 0 else v
            mag[i] = m
            h = 1 if v < 0 else 0
            if h:
                s1 ^= exp[i]
                s3 ^= exp[_mod255(3 * i)]
            if h != tx[t, i]:
                ne += 1
        n_errors[t] = ne
        for g in range(n_gam):
            c = 0
            for i in range(n):
                if mag[i] <= gamma_grid[g]:
                    c += 1
            counts[t, g] = c

        smallest_k(mag, k_sel, lrp)
        for r in range(n_store):
            sorted_mag[t, r] = mag[lrp[r]]
        for r in range(k_sel):
            a1[r] = exp[lrp[r]]
            a3[r] = exp[_mod255(3 * lrp[r])]

        # ---- Chase-2 oracle over P = 0..p_max -------------------------------
        if p_max >= 0:
            emask = 0
            n_in = 0
            for r in range(p_max):
                p = lrp[r]
                hbit = 1 if y[t, p] < 0 else 0
                if hbit != tx[t, p]:
                    emask |= 1 << r
                    n_in += 1
            n_out_err = ne - n_in
            best = np.inf
            best_ok = False
            have = False
            next_p = 0
            for j in range(n_chase):
                if j == 0:
                    syn1[0] = 0
                    syn3[0] = 0
                else:
                    low = j & (-j)
                    b = 0
                    while (1 << b) != low:
                        b += 1
                    syn1[j] = syn1[j ^ low] ^ a1[b]
                    syn3[j] = syn3[j ^ low] ^ a3[b]
                nerr = bd_from_syndromes(s1 ^ syn1[j], s3 ^ syn3[j], exp, log, roots, bd)
                if nerr >= 0:
                    fmask = j
                    n_fout = 0
                    out_ok = True
                    nf = 0
                    for q in range(nerr):
                        e = bd[q]
                        inside = -1
                        for r in range(p_max):
                            if lrp[r] == e:
                                inside = r
                                break
                        if inside >= 0:
                            fmask ^= 1 << inside
                        else:
                            fpos[nf] = e
                            nf += 1
                            n_fout += 1
                            hbit = 1 if y[t, e] < 0 else 0
                            if hbit == tx[t, e]:
                                out_ok = False
                    for r in range(p_max):
                        if (fmask >> r) & 1:
                            fpos[nf] = lrp[r]
                            nf += 1
                    d = _sorted_sum(mag, fpos, nf)
                    if not have or d < best:
                        have = True
                        best = d
                        best_ok = out_ok and fmask == emask and n_fout == n_out_err
                if j == (1 << next_p) - 1:
                    minp_mask[t, next_p] = have and best_ok
                    next_p += 1

        # ---- ORBGRAND oracle over the whole book ------------------------------
        if n_pat > 0:
            if s1 == 0 and s3 == 0:
                orb_any[t] = 0
            else:
                orb_any[t] = -1
                for i in range(n_pat):
                    p1 = 0
                    p3 = 0
                    for q in range(orb_lengths[i]):
                        r = orb_parts[i, q]
                        p1 ^= a1[r]
                        p3 ^= a3[r]
                    if p1 == s1 and p3 == s3:
                        orb_any[t] = i + 1
                        break
            orb_true[t] = -1
            if ne == 0:
                orb_true[t] = 0
            elif ne <= orb_rank:
                m = 0
                hits = 0
                for r in range(orb_rank):
                    p = lrp[r]
                    hbit = 1 if y[t, p] < 0 else 0
                    if hbit != tx[t, p]:
                        m |= 1 << r
                        hits += 1
                if hits == ne:
                    k = np.searchsorted(orb_mask_sorted, m)
                    if k < orb_mask_sorted.size and orb_mask_sorted[k] == m:
                        orb_true[t] = orb_mask_index[k] + 1


def book_arrays(book):
    """Kernel-ready views of a pattern book (or empty arrays)."""
    if book is None or len(book) == 0:
        empty = np.zeros((0, 1), dtype=np.int32)
        return empty, np.zeros(0, dtype=np.int32), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), 0
    parts, lengths = book.padded
    masks = np.zeros(len(book), dtype=np.int64)
    for i, p in enumerate(book.patterns):
        masks[i] = sum(1 << (j - 1) for j in p)
    order = np.argsort(masks, kind="stable")
    return parts, lengths, masks[order], order.astype(np.int64), book.max_part
