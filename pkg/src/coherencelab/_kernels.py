"""Compiled inner loops for packed GF(2) rows and stabilizer tableaux.

All bit vectors are stored as rows of ``uint64`` words, bit ``q`` of a row
living in word ``q >> 6`` at position ``q & 63``.

Tableau layout: arrays ``X, Z`` of shape ``(2n, W)`` and sign bits ``R`` of
shape ``(2n,)``.  Rows ``i`` and ``n + i`` form a symplectic pair.  For
``i < ns`` the pair is (stabilizer, destabilizer); for ``i >= ns`` it is a
pair of logical operators of the mixed state.  Only stabilizer signs carry
meaning.
"""
from __future__ import annotations

import numpy as np
from numba import njit

U0 = np.uint64(0)
U1 = np.uint64(1)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1 = np.uint64(1)
_S2 = np.uint64(2)
_S4 = np.uint64(4)
_S56 = np.uint64(56)

EV_CNOT = 0
EV_MEASURE = 1
EV_PHASE = 2
EV_ERASE = 3

ERASE_MAINTAIN = 0
ERASE_DESTROY = 1
ERASE_FORGET = 2


@njit(cache=True, inline="always")
def popcount(v):
    v = v - ((v >> _S1) & _M1)
    v = (v & _M2) + ((v >> _S2) & _M2)
    v = (v + (v >> _S4)) & _M4
    return np.int64((v * _H01) >> _S56)


@njit(cache=True, inline="always")
def getbit(A, r, q):
    return (A[r, q >> 6] >> np.uint64(q & 63)) & U1


# ---------------------------------------------------------------- GF(2) rows

@njit(cache=True)
def echelon_count(M, ncols, first_counted):
    """Forward-eliminate ``M`` in place over columns ``0..ncols-1``.

    Returns the number of pivots found in columns ``>= first_counted``.
    Pivot rows are the lowest-index candidates.
    """
    nrows, W = M.shape
    rank = 0
    counted = 0
    for col in range(ncols):
        if rank == nrows:
            break
        w = col >> 6
        b = np.uint64(col & 63)
        piv = -1
        for r in range(rank, nrows):
            if (M[r, w] >> b) & U1:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(W):
                t = M[piv, k]
                M[piv, k] = M[rank, k]
                M[rank, k] = t
        for r in range(piv + 1, nrows):
            if (M[r, w] >> b) & U1:
                for k in range(w, W):
                    M[r, k] ^= M[rank, k]
        if col >= first_counted:
            counted += 1
        rank += 1
    return counted


@njit(cache=True)
def pivot_columns(M, ncols):
    """Forward-eliminate ``M`` in place; return pivot column of each row (-1 if none)."""
    nrows, W = M.shape
    piv_of = np.full(nrows, -1, dtype=np.int64)
    rank = 0
    for col in range(ncols):
        if rank == nrows:
            break
        w = col >> 6
        b = np.uint64(col & 63)
        piv = -1
        for r in range(rank, nrows):
            if (M[r, w] >> b) & U1:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(W):
                t = M[piv, k]
                M[piv, k] = M[rank, k]
                M[rank, k] = t
        for r in range(piv + 1, nrows):
            if (M[r, w] >> b) & U1:
                for k in range(w, W):
                    M[r, k] ^= M[rank, k]
        piv_of[rank] = col
        rank += 1
    return piv_of


@njit(cache=True)
def rref_logged(M, order, log):
    """Reduced row echelon form of ``M`` in place w.r.t. column ``order``.

    ``log`` receives rows ``(kind, a, b)``: kind 0 swaps rows a and b, kind 1
    adds row b into row a.  Returns ``(rank, n_log)``.
    """
    nrows, W = M.shape
    rank = 0
    nlog = 0
    for col in order:
        if rank == nrows:
            break
        w = col >> 6
        b = np.uint64(col & 63)
        piv = -1
        for r in range(rank, nrows):
            if (M[r, w] >> b) & U1:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for k in range(W):
                t = M[piv, k]
                M[piv, k] = M[rank, k]
                M[rank, k] = t
            log[nlog, 0] = 0
            log[nlog, 1] = rank
            log[nlog, 2] = piv
            nlog += 1
        for r in range(nrows):
            if r != rank and (M[r, w] >> b) & U1:
                for k in range(W):
                    M[r, k] ^= M[rank, k]
                log[nlog, 0] = 1
                log[nlog, 1] = r
                log[nlog, 2] = rank
                nlog += 1
        rank += 1
    return rank, nlog


# ------------------------------------------------------------ tableau rows

@njit(cache=True, inline="always")
def _anti(X, Z, r, px, pz):
    acc = U0
    for w in range(X.shape[1]):
        acc ^= (X[r, w] & pz[w]) ^ (Z[r, w] & px[w])
    return popcount(acc) & 1


@njit(cache=True)
def rowmul(X, Z, R, h, i):
    """Row ``h`` <- P_h P_i with the sign fixed by the i-phase bookkeeping."""
    e = 0
    for w in range(X.shape[1]):
        x1 = X[h, w]
        z1 = Z[h, w]
        x2 = X[i, w]
        z2 = Z[i, w]
        x3 = x1 ^ x2
        z3 = z1 ^ z2
        e += popcount(x1 & z1) + popcount(x2 & z2) - popcount(x3 & z3)
        e += 2 * popcount(z1 & x2)
        X[h, w] = x3
        Z[h, w] = z3
    e += 2 * (np.int64(R[h]) + np.int64(R[i]))
    e %= 4
    R[h] = np.uint8((e >> 1) & 1)


@njit(cache=True)
def _copy_row(X, Z, R, dst, src):
    for w in range(X.shape[1]):
        X[dst, w] = X[src, w]
        Z[dst, w] = Z[src, w]
    R[dst] = R[src]


@njit(cache=True)
def _swap_rows(X, Z, R, a, b):
    for w in range(X.shape[1]):
        t = X[a, w]
        X[a, w] = X[b, w]
        X[b, w] = t
        t = Z[a, w]
        Z[a, w] = Z[b, w]
        Z[b, w] = t
    t8 = R[a]
    R[a] = R[b]
    R[b] = t8


@njit(cache=True)
def _swap_pairs(X, Z, R, a, b):
    if a == b:
        return
    n = X.shape[0] // 2
    _swap_rows(X, Z, R, a, b)
    _swap_rows(X, Z, R, n + a, n + b)


# ------------------------------------------------------------ gates

@njit(cache=True)
def tab_cnot(X, Z, R, c, t):
    wc = c >> 6
    bc = np.uint64(c & 63)
    wt = t >> 6
    bt = np.uint64(t & 63)
    for r in range(X.shape[0]):
        xc = (X[r, wc] >> bc) & U1
        zt = (Z[r, wt] >> bt) & U1
        if xc == U0 and zt == U0:
            continue
        xt = (X[r, wt] >> bt) & U1
        zc = (Z[r, wc] >> bc) & U1
        R[r] ^= np.uint8(xc & zt & (xt ^ zc ^ U1))
        X[r, wt] ^= xc << bt
        Z[r, wc] ^= zt << bc


@njit(cache=True)
def tab_phase(X, Z, R, q):
    w = q >> 6
    b = np.uint64(q & 63)
    for r in range(X.shape[0]):
        x = (X[r, w] >> b) & U1
        if x == U0:
            continue
        z = (Z[r, w] >> b) & U1
        R[r] ^= np.uint8(z)
        Z[r, w] ^= U1 << b


@njit(cache=True)
def tab_hadamard(X, Z, R, q):
    w = q >> 6
    b = np.uint64(q & 63)
    for r in range(X.shape[0]):
        x = (X[r, w] >> b) & U1
        z = (Z[r, w] >> b) & U1
        R[r] ^= np.uint8(x & z)
        if x != z:
            X[r, w] ^= U1 << b
            Z[r, w] ^= U1 << b


@njit(cache=True)
def tab_flip_x(X, Z, R, q):
    """Conjugate by Z_q: every row with an X or Y at ``q`` changes sign."""
    w = q >> 6
    b = np.uint64(q & 63)
    for r in range(X.shape[0]):
        R[r] ^= np.uint8((X[r, w] >> b) & U1)


# ------------------------------------------------------------ measurement

@njit(cache=True)
def tab_classify(X, Z, ns, px, pz):
    """Return 3, 2 or 1 for state-changing, entropy-reducing, no-effect."""
    n = X.shape[0] // 2
    for i in range(ns):
        if _anti(X, Z, i, px, pz):
            return 3
    for i in range(ns, n):
        if _anti(X, Z, i, px, pz) or _anti(X, Z, n + i, px, pz):
            return 2
    return 1


@njit(cache=True)
def tab_measure(X, Z, R, ns, px, pz, bit):
    """Measure the unsigned Pauli (px, pz).

    ``bit`` is used as the outcome when it is not determined.  Returns
    ``(case, outcome, new_ns)`` with case 1 no-effect, 2 entropy-reducing,
    3 state-changing.  Outcome b means eigenvalue (-1)^b.
    """
    n = X.shape[0] // 2
    W = X.shape[1]
    p = -1
    for i in range(ns):
        if _anti(X, Z, i, px, pz):
            p = i
            break
    if p >= 0:
        for r in range(2 * n):
            if r != p and r != n + p and _anti(X, Z, r, px, pz):
                rowmul(X, Z, R, r, p)
        _copy_row(X, Z, R, n + p, p)
        for w in range(W):
            X[p, w] = px[w]
            Z[p, w] = pz[w]
        R[p] = np.uint8(bit)
        return 3, bit, ns
    u = -1
    for i in range(ns, n):
        if _anti(X, Z, i, px, pz):
            u = i
            break
        if _anti(X, Z, n + i, px, pz):
            u = n + i
            break
    if u >= 0:
        pair = u if u < n else u - n
        v = n + pair if u < n else pair
        for r in range(2 * n):
            if r != u and r != v and _anti(X, Z, r, px, pz):
                rowmul(X, Z, R, r, u)
        if u == pair:
            _copy_row(X, Z, R, n + pair, pair)
        for w in range(W):
            X[pair, w] = px[w]
            Z[pair, w] = pz[w]
        R[pair] = np.uint8(bit)
        _swap_pairs(X, Z, R, pair, ns)
        return 2, bit, ns + 1
    # deterministic: product of stabilizers whose destabilizer anticommutes
    sx = np.zeros(W, dtype=np.uint64)
    sz = np.zeros(W, dtype=np.uint64)
    e = 0
    for i in range(ns):
        if _anti(X, Z, n + i, px, pz):
            for w in range(W):
                x1 = sx[w]
                z1 = sz[w]
                x2 = X[i, w]
                z2 = Z[i, w]
                x3 = x1 ^ x2
                z3 = z1 ^ z2
                e += popcount(x1 & z1) + popcount(x2 & z2) - popcount(x3 & z3)
                e += 2 * popcount(z1 & x2)
                sx[w] = x3
                sz[w] = z3
            e += 2 * np.int64(R[i])
    e %= 4
    return 1, (e >> 1) & 1, ns


@njit(cache=True)
def tab_dephase(X, Z, R, ns, px, pz):
    """Apply rho -> (rho + P rho P)/2; returns the new stabilizer count."""
    n = X.shape[0] // 2
    p = -1
    for i in range(ns):
        if _anti(X, Z, i, px, pz):
            p = i
            break
    if p < 0:
        return ns
    for j in range(ns):
        if j != p and _anti(X, Z, j, px, pz):
            rowmul(X, Z, R, j, p)
            rowmul(X, Z, R, n + p, n + j)
    _swap_pairs(X, Z, R, p, ns - 1)
    return ns - 1


@njit(cache=True)
def _site_pauli(px, pz, q, axis):
    # axis 0 X, 1 Y, 2 Z
    w = q >> 6
    b = U1 << np.uint64(q & 63)
    if axis != 2:
        px[w] |= b
    if axis != 0:
        pz[w] |= b


@njit(cache=True)
def _clear(px, pz, q):
    w = q >> 6
    px[w] = U0
    pz[w] = U0


@njit(cache=True)
def tab_measure_site(X, Z, R, ns, q, axis, bit, px, pz):
    _site_pauli(px, pz, q, axis)
    case, out, ns = tab_measure(X, Z, R, ns, px, pz, bit)
    _clear(px, pz, q)
    return case, out, ns


@njit(cache=True)
def tab_erase(X, Z, R, ns, q, kind, bits, px, pz):
    """Bit eraser on site ``q``; ``bits`` supplies two candidate outcomes."""
    if kind == ERASE_MAINTAIN:
        _, _, ns = tab_measure_site(X, Z, R, ns, q, 2, bits & 1, px, pz)
        _, out, ns = tab_measure_site(X, Z, R, ns, q, 0, (bits >> 1) & 1, px, pz)
        if out:
            tab_flip_x(X, Z, R, q)
    elif kind == ERASE_DESTROY:
        _, out, ns = tab_measure_site(X, Z, R, ns, q, 0, bits & 1, px, pz)
        if out:
            tab_flip_x(X, Z, R, q)
    else:
        # trace out the qubit, then prepare +X
        _site_pauli(px, pz, q, 0)
        ns = tab_dephase(X, Z, R, ns, px, pz)
        _clear(px, pz, q)
        _site_pauli(px, pz, q, 2)
        ns = tab_dephase(X, Z, R, ns, px, pz)
        _clear(px, pz, q)
        _, _, ns = tab_measure_site(X, Z, R, ns, q, 0, 0, px, pz)
    return ns


@njit(cache=True)
def run_events(X, Z, R, ns, ev_type, ev_a, ev_b, ev_bits, erase_kind):
    """Apply an event stream to a tableau; returns the new stabilizer count."""
    W = X.shape[1]
    px = np.zeros(W, dtype=np.uint64)
    pz = np.zeros(W, dtype=np.uint64)
    for e in range(ev_type.shape[0]):
        t = ev_type[e]
        if t == EV_CNOT:
            tab_cnot(X, Z, R, ev_a[e], ev_b[e])
        elif t == EV_MEASURE:
            _, _, ns = tab_measure_site(X, Z, R, ns, ev_a[e], ev_b[e], ev_bits[e] & 1, px, pz)
        elif t == EV_PHASE:
            tab_phase(X, Z, R, ev_a[e])
        else:
            ns = tab_erase(X, Z, R, ns, ev_a[e], erase_kind, ev_bits[e], px, pz)
    return ns


@njit(cache=True)
def affine_events(M, off, ev_type, ev_a, ev_b):
    """Replay CNOTs and erasers on an affine map x -> M x + off (rows = outputs)."""
    W = M.shape[1]
    for e in range(ev_type.shape[0]):
        t = ev_type[e]
        if t == EV_CNOT:
            c = ev_a[e]
            tg = ev_b[e]
            for k in range(W):
                M[c, k] ^= M[tg, k]
            off[c] ^= off[tg]
        elif t == EV_ERASE:
            q = ev_a[e]
            for k in range(W):
                M[q, k] = U0
            off[q] = 0


# ------------------------------------------------------------ restrictions

@njit(cache=True)
def gather_sites(X, Z, ns, sites):
    """Pack the (x, z) bits of ``sites`` from the stabilizer rows.

    Column ``2k`` holds x of ``sites[k]`` and ``2k + 1`` its z bit.
    """
    m = sites.shape[0]
    W = (2 * m + 63) // 64
    M = np.zeros((ns, W), dtype=np.uint64)
    for r in range(ns):
        for k in range(m):
            q = sites[k]
            c = 2 * k
            M[r, c >> 6] |= getbit(X, r, q) << np.uint64(c & 63)
            c += 1
            M[r, c >> 6] |= getbit(Z, r, q) << np.uint64(c & 63)
    return M


@njit(cache=True)
def gather_conjugate(X, Z, ns, lead_sites, sites, axes):
    """Rows = stabilizers; leading columns are full (x, z) bits of
    ``lead_sites``, trailing columns the anticommutation bit with the basis
    axis of each of ``sites`` (0 X, 1 Y, 2 Z)."""
    ml = lead_sites.shape[0]
    m = sites.shape[0]
    ncols = 2 * ml + m
    W = (ncols + 63) // 64
    M = np.zeros((ns, W), dtype=np.uint64)
    for r in range(ns):
        for k in range(ml):
            q = lead_sites[k]
            c = 2 * k
            M[r, c >> 6] |= getbit(X, r, q) << np.uint64(c & 63)
            c += 1
            M[r, c >> 6] |= getbit(Z, r, q) << np.uint64(c & 63)
        for k in range(m):
            q = sites[k]
            a = axes[k]
            x = getbit(X, r, q)
            z = getbit(Z, r, q)
            if a == 0:
                bit = z
            elif a == 2:
                bit = x
            else:
                bit = x ^ z
            c = 2 * ml + k
            M[r, c >> 6] |= bit << np.uint64(c & 63)
    return M


@njit(cache=True)
def region_rank(X, Z, ns, sites):
    M = gather_sites(X, Z, ns, sites)
    return echelon_count(M, 2 * sites.shape[0], 0)


@njit(cache=True)
def interval_support_counts(X, Z, ns, order):
    """For sites listed in ``order`` (nearest first), return ``cnt`` where
    ``cnt[l]`` is the dimension of the stabilizer subgroup supported on the
    first ``l`` sites.  Sites absent from ``order`` must be excluded by the
    caller by listing them beyond the last counted position.
    """
    m = order.shape[0]
    rev = order[::-1].copy()
    M = gather_sites(X, Z, ns, rev)
    piv = pivot_columns(M, 2 * m)
    cnt = np.zeros(m + 1, dtype=np.int64)
    for r in range(ns):
        if piv[r] < 0:
            continue
        k = piv[r] >> 1
        # leading site of this row sits at position m-1-k in ``order``
        pos = m - 1 - k
        cnt[pos + 1] += 1
    for l in range(1, m + 1):
        cnt[l] += cnt[l - 1]
    return cnt
