"""Compiled kernels. Every loop here has a vectorized twin in ``_numpy``.

Contiguous families: a model is a row of atom-grid breakpoints ``b`` with
``s`` cells; cell sums come from cumulative atom sums ``cumN``, ``cumM``.
Label families: a model is a row of atom labels with precomputed cell
root levels ``r`` (``sqrt(N/M)``, 0 on empty cells).

Pair kernels return ``(h_ij, h_ji, h_ab)``: the squared distances of
``s_i`` and ``s_j`` to the histogram on the join, and between each other.
Join cells are visited in the same order whichever model comes first, so
swapping the arguments swaps ``h_ij`` and ``h_ji`` bit for bit.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(nogil=True, cache=True)


@njit(**_JIT)
def _root(cumN, cumM, u, v):
    m = cumM[v] - cumM[u]
    if m > 0.0:
        return np.sqrt((cumN[v] - cumN[u]) / m)
    return 0.0


@njit(**_JIT)
def contig_pair(bi, si, bj, sj, cumN, cumM):
    p = 0
    q = 0
    u = bi[0]
    end = bi[si]
    ri = _root(cumN, cumM, bi[0], bi[1])
    rj = _root(cumN, cumM, bj[0], bj[1])
    hij = 0.0
    hji = 0.0
    hab = 0.0
    while u < end:
        a = bi[p + 1]
        b = bj[q + 1]
        v = a if a < b else b
        m = cumM[v] - cumM[u]
        if m > 0.0:
            rJ = np.sqrt((cumN[v] - cumN[u]) / m)
            d = ri - rJ
            hij += d * d * m
            d = rj - rJ
            hji += d * d * m
            d = ri - rj
            hab += d * d * m
        if a == v:
            p += 1
            if p < si:
                ri = _root(cumN, cumM, bi[p], bi[p + 1])
        if b == v:
            q += 1
            if q < sj:
                rj = _root(cumN, cumM, bj[q], bj[q + 1])
        u = v
    return hij, hji, hab


@njit(**_JIT)
def label_pair(li, lj, cj, Na, Ma, ri, rj, accN, accM, mark, touched):
    """``accN``, ``accM`` (float) and ``mark`` (bool) are cleared scratch
    arrays of size ``>= ci * cj``; ``touched`` holds one slot per atom.
    Scratch is cleared again on exit."""
    nt = 0
    for a in range(li.shape[0]):
        code = li[a] * cj + lj[a]
        if not mark[code]:
            mark[code] = True
            touched[nt] = code
            nt += 1
        accN[code] += Na[a]
        accM[code] += Ma[a]
    hij = 0.0
    hji = 0.0
    hab = 0.0
    for t in range(nt):
        code = touched[t]
        m = accM[code]
        if m > 0.0:
            rJ = np.sqrt(accN[code] / m)
            x = ri[code // cj]
            y = rj[code % cj]
            d = x - rJ
            hij += d * d * m
            d = y - rJ
            hji += d * d * m
            d = x - y
            hab += d * d * m
        accN[code] = 0.0
        accM[code] = 0.0
        mark[code] = False
    return hij, hji, hab


@njit(**_JIT)
def _scratch(sizes, n_atoms):
    cmax = 0
    for i in range(sizes.shape[0]):
        if sizes[i] > cmax:
            cmax = sizes[i]
    size = cmax * cmax
    return (np.zeros(size), np.zeros(size), np.zeros(size, dtype=np.bool_),
            np.empty(n_atoms, dtype=np.int64))


@njit(**_JIT)
def contig_rows(bounds, sizes, cumN, cumM, rows, H, HJ):
    F = bounds.shape[0]
    for t in range(rows.shape[0]):
        i = rows[t]
        for j in range(i + 1, F):
            hij, hji, hab = contig_pair(bounds[i], sizes[i], bounds[j], sizes[j], cumN, cumM)
            HJ[i, j] = hij
            HJ[j, i] = hji
            H[i, j] = hab
            H[j, i] = hab


@njit(**_JIT)
def label_rows(labels, sizes, Na, Ma, roots, rows, H, HJ):
    F = labels.shape[0]
    accN, accM, mark, touched = _scratch(sizes, labels.shape[1])
    for t in range(rows.shape[0]):
        i = rows[t]
        for j in range(i + 1, F):
            hij, hji, hab = label_pair(labels[i], labels[j], sizes[j], Na, Ma,
                                       roots[i], roots[j], accN, accM, mark, touched)
            HJ[i, j] = hij
            HJ[j, i] = hji
            H[i, j] = hab
            H[j, i] = hab


@njit(**_JIT)
def contig_pruned(bounds, sizes, cumN, cumM, pens, order, targets, tau, slack, D, elim):
    """Exact ``D(i)`` for each target unless it provably exceeds ``tau``.

    Candidates are visited by increasing penalty; once ``16 (pen_j - pen_i)``
    reaches ``slack`` (an upper bound on the H^2 difference) no later model
    can reject ``i``.
    """
    for t in range(targets.shape[0]):
        i = targets[t]
        d = 0.0
        out = False
        for u in range(order.shape[0]):
            j = order[u]
            if 16.0 * (pens[j] - pens[i]) >= slack:
                break
            if j == i:
                continue
            hij, hji, hab = contig_pair(bounds[i], sizes[i], bounds[j], sizes[j], cumN, cumM)
            T = (hij - hji) + 16.0 * (pens[i] - pens[j])
            if T > 0.0 and hab > d:
                d = hab
                if d > tau:
                    out = True
                    break
        D[i] = d
        elim[i] = out


@njit(**_JIT)
def label_pruned(labels, sizes, Na, Ma, roots, pens, order, targets, tau, slack, D, elim):
    accN, accM, mark, touched = _scratch(sizes, labels.shape[1])
    for t in range(targets.shape[0]):
        i = targets[t]
        d = 0.0
        out = False
        for u in range(order.shape[0]):
            j = order[u]
            if 16.0 * (pens[j] - pens[i]) >= slack:
                break
            if j == i:
                continue
            hij, hji, hab = label_pair(labels[i], labels[j], sizes[j], Na, Ma,
                                       roots[i], roots[j], accN, accM, mark, touched)
            T = (hij - hji) + 16.0 * (pens[i] - pens[j])
            if T > 0.0 and hab > d:
                d = hab
                if d > tau:
                    out = True
                    break
        D[i] = d
        elim[i] = out


@njit(**_JIT)
def contig_risk(bounds, sizes, cumN, cumM, cumR, cumS, rows, out):
    """``int (sqrt(s_i) - sqrt(s))^2 dM`` per model, from atom sums of
    ``N``, ``M``, ``int sqrt(s) dM`` and ``int s dM``."""
    for t in range(rows.shape[0]):
        i = rows[t]
        b = bounds[i]
        acc = 0.0
        for c in range(sizes[i]):
            u = b[c]
            v = b[c + 1]
            n = cumN[v] - cumN[u]
            m = cumM[v] - cumM[u]
            r = np.sqrt(n / m) if m > 0.0 else 0.0
            acc += (n if m > 0.0 else 0.0) - 2.0 * r * (cumR[v] - cumR[u]) + (cumS[v] - cumS[u])
        out[i] = acc


@njit(**_JIT)
def label_cell_sums(labels, sizes, vals, rows, out):
    for t in range(rows.shape[0]):
        i = rows[t]
        for c in range(sizes[i]):
            out[i, c] = 0.0
        for a in range(labels.shape[1]):
            out[i, labels[i, a]] += vals[a]
