"""Pure-numpy twins of the compiled kernels (same signatures, same results
up to summation order)."""
from __future__ import annotations

import numpy as np


def _roots(n, m):
    pos = m > 0.0
    return np.sqrt(np.divide(n, m, out=np.zeros_like(m), where=pos)), pos


def contig_pair(bi, si, bj, sj, cumN, cumM):
    a = bi[: si + 1]
    b = bj[: sj + 1]
    g = np.union1d(a, b)
    u, v = g[:-1], g[1:]
    rJ, pos = _roots(cumN[v] - cumN[u], cumM[v] - cumM[u])
    m = np.where(pos, cumM[v] - cumM[u], 0.0)
    ra, _ = _roots(cumN[a[1:]] - cumN[a[:-1]], cumM[a[1:]] - cumM[a[:-1]])
    rb, _ = _roots(cumN[b[1:]] - cumN[b[:-1]], cumM[b[1:]] - cumM[b[:-1]])
    ri = ra[np.searchsorted(a, u, side="right") - 1]
    rj = rb[np.searchsorted(b, u, side="right") - 1]
    return (float(np.sum((ri - rJ) ** 2 * m)), float(np.sum((rj - rJ) ** 2 * m)),
            float(np.sum((ri - rj) ** 2 * m)))


def label_pair(li, lj, cj, Na, Ma, ri, rj, accN=None, accM=None, mark=None, touched=None):
    codes = li.astype(np.int64) * cj + lj
    _, first, inv = np.unique(codes, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    order = np.argsort(first, kind="stable")
    n = np.bincount(inv, weights=Na)[order]
    m = np.bincount(inv, weights=Ma)[order]
    rJ, pos = _roots(n, m)
    m = np.where(pos, m, 0.0)
    cells = codes[first[order]]
    x = ri[cells // cj]
    y = rj[cells % cj]
    return (float(np.sum((x - rJ) ** 2 * m)), float(np.sum((y - rJ) ** 2 * m)),
            float(np.sum((x - y) ** 2 * m)))


def contig_rows(bounds, sizes, cumN, cumM, rows, H, HJ):
    F = bounds.shape[0]
    for i in rows:
        for j in range(i + 1, F):
            hij, hji, hab = contig_pair(bounds[i], sizes[i], bounds[j], sizes[j], cumN, cumM)
            HJ[i, j], HJ[j, i] = hij, hji
            H[i, j] = H[j, i] = hab


def label_rows(labels, sizes, Na, Ma, roots, rows, H, HJ):
    F = labels.shape[0]
    for i in rows:
        for j in range(i + 1, F):
            hij, hji, hab = label_pair(labels[i], labels[j], sizes[j], Na, Ma, roots[i], roots[j])
            HJ[i, j], HJ[j, i] = hij, hji
            H[i, j] = H[j, i] = hab


def _pruned(pair, pens, order, targets, tau, slack, D, elim):
    for i in targets:
        d, out = 0.0, False
        for j in order:
            if 16.0 * (pens[j] - pens[i]) >= slack:
                break
            if j == i:
                continue
            hij, hji, hab = pair(i, j)
            T = (hij - hji) + 16.0 * (pens[i] - pens[j])
            if T > 0.0 and hab > d:
                d = hab
                if d > tau:
                    out = True
                    break
        D[i], elim[i] = d, out


def contig_pruned(bounds, sizes, cumN, cumM, pens, order, targets, tau, slack, D, elim):
    def pair(i, j):
        return contig_pair(bounds[i], sizes[i], bounds[j], sizes[j], cumN, cumM)
    _pruned(pair, pens, order, targets, tau, slack, D, elim)


def label_pruned(labels, sizes, Na, Ma, roots, pens, order, targets, tau, slack, D, elim):
    def pair(i, j):
        return label_pair(labels[i], labels[j], sizes[j], Na, Ma, roots[i], roots[j])
    _pruned(pair, pens, order, targets, tau, slack, D, elim)


def contig_risk(bounds, sizes, cumN, cumM, cumR, cumS, rows, out):
    cols = np.arange(bounds.shape[1] - 1)
    b = bounds[rows].astype(np.int64)
    u, v = b[:, :-1], b[:, 1:]
    live = cols[None, :] < sizes[rows][:, None]
    n = np.where(live, cumN[v] - cumN[u], 0.0)
    r, pos = _roots(n, np.where(live, cumM[v] - cumM[u], 0.0))
    terms = np.where(pos, n, 0.0) - 2.0 * r * (cumR[v] - cumR[u]) + np.where(live, cumS[v] - cumS[u], 0.0)
    out[rows] = terms.sum(axis=1)


def label_cell_sums(labels, sizes, vals, rows, out):
    for i in rows:
        out[i, :] = 0.0
        out[i, : sizes[i]] = np.bincount(labels[i], weights=vals, minlength=sizes[i])
