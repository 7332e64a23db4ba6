"""Hot loops of the selection procedure.

Two interchangeable backends exist: ``numba`` (compiled, default) and
``numpy``. Setting ``PHEST_DISABLE_NUMBA=1`` selects the numpy one at
import time; :func:`get_backend` returns either explicitly.

Work is split into fixed index chunks and run on a thread pool. Each pair
or model is computed by exactly one chunk, so results do not depend on the
number of workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from types import ModuleType

import numpy as np

from ..errors import SupportError

_TRUTHY = {"1", "true", "yes", "on"}


def numba_disabled() -> bool:
    return os.environ.get("PHEST_DISABLE_NUMBA", "").strip().lower() in _TRUTHY


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        name = "numpy" if numba_disabled() else "numba"
    if name == "numpy":
        from . import _numpy
        return _numpy
    if name == "numba":
        from . import _numba
        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")


def backend_name(mod: ModuleType | None = None) -> str:
    mod = get_backend() if mod is None else mod
    return mod.__name__.rsplit("._", 1)[-1]


def run_chunks(fn, items: np.ndarray, workers: int = 1, n_chunks: int | None = None,
               strided: bool = True) -> None:
    """Call ``fn(chunk)`` on slices of ``items``; ``fn`` writes its own
    outputs. Strided slices balance triangular work; contiguous blocks keep
    memory access local when every item costs the same."""
    items = np.asarray(items, dtype=np.int64)
    if workers <= 1 or items.size < 2:
        fn(items)
        return
    n_chunks = n_chunks or 4 * workers
    if strided:
        chunks = [items[c::n_chunks] for c in range(n_chunks) if items[c::n_chunks].size]
    else:
        chunks = [c for c in np.array_split(items, n_chunks) if c.size]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for f in [pool.submit(fn, c) for c in chunks]:
            f.result()


def check_support(N: np.ndarray, M: np.ndarray) -> None:
    """Positive N-mass on a null M-set breaks the model assumptions."""
    bad = np.flatnonzero((N > 0) & (M <= 0))
    if bad.size:
        raise SupportError(f"{bad.size} atom(s) carry N-mass but no M-mass (first: atom {bad[0]})")


class PairContext:
    """Observation-dependent view of a packed family.

    Parameters
    ----------
    packed : PackedFamily
    N, M : ndarray
        Atom masses of the observed measures.
    backend : str, optional
        ``"numba"`` or ``"numpy"``; defaults to the environment choice.
    """

    def __init__(self, packed, N, M, backend: str | None = None):
        self.packed = packed
        self.N = np.ascontiguousarray(N, dtype=np.float64)
        self.M = np.ascontiguousarray(M, dtype=np.float64)
        if self.N.shape != (packed.n_atoms,) or self.M.shape != (packed.n_atoms,):
            raise ValueError("atom masses do not match the family's atom grid")
        check_support(self.N, self.M)
        self.mod = get_backend(backend)
        self.sizes = np.ascontiguousarray(packed.sizes, dtype=np.int64)
        if packed.contiguous:
            self.bounds = np.ascontiguousarray(packed.bounds)
            self.cumN = _cum(self.N)
            self.cumM = _cum(self.M)
        else:
            self.labels = np.ascontiguousarray(packed.labels, dtype=np.int64)
            cN = self.cell_sums_all(self.N)
            cM = self.cell_sums_all(self.M)
            self.roots = np.sqrt(np.divide(cN, cM, out=np.zeros_like(cM), where=cM > 0))

    @property
    def total(self) -> float:
        return float(np.sum(self.N))

    def __len__(self) -> int:
        return len(self.sizes)

    # per-model quantities ----------------------------------------------------
    def cell_sums_all(self, vals, workers: int = 1) -> np.ndarray:
        out = np.zeros((len(self.sizes), int(self.sizes.max())))
        vals = np.ascontiguousarray(vals, dtype=np.float64)
        if self.packed.contiguous:
            cum = _cum(vals)
            for i in range(len(self.sizes)):
                b = self.bounds[i, : self.sizes[i] + 1]
                out[i, : self.sizes[i]] = cum[b[1:]] - cum[b[:-1]]
            return out
        fn = lambda rows: self.mod.label_cell_sums(self.labels, self.sizes, vals, rows, out)
        run_chunks(fn, np.arange(len(self.sizes)), workers)
        return out

    def cells(self, i: int):
        """``(N(I), M(I))`` over the cells of model ``i``."""
        s = int(self.sizes[i])
        if self.packed.contiguous:
            b = self.bounds[i, : s + 1]
            return self.cumN[b[1:]] - self.cumN[b[:-1]], self.cumM[b[1:]] - self.cumM[b[:-1]]
        lab = self.labels[i]
        return (np.bincount(lab, weights=self.N, minlength=s),
                np.bincount(lab, weights=self.M, minlength=s))

    def levels(self, i: int) -> np.ndarray:
        n, m = self.cells(i)
        return np.divide(n, m, out=np.zeros_like(m), where=m > 0)

    def risk(self, R, S, workers: int = 1) -> np.ndarray:
        """``int (sqrt(s_m) - sqrt(s))^2 dM`` for every model, given atom
        integrals ``R = int sqrt(s) dM`` and ``S = int s dM``."""
        out = np.empty(len(self.sizes))
        R = np.ascontiguousarray(R, dtype=np.float64)
        S = np.ascontiguousarray(S, dtype=np.float64)
        if self.packed.contiguous:
            cumR, cumS = _cum(R), _cum(S)
            fn = lambda rows: self.mod.contig_risk(self.bounds, self.sizes, self.cumN, self.cumM,
                                                   cumR, cumS, rows, out)
            run_chunks(fn, np.arange(len(self.sizes)), workers, strided=False)
            return out
        cN = self.cell_sums_all(self.N, workers)
        cR = self.cell_sums_all(R, workers)
        cS = self.cell_sums_all(S, workers)
        return np.sum(cN - 2.0 * self.roots * cR + cS, axis=1)

    # pairwise quantities -----------------------------------------------------
    def pair(self, i: int, j: int):
        """``(H^2(s_i, s_ij), H^2(s_j, s_ij), H^2(s_i, s_j))`` with ``s_ij``
        the histogram on the join."""
        if self.packed.contiguous:
            return self.mod.contig_pair(self.bounds[i], self.sizes[i], self.bounds[j],
                                        self.sizes[j], self.cumN, self.cumM)
        if not hasattr(self, "_scratch"):
            c = int(self.sizes.max())
            self._scratch = (np.zeros(c * c), np.zeros(c * c), np.zeros(c * c, dtype=np.bool_),
                             np.empty(self.packed.n_atoms, dtype=np.int64))
        return self.mod.label_pair(self.labels[i], self.labels[j], int(self.sizes[j]), self.N,
                                   self.M, self.roots[i], self.roots[j], *self._scratch)

    def matrices(self, workers: int = 1):
        """Full ``H`` (symmetric) and ``HJ`` (``HJ[i, j] = H^2(s_i, s_{i v j})``)."""
        F = len(self.sizes)
        H = np.zeros((F, F))
        HJ = np.zeros((F, F))
        if self.packed.contiguous:
            fn = lambda rows: self.mod.contig_rows(self.bounds, self.sizes, self.cumN, self.cumM,
                                                   rows, H, HJ)
        else:
            fn = lambda rows: self.mod.label_rows(self.labels, self.sizes, self.N, self.M,
                                                  self.roots, rows, H, HJ)
        run_chunks(fn, np.arange(F), workers)
        return H, HJ

    def pruned(self, pens, order, targets, tau: float, slack: float, workers: int = 1):
        """Exact ``D`` for ``targets`` unless it provably exceeds ``tau``."""
        F = len(self.sizes)
        pens = np.ascontiguousarray(pens, dtype=np.float64)
        order = np.ascontiguousarray(order, dtype=np.int64)
        D = np.zeros(F)
        elim = np.zeros(F, dtype=np.bool_)
        if self.packed.contiguous:
            fn = lambda rows: self.mod.contig_pruned(self.bounds, self.sizes, self.cumN, self.cumM,
                                                     pens, order, rows, tau, slack, D, elim)
        else:
            fn = lambda rows: self.mod.label_pruned(self.labels, self.sizes, self.N, self.M,
                                                    self.roots, pens, order, rows, tau, slack,
                                                    D, elim)
        run_chunks(fn, targets, workers)
        return D, elim


def family_bias(packed, R, S, M, chunk: int = 1 << 16) -> np.ndarray:
    """``inf_{t in S_m} int (sqrt(t) - sqrt(s))^2 dM`` for every model, from
    atom integrals ``R = int sqrt(s) dM``, ``S = int s dM`` and ``M``."""
    R, S, M = (np.ascontiguousarray(a, dtype=np.float64) for a in (R, S, M))
    F = len(packed)
    out = np.empty(F)
    if packed.contiguous:
        cR, cS, cM = _cum(R), _cum(S), _cum(M)
        width = packed.bounds.shape[1] - 1
        for lo in range(0, F, chunk):
            b = packed.bounds[lo:lo + chunk].astype(np.int64)
            u, v = b[:, :-1], b[:, 1:]
            r, m = cR[v] - cR[u], cM[v] - cM[u]
            live = np.arange(width)[None, :] < packed.sizes[lo:lo + chunk, None]
            t = (cS[v] - cS[u]) - np.divide(r * r, m, out=np.zeros_like(m), where=m > 0)
            out[lo:lo + chunk] = np.where(live, t, 0.0).sum(axis=1)
    else:
        for i in range(F):
            lab = packed.labels[i]
            r = np.bincount(lab, weights=R)
            m = np.bincount(lab, weights=M)
            out[i] = np.sum(np.bincount(lab, weights=S) - np.divide(r * r, m, out=np.zeros_like(m), where=m > 0))
    return np.maximum(out, 0.0)


def _cum(x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.size + 1)
    np.cumsum(x, out=out[1:])
    return out
