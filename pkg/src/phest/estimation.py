"""Histogram estimators, the quasi-distance ``H`` and bias terms.

``H^2(t, t') = int (sqrt(t) - sqrt(t'))^2 dM``. For two histograms it is
evaluated exactly on the join of their partitions.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PartitionError, SupportError
from .observations import ObservationPair
from .partitions import CubePartition, IntervalPartition, VectorPartition, partition_from_json


@dataclass(frozen=True)
class HistogramEstimate:
    """A partition with one nonnegative level per cell."""

    partition: object
    levels: tuple
    _roots: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.shape != (len(self.partition),):
            raise PartitionError("one level per cell is required")
        if np.any(lv < 0) or not np.all(np.isfinite(lv)):
            raise ValueError("levels must be finite and nonnegative")
        object.__setattr__(self, "levels", tuple(lv.tolist()))
        roots = np.sqrt(lv)
        roots.setflags(write=False)
        object.__setattr__(self, "_roots", roots)

    @property
    def level_array(self) -> np.ndarray:
        return np.asarray(self.levels)

    @property
    def roots(self) -> np.ndarray:
        return self._roots

    def __call__(self, x):
        """Evaluate on [0, 1) (interval partitions only)."""
        m = self.partition
        if not isinstance(m, IntervalPartition):
            raise PartitionError("pointwise evaluation needs an interval partition")
        g = np.array([float(p) for p in m.breakpoints])
        idx = np.clip(np.searchsorted(g, x, side="right") - 1, 0, len(m) - 1)
        return self.level_array[idx]

    def to_json(self) -> dict:
        return {"partition": self.partition.to_json(), "levels": list(self.levels)}

    @classmethod
    def from_json(cls, obj) -> "HistogramEstimate":
        return cls(partition_from_json(obj["partition"]), tuple(obj["levels"]))

    def step_csv(self) -> str:
        """Step-function plot data: two rows ``x,y`` per cell."""
        m = self.partition
        buf = io.StringIO()
        buf.write("x,y\n")
        if isinstance(m, IntervalPartition):
            for (a, b), y in zip(m.cells, self.levels):
                buf.write(f"{float(a)!r},{y!r}\n{float(b)!r},{y!r}\n")
        elif isinstance(m, VectorPartition):
            for block, y in zip(m.blocks, self.levels):
                for i in block:
                    buf.write(f"{i},{y!r}\n")
        else:
            raise PartitionError("step data is defined for interval and vector partitions")
        return buf.getvalue()


def fit(m, obs: ObservationPair) -> HistogramEstimate:
    """``s_m = sum_I N(I) / M(I) 1_I`` with ``0 / 0 = 0``."""
    N, M = obs.cell_masses(m)
    bad = (N > 0) & (M <= 0)
    if np.any(bad):
        raise SupportError(f"cell {int(np.flatnonzero(bad)[0])} has N > 0 but M = 0")
    return HistogramEstimate(m, tuple(np.divide(N, M, out=np.zeros_like(M), where=M > 0)))


def lebesgue_cells(m) -> np.ndarray:
    """``lambda(I)`` per cell (counting measure for vector partitions)."""
    if isinstance(m, IntervalPartition):
        return np.array([float(b.to_fraction() - a.to_fraction()) for a, b in m.cells])
    if isinstance(m, CubePartition):
        lab = m.label_array
        return np.bincount(lab, minlength=len(m)) / float(lab.size)
    if isinstance(m, VectorPartition):
        return np.array([float(len(b)) for b in m.blocks])
    raise PartitionError(f"no reference measure for {type(m).__name__}")


def cell_measure(m, provider=None) -> np.ndarray:
    """``M(I)`` per cell: from an observation, or ``lambda`` when None."""
    if provider is None:
        return lebesgue_cells(m)
    if isinstance(provider, ObservationPair):
        return provider.cell_masses(m)[1]
    if callable(provider):
        return np.asarray(provider(m), dtype=np.float64)
    raise TypeError("M-provider must be None, an ObservationPair or a callable")


def truth_cells(m, s, obs: ObservationPair | None = None):
    """``(int_I sqrt(s) dM, int_I s dM, M(I))`` per cell of ``m``."""
    if obs is not None:
        level = obs._level_for(m)
        R, S = obs.truth_masses(s, level)
        _, M = obs.atom_masses(level)
        lab = m.atom_labels(level)
        size = len(m)
        return (np.bincount(lab, weights=R, minlength=size), np.bincount(lab, weights=S, minlength=size),
                np.bincount(lab, weights=M, minlength=size))
    if isinstance(m, IntervalPartition):
        g = np.array([float(p) for p in m.breakpoints])
        return s.root_integral(g[:-1], g[1:]), s.integral(g[:-1], g[1:]), np.diff(g)
    if isinstance(m, VectorPartition):
        S, R = s.atom_integrals(None)
        lab = m.labels
        return (np.bincount(lab, weights=R, minlength=len(m)), np.bincount(lab, weights=S, minlength=len(m)),
                np.bincount(lab, minlength=len(m)).astype(np.float64))
    if isinstance(m, CubePartition):
        level = max(m.resolution, getattr(s, "jbar", 0))
        S, R = s.atom_integrals(level)
        lab = m.atom_labels(level)
        vol = 1.0 / lab.size
        return (np.bincount(lab, weights=R, minlength=len(m)), np.bincount(lab, weights=S, minlength=len(m)),
                np.bincount(lab, minlength=len(m)) * vol)
    raise PartitionError(f"unsupported partition {type(m).__name__}")


def mean_approximant(m, s) -> HistogramEstimate:
    """``s_bar_m``: level ``s_I / lambda(I)`` on each cell."""
    _, S, lam = truth_cells(m, s)
    return HistogramEstimate(m, tuple(np.divide(S, lam, out=np.zeros_like(S), where=lam > 0)))


def root_approximant(m, s) -> HistogramEstimate:
    """Closest element of ``S_m`` to ``s``: level ``(int_I sqrt(s) / lambda(I))**2``."""
    R, _, lam = truth_cells(m, s)
    return HistogramEstimate(m, tuple(np.divide(R, lam, out=np.zeros_like(R), where=lam > 0) ** 2))


def hellinger_sq(t: HistogramEstimate, u: HistogramEstimate, provider=None) -> float:
    """``H^2(t, u)`` on the exact join of the two partitions."""
    joint, pa, pb = t.partition.join_with_parents(u.partition)
    M = cell_measure(joint, provider)
    d = t.roots[pa] - u.roots[pb]
    return math.fsum((d * d * M).tolist())


def hellinger_to_truth(t: HistogramEstimate, s, obs: ObservationPair | None = None) -> float:
    """``H^2(t, s) = sum_I [t_I M(I) - 2 sqrt(t_I) int_I sqrt(s) dM + int_I s dM]``."""
    R, S, M = truth_cells(t.partition, s, obs)
    terms = t.level_array * M - 2.0 * t.roots * R + S
    return max(math.fsum(terms.tolist()), 0.0)


def bias_sq(s, m, obs: ObservationPair | None = None) -> float:
    """``inf_{t in S_m} H^2(s, t) = sum_I [int_I s dM - (int_I sqrt(s) dM)^2 / M(I)]``."""
    R, S, M = truth_cells(m, s, obs)
    terms = S - np.divide(R * R, M, out=np.zeros_like(R), where=M > 0)
    return max(math.fsum(terms.tolist()), 0.0)


def bias_upper_sq(s, m, n: int) -> float:
    """Survival-framework bound ``n inf_t int (sqrt(s) - sqrt(t))^2 d lambda``
    (valid since ``Y <= n``)."""
    return n * bias_sq(s, m)
