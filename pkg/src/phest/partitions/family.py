"""Finite model families and their packed array form.

Selection never touches partition objects in its inner loop. A family is
packed once, against a fixed grid of atoms:

* interval-like families (intervals of [0, 1), consecutive blocks of
  {1..n}) store each model's breakpoints on the atom grid, padded with
  ``n_atoms``: ``bounds[i, :sizes[i] + 1]``;
* every other family stores one cell label per atom: ``labels[i, a]``.

Atoms are level-``L`` dyadic intervals, level-``J`` dyadic cubes (row-major)
or the points of {1..n}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import chain, combinations
from typing import Callable, Sequence

import numpy as np

from ..errors import FamilyTooLargeError, PartitionError
from .cube import CubePartition
from .dyadic import DyadicPoint
from .interval import IntervalPartition
from .trees import TreePartition
from .vector import VectorPartition
from .weights import WeightScheme, dyadic_class_size, dyadic_weight, weight

DEFAULT_CAP = 4_000_000


@dataclass
class PackedFamily:
    kind: str
    n_atoms: int
    sizes: np.ndarray
    bounds: np.ndarray | None = None
    labels: np.ndarray | None = None
    atom_level: int | None = None
    k: int = 1

    @property
    def contiguous(self) -> bool:
        return self.bounds is not None

    def __len__(self) -> int:
        return len(self.sizes)


class Family:
    """Ordered finite family of partitions with a packed representation."""

    packed: PackedFamily

    def __len__(self) -> int:
        return len(self.packed)

    def __getitem__(self, i: int):
        raise NotImplementedError

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def weights(self, scheme: WeightScheme) -> np.ndarray:
        return np.array([weight(m, scheme) for m in self], dtype=np.float64)

    def sigma(self, scheme: WeightScheme) -> float:
        return math.fsum(np.exp(-self.weights(scheme)).tolist())

    def index(self, m) -> int:
        for i, other in enumerate(self):
            if other == m:
                return i
        raise PartitionError("partition is not a member of the family")


def count_interval_family(max_level: int, max_cells: int) -> int:
    """Number of partitions with breakpoints on ``J_max_level`` and at most
    ``max_cells`` cells (``m_0`` included)."""
    return sum(math.comb((1 << max_level) - 1, d) for d in range(0, max_cells))


class IntervalFamily(Family):
    """All interval partitions with breakpoints in ``J_max_level`` and at
    most ``max_cells`` cells, ordered by (minimal level, size, breakpoints).
    """

    def __init__(self, max_level: int, max_cells: int, cap: int = DEFAULT_CAP):
        if max_level < 0 or max_cells < 1:
            raise PartitionError("need max_level >= 0 and max_cells >= 1")
        total = count_interval_family(max_level, max_cells)
        if total > cap:
            raise FamilyTooLargeError(f"interval family has {total} members, cap is {cap}")
        self.max_level, self.max_cells = max_level, max_cells
        L = max_level
        n_atoms = 1 << L
        blocks, classes = [], []
        for level in range(0, L + 1):
            for size in range(1, min(1 << level, max_cells) + 1):
                if dyadic_class_size(level, size) == 0:
                    continue
                pts = _class_breakpoints(level, size)
                rows = np.full((len(pts), max_cells + 1), n_atoms, dtype=np.int32)
                rows[:, 0] = 0
                rows[:, 1:size] = pts << (L - level)
                blocks.append(rows)
                classes.append((level, size, len(pts)))
        bounds = np.concatenate(blocks)
        sizes = np.concatenate([np.full(c, s, dtype=np.int64) for _, s, c in classes])
        self.classes = classes
        self.packed = PackedFamily("interval", n_atoms, sizes, bounds=bounds, atom_level=L)

    def __getitem__(self, i: int) -> IntervalPartition:
        row = self.packed.bounds[i, : self.packed.sizes[i] + 1]
        return IntervalPartition(tuple(DyadicPoint(int(v), self.max_level) for v in row))

    def index(self, m: IntervalPartition) -> int:
        g = m.grid(self.max_level)
        hits = np.flatnonzero((self.packed.sizes == len(m))
                              & np.all(self.packed.bounds[:, : len(m) + 1] == g, axis=1))
        if not hits.size:
            raise PartitionError("partition is not a member of the family")
        return int(hits[0])

    def class_labels(self) -> np.ndarray:
        """Minimal level ``l`` of every member."""
        return np.concatenate([np.full(c, lv, dtype=np.int64) for lv, _, c in self.classes])

    def weights(self, scheme: WeightScheme) -> np.ndarray:
        if scheme.name not in ("dyadic", "dyadic+tree", "tree"):
            return super().weights(scheme)
        out = np.concatenate([np.full(c, dyadic_weight(lv, s)) for lv, s, c in self.classes])
        if scheme.name != "dyadic":
            tree = dyadic_tree_mask(self.packed)
            if scheme.name == "tree" and not tree.all():
                raise PartitionError("family contains non-tree partitions")
            out[tree] = 2.0 * self.packed.sizes[tree]
        return out

    def sigma(self, scheme: WeightScheme) -> float:
        if scheme.name == "dyadic":
            terms = [math.exp(math.log(c) - dyadic_weight(lv, s)) for lv, s, c in self.classes]
            return math.fsum(terms)
        return super().sigma(scheme)


def _class_breakpoints(level: int, size: int) -> np.ndarray:
    """Interior breakpoints (level-``level`` integers) of ``M_{level,size}``
    in lexicographic order; at least one of them must be odd."""
    if size == 1:
        return np.zeros((1, 0), dtype=np.int32)
    pool = range(1, 1 << level)
    count = math.comb(len(pool), size - 1)
    flat = np.fromiter(chain.from_iterable(combinations(pool, size - 1)), dtype=np.int32,
                       count=count * (size - 1))
    pts = flat.reshape(count, size - 1)
    if level > 0:
        pts = pts[np.any(pts & 1, axis=1)]
    return pts


def dyadic_tree_mask(packed: PackedFamily) -> np.ndarray:
    """Members of a contiguous family whose cells are all dyadic intervals."""
    b = packed.bounds.astype(np.int64)
    lo, hi = b[:, :-1], b[:, 1:]
    length = hi - lo
    valid = length > 0
    pow2 = (length & (length - 1)) == 0
    aligned = np.where(valid, lo % np.where(valid, length, 1), 0) == 0
    return np.all(~valid | (pow2 & aligned), axis=1)


def enumerate_interval_family(max_level: int, max_cells: int,
                              cap: int = DEFAULT_CAP) -> list[IntervalPartition]:
    """Every partition with breakpoints in ``J_max_level`` and at most
    ``max_cells`` cells, in (l, D, lexicographic) order."""
    fam = IntervalFamily(max_level, max_cells, cap=cap)
    return list(fam)


class ListFamily(Family):
    """Family given by an explicit list of partitions of one kind."""

    def __init__(self, members: Sequence, atom_level: int | None = None):
        members = [m.to_partition() if isinstance(m, TreePartition) else m for m in members]
        if not members:
            raise PartitionError("family is empty")
        kinds = {type(m) for m in members}
        if len(kinds) != 1:
            raise PartitionError("family mixes partition kinds")
        self.members = members
        first = members[0]
        sizes = np.array([len(m) for m in members], dtype=np.int64)
        if isinstance(first, IntervalPartition):
            L = max(m.min_level for m in members)
            L = L if atom_level is None else max(L, atom_level)
            bounds = _pad_bounds([m.grid(L) for m in members], 1 << L)
            self.packed = PackedFamily("interval", 1 << L, sizes, bounds=bounds, atom_level=L)
        elif isinstance(first, CubePartition):
            k = first.k
            if any(m.k != k for m in members):
                raise PartitionError("cube partitions of different dimensions")
            J = max(m.resolution for m in members)
            J = J if atom_level is None else max(J, atom_level)
            labels = np.stack([m.atom_labels(J) for m in members]).astype(np.int32)
            self.packed = PackedFamily("cube", 1 << (k * J), sizes, labels=labels, atom_level=J, k=k)
        elif isinstance(first, VectorPartition):
            n = first.n
            if any(m.n != n for m in members):
                raise PartitionError("vector partitions of different ground sets")
            if all(m.is_consecutive() for m in members):
                grids = [np.array([b[0] - 1 for b in m.blocks] + [n]) for m in members]
                self.packed = PackedFamily("vector", n, sizes, bounds=_pad_bounds(grids, n))
            else:
                labels = np.stack([m.labels for m in members]).astype(np.int32)
                self.packed = PackedFamily("vector", n, sizes, labels=labels)
        else:
            raise PartitionError(f"unsupported partition type {type(first).__name__}")

    def __getitem__(self, i: int):
        return self.members[i]

    def index(self, m) -> int:
        try:
            return self.members.index(m)
        except ValueError:
            raise PartitionError("partition is not a member of the family") from None


def _pad_bounds(grids, n_atoms: int) -> np.ndarray:
    width = max(len(g) for g in grids)
    out = np.full((len(grids), width), n_atoms, dtype=np.int32)
    for i, g in enumerate(grids):
        out[i, : len(g)] = g
    return out


def as_family(obj, atom_level: int | None = None) -> Family:
    if isinstance(obj, Family):
        return obj
    return ListFamily(list(obj), atom_level=atom_level)


def delta_bound_check(ms: Sequence, delta: float,
                      on_violation: Callable | None = None) -> bool:
    """True iff ``|m v m'| <= delta (|m| + |m'|)`` for every pair in ``ms``."""
    ms = list(ms)
    ok = True
    for i, a in enumerate(ms):
        for b in ms[i:]:
            if len(a.join(b)) > delta * (len(a) + len(b)):
                ok = False
                if on_violation is None:
                    return False
                on_violation(a, b)
    return ok
