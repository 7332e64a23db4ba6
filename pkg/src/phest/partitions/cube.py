"""Partitions of [0, 1)^k whose cells are unions of dyadic cubes.

A partition is stored as a label per atom, the atoms being the dyadic
cubes of a fixed resolution ``r``. The canonical form uses the coarsest
possible resolution and numbers cells by first appearance in row-major
atom order, so equal partitions have equal representations.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import PartitionError
from .dyadic import DyadicCube


def _relabel(flat: np.ndarray) -> np.ndarray:
    _, first, inv = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inv.reshape(-1)]


def _coarsen(labels: np.ndarray, k: int, r: int):
    while r > 0:
        half = 1 << (r - 1)
        arr = labels.reshape((half, 2) * k)
        head = arr[(slice(None), 0) * k]
        expanded = head.reshape(sum(((half, 1) for _ in range(k)), ()))
        if not np.array_equal(np.broadcast_to(expanded, arr.shape), arr):
            break
        labels, r = head.reshape(-1), r - 1
    return labels, r


def refine_labels(labels: np.ndarray, k: int, r: int, target: int) -> np.ndarray:
    """Re-express level-``r`` atom labels on the finer level-``target`` grid."""
    if target == r:
        return labels
    if target < r:
        raise PartitionError("cannot refine to a coarser resolution")
    rep = 1 << (target - r)
    arr = labels.reshape((1 << r,) * k)
    for axis in range(k):
        arr = np.repeat(arr, rep, axis=axis)
    return arr.reshape(-1)


def cube_atom_index(cube: DyadicCube, r: int) -> np.ndarray:
    """Flat row-major indices of the level-``r`` atoms inside ``cube``."""
    shift = r - cube.level
    if shift < 0:
        raise PartitionError("cube finer than resolution")
    side = 1 << r
    ranges = [np.arange(i << shift, (i + 1) << shift) for i in cube.index]
    grids = np.meshgrid(*ranges, indexing="ij")
    flat = np.zeros(grids[0].shape, dtype=np.int64)
    for g in grids:
        flat = flat * side + g
    return flat.reshape(-1)


@dataclass(frozen=True)
class CubePartition:
    """Finite partition of [0, 1)^k into unions of dyadic cubes."""

    k: int
    resolution: int
    labels: tuple
    _arr: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    kind = "cube"

    def __post_init__(self):
        if self.k < 1:
            raise PartitionError("dimension must be positive")
        arr = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if arr.size != 1 << (self.k * self.resolution):
            raise PartitionError("label count does not match resolution")
        arr, r = _coarsen(_relabel(arr), self.k, self.resolution)
        arr = _relabel(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "resolution", r)
        object.__setattr__(self, "labels", tuple(int(v) for v in arr))
        object.__setattr__(self, "_arr", arr)

    # constructors -----------------------------------------------------------
    @classmethod
    def regular(cls, k: int, j: int) -> "CubePartition":
        """``K_j``: all ``2**(k j)`` cubes of level ``j``."""
        return cls(k, j, tuple(range(1 << (k * j))))

    @classmethod
    def from_cubes(cls, k: int, cubes, remainder: bool = True) -> "CubePartition":
        """Cells are the given disjoint cubes plus (if nonempty and
        ``remainder``) the complement of their union."""
        cubes = list(cubes)
        r = max((c.level for c in cubes), default=0)
        lab = np.full(1 << (k * r), -1, dtype=np.int64)
        for i, c in enumerate(cubes):
            if c.k != k:
                raise PartitionError("cube dimension mismatch")
            idx = cube_atom_index(c, r)
            if np.any(lab[idx] >= 0):
                raise PartitionError("cubes are not disjoint")
            lab[idx] = i
        if np.any(lab < 0):
            if not remainder:
                raise PartitionError("cubes do not cover [0,1)^k")
            lab[lab < 0] = len(cubes)
        return cls(k, r, tuple(lab))

    @classmethod
    def spike(cls, k: int, j: int, p) -> "CubePartition":
        """``m_p v K_j`` for a set ``p`` of disjoint cubes of level > ``j``."""
        p = list(p)
        if any(c.level <= max(j, 0) for c in p):
            raise PartitionError("spike cubes must have level > j (and > 0)")
        return cls.from_cubes(k, p).join(cls.regular(k, j))

    @classmethod
    def from_json(cls, obj) -> "CubePartition":
        return cls(int(obj["k"]), int(obj["resolution"]), tuple(obj["labels"]))

    # structure ---------------------------------------------------------------
    def __len__(self) -> int:
        return int(self._arr.max()) + 1

    @property
    def label_array(self) -> np.ndarray:
        return self._arr

    def atom_labels(self, level: int) -> np.ndarray:
        return refine_labels(self._arr, self.k, self.resolution, level)

    def cell_atoms(self, level: int | None = None) -> list[np.ndarray]:
        level = self.resolution if level is None else level
        lab = self.atom_labels(level)
        order = np.argsort(lab, kind="stable")
        bounds = np.searchsorted(lab[order], np.arange(len(self) + 1))
        return [order[bounds[c]:bounds[c + 1]] for c in range(len(self))]

    def cell_cube(self, atoms: np.ndarray, level: int | None = None):
        """The DyadicCube equal to the cell made of ``atoms`` (level-``level``
        flat indices), or None when that cell is not a cube."""
        level = self.resolution if level is None else level
        coords = np.array(np.unravel_index(atoms, (1 << level,) * self.k))
        lo, hi = coords.min(axis=1), coords.max(axis=1)
        sides = hi - lo + 1
        s = int(sides[0])
        if np.any(sides != s) or s & (s - 1) or np.any(lo % s) or atoms.size != s ** self.k:
            return None
        shift = s.bit_length() - 1
        return DyadicCube(level - shift, tuple(int(v) >> shift for v in lo))

    def cubes(self) -> list:
        """Cells as cubes (None for non-cube cells), in label order."""
        return [self.cell_cube(a) for a in self.cell_atoms()]

    def is_tree_partition(self) -> bool:
        """True when every cell is a dyadic cube (an element of ``M^k_T``)."""
        return all(c is not None for c in self.cubes())

    # algebra -----------------------------------------------------------------
    def _check_same_kind(self, other):
        if not isinstance(other, CubePartition) or other.k != self.k:
            raise PartitionError("cube partitions must share the dimension k")

    def join_with_parents(self, other: "CubePartition"):
        self._check_same_kind(other)
        r = max(self.resolution, other.resolution)
        la = self.atom_labels(r)
        lb = other.atom_labels(r)
        codes = la * len(other) + lb
        joint = CubePartition(self.k, r, tuple(codes))
        jl = joint.atom_labels(r)
        first = np.zeros(len(joint), dtype=np.int64)
        first[jl[::-1]] = np.arange(jl.size)[::-1]
        return joint, la[first], lb[first]

    def join(self, other: "CubePartition") -> "CubePartition":
        return self.join_with_parents(other)[0]

    def refines(self, other: "CubePartition") -> bool:
        return self.join(other) == self

    def to_json(self) -> dict:
        return {"kind": "cube", "k": self.k, "resolution": self.resolution, "labels": list(self.labels)}
