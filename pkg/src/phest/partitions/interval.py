"""Partitions of [0, 1) into intervals with dyadic endpoints."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import PartitionError
from .dyadic import ONE, ZERO, DyadicPoint


@dataclass(frozen=True)
class IntervalPartition:
    """Partition ``{[x_0, x_1), ..., [x_{D-1}, x_D)}`` of [0, 1).

    ``breakpoints`` holds ``x_0 = 0 < x_1 < ... < x_D = 1`` as exact
    dyadic points, so equality of two partitions is equality of tuples.
    """

    breakpoints: tuple

    kind = "interval"

    def __post_init__(self):
        pts = tuple(DyadicPoint.coerce(p) for p in self.breakpoints)
        if len(pts) < 2 or pts[0] != ZERO or pts[-1] != ONE:
            raise PartitionError("breakpoints must start at 0 and end at 1")
        L = max(p.level for p in pts)
        keys = tuple(p.numerator << (L - p.level) for p in pts)
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise PartitionError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "_grid_keys", (L, keys))

    # constructors -----------------------------------------------------------
    @classmethod
    def trivial(cls) -> "IntervalPartition":
        """``m_0 = {[0, 1)}``."""
        return cls((ZERO, ONE))

    @classmethod
    def regular(cls, level: int) -> "IntervalPartition":
        """``m_level``: ``2**level`` intervals of equal length."""
        return cls.from_grid(range((1 << level) + 1), level)

    @classmethod
    def from_grid(cls, indices, level: int) -> "IntervalPartition":
        """Breakpoints ``j / 2**level``; 0 and ``2**level`` are added if missing."""
        idx = sorted(set(int(i) for i in indices) | {0, 1 << level})
        return cls(tuple(DyadicPoint(i, level) for i in idx))

    @classmethod
    def from_json(cls, obj) -> "IntervalPartition":
        pts = obj["breakpoints"] if isinstance(obj, dict) else obj
        return cls(tuple(DyadicPoint.coerce(p) for p in pts))

    # basic structure ---------------------------------------------------------
    def __len__(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def interior(self) -> tuple:
        return self.breakpoints[1:-1]

    @property
    def min_level(self) -> int:
        """Smallest ``l`` with every interior breakpoint in ``J_l`` (0 for ``m_0``)."""
        return max((p.level for p in self.interior), default=0)

    @property
    def cells(self) -> list:
        return list(zip(self.breakpoints[:-1], self.breakpoints[1:]))

    def grid(self, level: int | None = None) -> np.ndarray:
        """Breakpoints as integers on the level-``level`` grid."""
        level = self.min_level if level is None else level
        return np.array([p.at_level(level) for p in self.breakpoints], dtype=np.int64)

    def lengths(self) -> list:
        return [b.to_fraction() - a.to_fraction() for a, b in self.cells]

    def is_dyadic_tree(self) -> bool:
        """True when every cell is a dyadic interval, i.e. m belongs to the
        binary-tree family."""
        for a, b in self.cells:
            length = b.to_fraction() - a.to_fraction()
            den = length.denominator
            if length.numerator != 1 or den & (den - 1):
                return False
            if (a.to_fraction() / length).denominator != 1:
                return False
        return True

    def atom_labels(self, level: int) -> np.ndarray:
        """Cell index of each level-``level`` atom ``[a 2^-level, (a+1) 2^-level)``."""
        g = self.grid(level)
        return (np.searchsorted(g, np.arange(1 << level), side="right") - 1).astype(np.int64)

    # algebra -----------------------------------------------------------------
    def _check_same_kind(self, other):
        if not isinstance(other, IntervalPartition):
            raise PartitionError(f"cannot combine interval partition with {type(other).__name__}")

    def _keys(self):
        """``(L, breakpoints as integers on the level-L grid)``, cached."""
        keys = self.__dict__.get("_grid_keys")
        if keys is None:
            L = self.min_level
            keys = (L, tuple(p.numerator << (L - p.level) for p in self.breakpoints))
            object.__setattr__(self, "_grid_keys", keys)
        return keys

    def join(self, other: "IntervalPartition") -> "IntervalPartition":
        """Common refinement ``m v m'``: union of the breakpoints."""
        self._check_same_kind(other)
        if self is other or self.breakpoints == other.breakpoints:
            return self
        la, ka = self._keys()
        lb, kb = other._keys()
        L = max(la, lb)
        index = {k << (L - la): p for k, p in zip(ka, self.breakpoints)}
        for k, p in zip(kb, other.breakpoints):
            index.setdefault(k << (L - lb), p)
        # sorted, canonical and bounded by construction; skip re-validation
        out = object.__new__(IntervalPartition)
        object.__setattr__(out, "breakpoints", tuple(index[k] for k in sorted(index)))
        return out

    def join_with_parents(self, other: "IntervalPartition"):
        """Return ``(join, parent_in_self, parent_in_other)``; the parent
        arrays give, for each join cell, the index of the containing cell."""
        joint = self.join(other)
        level = max(joint.min_level, self.min_level, other.min_level)
        left = joint.grid(level)[:-1]
        pa = np.searchsorted(self.grid(level), left, side="right") - 1
        pb = np.searchsorted(other.grid(level), left, side="right") - 1
        return joint, pa, pb

    def refines(self, other: "IntervalPartition") -> bool:
        self._check_same_kind(other)
        return set(other.breakpoints) <= set(self.breakpoints)

    # serialization -----------------------------------------------------------
    def to_json(self) -> dict:
        return {"kind": "interval", "breakpoints": [p.to_json() for p in self.breakpoints]}

    def __repr__(self):
        pts = ", ".join(str(p.to_fraction()) for p in self.breakpoints)
        return f"IntervalPartition([{pts}])"


def cell_fraction(cell) -> tuple[Fraction, Fraction]:
    a, b = cell
    return a.to_fraction(), b.to_fraction()
