"""Partitions of the finite index set {1, ..., n}.

Indices are 1-based in JSON and in ``blocks``; ``labels`` is the 0-based
array form used by the kernels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from ..errors import FamilyTooLargeError, PartitionError


def _canonical_blocks(n: int, blocks) -> tuple:
    blocks = [tuple(sorted(int(i) for i in b)) for b in blocks]
    if any(not b for b in blocks):
        raise PartitionError("empty block")
    flat = sorted(i for b in blocks for i in b)
    if flat != list(range(1, n + 1)):
        raise PartitionError(f"blocks do not partition {{1..{n}}}")
    return tuple(sorted(blocks))


@dataclass(frozen=True)
class VectorPartition:
    """Partition of {1, ..., n} into blocks, sorted by smallest element."""

    n: int
    blocks: tuple
    _labels: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    kind = "vector"

    def __post_init__(self):
        if self.n < 1:
            raise PartitionError("ground set must be nonempty")
        blocks = _canonical_blocks(self.n, self.blocks)
        lab = np.empty(self.n, dtype=np.int64)
        for c, b in enumerate(blocks):
            lab[np.asarray(b) - 1] = c
        lab.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "_labels", lab)

    @classmethod
    def from_labels(cls, labels) -> "VectorPartition":
        labels = np.asarray(labels)
        groups: dict = {}
        for i, c in enumerate(labels.tolist(), start=1):
            groups.setdefault(c, []).append(i)
        return cls(len(labels), tuple(tuple(g) for g in groups.values()))

    @classmethod
    def from_cuts(cls, n: int, cuts) -> "VectorPartition":
        """Consecutive blocks; ``cuts`` are the first indices of blocks 2, 3, ..."""
        edges = [1] + sorted(int(c) for c in cuts) + [n + 1]
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise PartitionError("cuts must be distinct and inside 2..n")
        return cls(n, tuple(tuple(range(a, b)) for a, b in zip(edges, edges[1:])))

    @classmethod
    def with_singletons(cls, n: int, singletons) -> "VectorPartition":
        """Given singletons plus the block of remaining indices (if any)."""
        single = sorted(set(int(i) for i in singletons))
        rest = tuple(sorted(set(range(1, n + 1)) - set(single)))
        blocks = [(i,) for i in single] + ([rest] if rest else [])
        return cls(n, tuple(blocks))

    @classmethod
    def from_json(cls, obj) -> "VectorPartition":
        return cls(int(obj["n"]), tuple(tuple(b) for b in obj["blocks"]))

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    def atom_labels(self, level=None) -> np.ndarray:
        return self._labels

    def is_consecutive(self) -> bool:
        return all(b[-1] - b[0] + 1 == len(b) for b in self.blocks)

    def n_singletons(self) -> int:
        return sum(1 for b in self.blocks if len(b) == 1)

    def is_singletons_form(self) -> bool:
        """At most one block has more than one element (singletons form)."""
        return sum(1 for b in self.blocks if len(b) > 1) <= 1

    def _check_same_kind(self, other):
        if not isinstance(other, VectorPartition) or other.n != self.n:
            raise PartitionError("vector partitions must share the ground set")

    def join_with_parents(self, other: "VectorPartition"):
        self._check_same_kind(other)
        codes = self._labels * len(other) + other._labels
        joint = VectorPartition.from_labels(codes)
        first = np.array([b[0] - 1 for b in joint.blocks], dtype=np.int64)
        return joint, self._labels[first], other._labels[first]

    def join(self, other: "VectorPartition") -> "VectorPartition":
        return self.join_with_parents(other)[0]

    def refines(self, other: "VectorPartition") -> bool:
        return self.join(other) == self

    def to_json(self) -> dict:
        return {"kind": "vector", "n": self.n, "blocks": [list(b) for b in self.blocks]}


def count_consecutive_family(n: int, max_cells: int | None = None) -> int:
    top = n if max_cells is None else min(n, max_cells)
    return sum(comb(n - 1, d - 1) for d in range(1, top + 1))


def enumerate_consecutive_family(n: int, max_cells: int | None = None,
                                 cap: int = 1_000_000) -> list[VectorPartition]:
    """Interval-block family: partitions of {1..n} into intervals, by (|m|, cuts)."""
    total = count_consecutive_family(n, max_cells)
    if total > cap:
        raise FamilyTooLargeError(f"family has {total} members, cap is {cap}")
    top = n if max_cells is None else min(n, max_cells)
    return [VectorPartition.from_cuts(n, cuts)
            for d in range(1, top + 1) for cuts in combinations(range(2, n + 1), d - 1)]


def count_singleton_family(n: int, max_singletons: int | None = None) -> int:
    top = n if max_singletons is None else min(n, max_singletons)
    # k = n - 1 and k = n give the same partition (all singletons)
    return sum(comb(n, k) for k in range(0, min(top, n - 2) + 1)) + (1 if top >= n - 1 else 0)


def enumerate_singleton_family(n: int, max_singletons: int | None = None,
                               cap: int = 1_000_000) -> list[VectorPartition]:
    """Singletons family: k singletons plus the remainder, each partition once."""
    total = count_singleton_family(n, max_singletons)
    if total > cap:
        raise FamilyTooLargeError(f"family has {total} members, cap is {cap}")
    top = n if max_singletons is None else min(n, max_singletons)
    out = [VectorPartition.with_singletons(n, s)
           for k in range(0, min(top, n - 2) + 1) for s in combinations(range(1, n + 1), k)]
    if top >= n - 1:
        out.append(VectorPartition.with_singletons(n, range(1, n + 1)))
    return out
