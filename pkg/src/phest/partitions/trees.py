"""Complete 2^k-ary splitting trees and the partitions they induce.

A tree is a nested tuple: a leaf is ``()`` and an internal node is a tuple
of ``2**k`` subtrees, listed in the row-major order of
:meth:`DyadicCube.children`. For ``k = 1`` that is (left half, right half).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

from ..errors import FamilyTooLargeError, PartitionError
from .cube import CubePartition
from .dyadic import DyadicCube, DyadicPoint
from .interval import IntervalPartition

LEAF: tuple = ()


def _validate(node, arity: int) -> None:
    if not isinstance(node, tuple):
        raise PartitionError("tree nodes must be tuples")
    if node and len(node) != arity:
        raise PartitionError(f"internal node with {len(node)} children, expected {arity}")
    for child in node:
        _validate(child, arity)


def _freeze(obj):
    return tuple(_freeze(c) for c in obj)


@dataclass(frozen=True)
class TreePartition:
    """Partition of [0, 1)^k given by the leaves of a complete splitting tree."""

    k: int
    tree: tuple = LEAF

    kind = "tree"

    def __post_init__(self):
        if self.k < 1:
            raise PartitionError("dimension must be positive")
        tree = _freeze(self.tree)
        _validate(tree, 1 << self.k)
        object.__setattr__(self, "tree", tree)

    @classmethod
    def from_json(cls, obj) -> "TreePartition":
        return cls(int(obj["k"]), _freeze(obj["tree"]))

    def leaves(self) -> list[DyadicCube]:
        """Leaf cubes, depth-first in child order."""
        out: list[DyadicCube] = []
        stack = [(self.tree, DyadicCube(0, (0,) * self.k))]
        while stack:
            node, cube = stack.pop()
            if not node:
                out.append(cube)
            else:
                stack.extend(reversed(list(zip(node, cube.children()))))
        return out

    def __len__(self) -> int:
        return len(self.leaves())

    @property
    def n_splits(self) -> int:
        def count(node):
            return 0 if not node else 1 + sum(count(c) for c in node)
        return count(self.tree)

    @property
    def depth(self) -> int:
        def d(node):
            return 0 if not node else 1 + max(d(c) for c in node)
        return d(self.tree)

    def to_interval_partition(self) -> IntervalPartition:
        if self.k != 1:
            raise PartitionError("only binary trees induce interval partitions")
        pts = [DyadicPoint(c.index[0], c.level) for c in self.leaves()]
        return IntervalPartition(tuple(pts) + (DyadicPoint(1, 0),))

    def to_cube_partition(self) -> CubePartition:
        return CubePartition.from_cubes(self.k, self.leaves(), remainder=False)

    def to_partition(self):
        """The induced partition in its geometric kind."""
        return self.to_interval_partition() if self.k == 1 else self.to_cube_partition()

    def to_json(self) -> dict:
        def nest(node):
            return [nest(c) for c in node]
        return {"kind": "tree", "k": self.k, "tree": nest(self.tree)}


@lru_cache(maxsize=None)
def _count(arity: int, splits: int, depth: int) -> int:
    """Number of complete ``arity``-ary trees with exactly ``splits``
    internal nodes and height at most ``depth``."""
    if splits == 0:
        return 1
    if depth == 0:
        return 0
    return _compositions_count(arity, arity, splits - 1, depth - 1)


@lru_cache(maxsize=None)
def _compositions_count(arity: int, slots: int, total: int, depth: int) -> int:
    if slots == 0:
        return 1 if total == 0 else 0
    return sum(_count(arity, s, depth) * _compositions_count(arity, slots - 1, total - s, depth)
               for s in range(total + 1))


def _trees(arity: int, splits: int, depth: int):
    if splits == 0:
        yield LEAF
        return
    if depth == 0:
        return
    yield from _children(arity, arity, splits - 1, depth - 1)


def _children(arity: int, slots: int, total: int, depth: int):
    if slots == 1:
        for t in _trees(arity, total, depth):
            yield (t,)
        return
    for s in range(total + 1):
        for head in _trees(arity, s, depth):
            for rest in _children(arity, slots - 1, total - s, depth):
                yield (head,) + rest


def fuss_catalan(k: int, splits: int) -> int:
    """Number of complete 2^k-ary trees with ``splits`` internal nodes."""
    a = 1 << k
    return comb(a * splits, splits) // ((a - 1) * splits + 1)


def count_tree_family(k: int, max_splits: int, max_depth: int | None = None) -> int:
    depth = max_splits if max_depth is None else max_depth
    return sum(_count(1 << k, s, depth) for s in range(max_splits + 1))


def enumerate_tree_family(k: int, max_splits: int, max_depth: int | None = None,
                          cap: int = 1_000_000) -> list[TreePartition]:
    """All tree partitions with at most ``max_splits`` internal nodes.

    Ordered by number of splits, then by the recursive split layout.
    ``max_depth`` additionally bounds the tree height (the finest leaf level).
    """
    if k < 1 or max_splits < 0:
        raise PartitionError("need k >= 1 and max_splits >= 0")
    total = count_tree_family(k, max_splits, max_depth)
    if total > cap:
        raise FamilyTooLargeError(f"tree family has {total} members, cap is {cap}")
    depth = max_splits if max_depth is None else max_depth
    return [TreePartition(k, t) for s in range(max_splits + 1) for t in _trees(1 << k, s, depth)]
