"""Model weights ``Delta_m`` and the sums ``Sigma = sum_m exp(-Delta_m)``.

Schemes
-------
``dyadic``
    Interval partitions with dyadic breakpoints:
    ``Delta = D (l log 2 + 2 - log D) + 2 log l`` and ``Delta(m_0) = 1``.
``tree``
    Tree partitions: ``2 |m|`` for ``k = 1`` and ``|m|`` for ``k >= 2``.
``dyadic+tree``
    Tree weight on binary-tree partitions, ``dyadic`` weight elsewhere.
``cube``
    Cube partitions ``m_p v K_j``: ``|m|`` on tree partitions, otherwise the
    smallest ``j + k * sum_{Q in p} level(Q)`` over all representations.
``vector-interval``
    Consecutive blocks of {1..n}: ``|m| + log C(n-1, |m|-1)``.
``vector-singletons``
    Singletons plus remainder: ``log C(n, |m|-1) + |m| - 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PartitionError
from .cube import CubePartition
from .interval import IntervalPartition
from .trees import TreePartition, fuss_catalan
from .vector import VectorPartition

LOG2 = math.log(2.0)
SCHEMES = ("dyadic", "tree", "dyadic+tree", "cube", "vector-interval", "vector-singletons")


def dyadic_weight(level: int, size: int) -> float:
    """Weight of a partition in ``M_{l,D}``; ``(0, 1)`` is ``m_0``."""
    if size == 1:
        return 1.0
    return size * (level * LOG2 + 2.0 - math.log(size)) + 2.0 * math.log(level)


def _tree_weight(size: int, k: int) -> float:
    return float(2 * size if k == 1 else size)


def cube_representation_weight(m: CubePartition) -> float:
    """Infimum of ``j + k sum_{Q in p} level(Q)`` over ``m = m_p v K_j``.

    For a fixed ``j`` the representation is forced inside every ``K_j``
    cube up to one choice: the remainder cell. When a ``K_j`` cube holds
    several cells and one of them is not a cube, that one is the remainder
    and every other cell belongs to ``p``. When all are cubes, leaving the
    deepest one out of ``p`` is cheapest.
    """
    r, k = m.resolution, m.k
    atoms = m.cell_atoms()
    side = 1 << r
    coords = [np.array(np.unravel_index(a, (side,) * k)) for a in atoms]
    cubes = [m.cell_cube(a) for a in atoms]
    best = math.inf
    for j in range(r + 1):
        shift = r - j
        groups: dict = {}
        ok = True
        for c, xy in enumerate(coords):
            parent = xy >> shift
            if np.any(parent != parent[:, :1]):
                ok = False
                break
            groups.setdefault(tuple(parent[:, 0]), []).append(c)
        if not ok:
            continue
        cost = float(j)
        for cells in groups.values():
            if len(cells) == 1:
                continue
            non_cubes = [c for c in cells if cubes[c] is None]
            if len(non_cubes) > 1:
                cost = math.inf
                break
            levels = [cubes[c].level for c in cells if cubes[c] is not None]
            total = sum(levels)
            if not non_cubes:
                total -= max(levels)
            cost += k * total
        best = min(best, cost)
    if not math.isfinite(best):
        raise PartitionError("partition is not of the form m_p v K_j")
    return best


@dataclass(frozen=True)
class WeightScheme:
    """A named rule ``m -> Delta_m`` with the parameters it needs."""

    name: str
    k: int = 1
    n: int | None = None

    def __post_init__(self):
        if self.name not in SCHEMES:
            raise PartitionError(f"unknown weight scheme {self.name!r}; choose from {SCHEMES}")
        if self.name.startswith("vector") and not self.n:
            raise PartitionError("vector schemes need the ground-set size n")

    def __call__(self, m) -> float:
        return weight(m, self)

    def to_json(self) -> dict:
        return {"name": self.name, "k": self.k, "n": self.n}


def weight(m, scheme: WeightScheme) -> float:
    """``Delta_m`` for ``m`` under ``scheme``; raises PartitionError when
    ``m`` lies outside the scheme's family."""
    name = scheme.name
    if isinstance(m, TreePartition):
        if name in ("tree", "dyadic+tree") or (name == "cube" and m.k >= 2):
            return _tree_weight(len(m), m.k)
        m = m.to_partition()
    if name in ("dyadic", "dyadic+tree"):
        if not isinstance(m, IntervalPartition):
            raise PartitionError(f"{name} weights need an interval partition")
        if name == "dyadic+tree" and m.is_dyadic_tree():
            return _tree_weight(len(m), 1)
        return dyadic_weight(m.min_level, len(m))
    if name == "tree":
        if isinstance(m, IntervalPartition) and m.is_dyadic_tree():
            return _tree_weight(len(m), 1)
        if isinstance(m, CubePartition) and m.is_tree_partition():
            return _tree_weight(len(m), m.k)
        raise PartitionError("partition is not a tree partition")
    if name == "cube":
        if not isinstance(m, CubePartition):
            raise PartitionError("cube weights need a cube partition")
        if m.is_tree_partition():
            return float(len(m))
        return cube_representation_weight(m)
    if not isinstance(m, VectorPartition) or m.n != scheme.n:
        raise PartitionError(f"{name} weights need a partition of {{1..{scheme.n}}}")
    d = len(m)
    if name == "vector-interval":
        if not m.is_consecutive():
            raise PartitionError("blocks are not consecutive")
        return d + math.log(math.comb(m.n - 1, d - 1))
    if not m.is_singletons_form():
        raise PartitionError("more than one non-singleton block")
    return math.log(math.comb(m.n, d - 1)) + d - 1


def truncated_sigma(scheme: WeightScheme, family) -> float:
    """``sum_m exp(-Delta_m)`` over ``family`` (compensated summation).

    ``family`` may be a list of partitions or any object exposing
    ``sigma(scheme)``; the lazy families use that to sum by counting.
    """
    if hasattr(family, "sigma"):
        return family.sigma(scheme)
    return math.fsum(math.exp(-weight(m, scheme)) for m in family)


def dyadic_class_size(level: int, size: int) -> int:
    """``|M_{l,D}|``: breakpoints on ``J_l`` but not all on ``J_{l-1}``."""
    if level == 0:
        return 1 if size == 1 else 0
    if size < 2:
        return 0
    return math.comb((1 << level) - 1, size - 1) - math.comb((1 << (level - 1)) - 1, size - 1)


def dyadic_sigma(max_level: int, max_cells: int | None = None, include_root: bool = False) -> float:
    """Sigma of the ``dyadic`` scheme over ``l <= max_level`` by class counting."""
    terms = [math.exp(-1.0)] if include_root else []
    for level in range(1, max_level + 1):
        top = 1 << level if max_cells is None else min(1 << level, max_cells)
        for size in range(2, top + 1):
            count = dyadic_class_size(level, size)
            if count:
                terms.append(math.exp(math.log(count) - dyadic_weight(level, size)))
    return math.fsum(terms)


def tree_sigma(k: int, max_splits: int) -> float:
    """Sigma of the ``tree`` scheme over trees with at most ``max_splits`` splits."""
    arity = 1 << k
    terms = []
    for j in range(max_splits + 1):
        size = 1 + j * (arity - 1)
        terms.append(math.exp(math.log(fuss_catalan(k, j)) - _tree_weight(size, k)))
    return math.fsum(terms)


def tree_sigma_series(k: int = 1, terms: int = 2000) -> float:
    """Printed majorants of the tree-family sums: ``e^-2 sum (2/e)^{2j}/(j+1)``
    for ``k = 1`` and ``sum 1/((j+1)(1+j(2^k-1)))`` for ``k >= 2``."""
    if k == 1:
        return math.exp(-2.0) * math.fsum((2.0 / math.e) ** (2 * j) / (j + 1) for j in range(terms))
    a = (1 << k) - 1
    # tail beyond ``terms`` is below 1/(a*terms)
    return math.fsum(1.0 / ((j + 1) * (1 + j * a)) for j in range(terms))


def vector_interval_sigma(n: int) -> float:
    return math.fsum(math.exp(-d) for d in range(1, n + 1))


def vector_singletons_sigma(n: int) -> float:
    # k = 0..n-2 singletons plus the all-singletons partition once
    scheme = WeightScheme("vector-singletons", n=n)
    terms = [math.exp(math.log(math.comb(n, k)) - (math.log(math.comb(n, k)) + k)) for k in range(n - 1)]
    terms.append(math.exp(-weight(VectorPartition.with_singletons(n, range(1, n + 1)), scheme)))
    return math.fsum(terms)
