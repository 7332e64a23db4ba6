from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phest.errors import FamilyTooLargeError, PartitionError
from phest.partitions import (
    CubePartition,
    DyadicCube,
    DyadicPoint,
    IntervalFamily,
    IntervalPartition,
    ListFamily,
    TreePartition,
    VectorPartition,
    count_interval_family,
    count_tree_family,
    delta_bound_check,
    enumerate_interval_family,
    enumerate_tree_family,
    partition_from_json,
)

from ._helpers import random_interval_partition


def ip(*fracs):
    return IntervalPartition(tuple(Fraction(f) for f in fracs))


@st.composite
def interval_partitions(draw, max_level=6):
    level = draw(st.integers(0, max_level))
    pts = draw(st.sets(st.integers(1, max(1, (1 << level) - 1)), max_size=6)) if level else set()
    return IntervalPartition.from_grid(pts, level)


@st.composite
def spike_partitions(draw, k=2, max_level=3):
    j = draw(st.integers(0, max_level - 1))
    level = draw(st.integers(j + 1, max_level))
    side = 1 << level
    idx = draw(st.tuples(*[st.integers(0, side - 1)] * k))
    return CubePartition.spike(k, j, [DyadicCube(level, idx)])


class TestDyadicPoint:
    def test_canonical(self):
        assert DyadicPoint(2, 2) == DyadicPoint(1, 1)
        assert DyadicPoint(0, 5) == DyadicPoint(0, 0)
        assert DyadicPoint(4, 2).numerator == 1 and DyadicPoint(4, 2).level == 0

    def test_range(self):
        with pytest.raises(PartitionError):
            DyadicPoint(5, 2)

    def test_coerce_fraction(self):
        assert DyadicPoint.coerce(Fraction(3, 8)) == DyadicPoint(3, 3)
        with pytest.raises(PartitionError):
            DyadicPoint.coerce(Fraction(1, 3))

    @given(st.integers(0, 64), st.integers(6, 10))
    def test_order_matches_fractions(self, a, lev):
        p, q = DyadicPoint(a, 6), DyadicPoint(min(a + 1, 64), 6)
        assert (p < q) == (p.to_fraction() < q.to_fraction())
        assert p.at_level(lev) == a << (lev - 6)


class TestIntervalJoin:
    def test_identity(self):
        m0 = IntervalPartition.trivial()
        assert m0.join(m0) == m0

    def test_halves_and_quarter(self):
        got = ip(0, "1/2", 1).join(ip(0, "1/4", 1))
        assert got == ip(0, "1/4", "1/2", 1)

    def test_join_brute_force(self, rng):
        # oracle: nonempty pairwise intersections of cells
        for _ in range(50):
            a = random_interval_partition(rng, 5)
            b = random_interval_partition(rng, 5)
            cells = set()
            for (u, v) in a.cells:
                for (x, y) in b.cells:
                    lo, hi = max(u.to_fraction(), x.to_fraction()), min(v.to_fraction(), y.to_fraction())
                    if lo < hi:
                        cells.add((lo, hi))
            got = {(u.to_fraction(), v.to_fraction()) for u, v in a.join(b).cells}
            assert got == cells

    def test_domain_mismatch(self):
        with pytest.raises(PartitionError):
            IntervalPartition.trivial().join(CubePartition.regular(2, 1))

    @given(interval_partitions(), interval_partitions(), interval_partitions())
    def test_algebra(self, a, b, c):
        assert a.join(b) == b.join(a)
        assert a.join(b).join(c) == a.join(b.join(c))
        assert a.join(a) == a
        j = a.join(b)
        assert len(j) <= len(a) + len(b) - 1
        assert j.refines(a) and j.refines(b)

    @given(interval_partitions(), interval_partitions())
    def test_parents(self, a, b):
        j, pa, pb = a.join_with_parents(b)
        for cell, i, k in zip(j.cells, pa, pb):
            (u, v), (x, y), (p, q) = cell, a.cells[i], b.cells[k]
            assert x <= u and v <= y and p <= u and v <= q

    def test_json_roundtrip(self):
        m = ip(0, "3/8", "1/2", 1)
        assert partition_from_json(m.to_json()) == m
        assert m.to_json() == {"kind": "interval", "breakpoints": [
            {"num": 0, "level": 0}, {"num": 3, "level": 3}, {"num": 1, "level": 1}, {"num": 1, "level": 0}]}


class TestCubePartition:
    def test_regular_sizes(self):
        assert len(CubePartition.regular(2, 0)) == 1
        assert len(CubePartition.regular(2, 3)) == 64
        assert len(CubePartition.regular(3, 1)) == 8

    def test_spike_form(self):
        m = CubePartition.spike(2, 1, [DyadicCube(3, (0, 0))])
        # K_1 has 4 cells; the cube splits one of them into cube + remainder
        assert len(m) == 5
        with pytest.raises(PartitionError):
            CubePartition.spike(2, 2, [DyadicCube(2, (0, 0))])

    @given(spike_partitions(), spike_partitions())
    def test_join_size_bound(self, a, b):
        j = a.join(b)
        assert len(j) <= 2 * (len(a) + len(b))
        assert j == b.join(a) and j.refines(a) and j.refines(b)

    def test_delta_check(self):
        ms = [CubePartition.spike(2, j, [DyadicCube(l, (i, i))]) for j in range(2)
              for l in range(j + 1, 4) for i in range(2)]
        assert delta_bound_check(ms, 2.0)
        assert delta_bound_check(ms[:1], 1.0)

    def test_json_roundtrip(self):
        m = CubePartition.spike(2, 1, [DyadicCube(2, (1, 3))])
        assert partition_from_json(m.to_json()) == m


class TestTrees:
    @pytest.mark.parametrize("leaves,expected", [(1, 1), (2, 1), (3, 2), (4, 5), (5, 14), (6, 42)])
    def test_catalan(self, leaves, expected):
        fam = enumerate_tree_family(1, 5)
        j = leaves - 1
        assert sum(1 for t in fam if len(t) == leaves) == expected == comb(2 * j, j) // (j + 1)

    def test_quadtree_leaf_counts(self):
        sizes = {len(t) for t in enumerate_tree_family(2, 3)}
        assert sizes == {1, 4, 7, 10}

    def test_root_only(self):
        fam = enumerate_tree_family(3, 0)
        assert len(fam) == 1 and len(fam[0]) == 1

    def test_tiles(self):
        for t in enumerate_tree_family(1, 4):
            m = t.to_interval_partition()
            assert sum(m.lengths()) == 1 and m.is_dyadic_tree()
            assert partition_from_json(t.to_json()) == t

    def test_count_and_cap(self):
        assert count_tree_family(1, 5) == 1 + 1 + 2 + 5 + 14 + 42
        with pytest.raises(FamilyTooLargeError):
            enumerate_tree_family(1, 12, cap=100)


class TestVector:
    def test_forms(self):
        m = VectorPartition.from_cuts(6, [3, 5])
        assert m.blocks == ((1, 2), (3, 4), (5, 6)) and m.is_consecutive()
        s = VectorPartition.with_singletons(6, [2, 5])
        assert len(s) == 3 and s.is_singletons_form() and not s.is_consecutive()

    def test_join(self):
        a = VectorPartition.from_cuts(4, [3])
        b = VectorPartition.from_cuts(4, [2])
        assert a.join(b) == VectorPartition.from_cuts(4, [2, 3])


class TestIntervalFamily:
    def test_small_examples(self):
        assert [len(m) for m in enumerate_interval_family(1, 2)] == [1, 2]
        assert len(enumerate_interval_family(2, 4)) == 8
        assert enumerate_interval_family(0, 1) == [IntervalPartition.trivial()]

    def test_order_and_count(self):
        fam = IntervalFamily(4, 5)
        assert len(fam) == count_interval_family(4, 5) == sum(comb(15, d) for d in range(5))
        ms = list(fam)
        assert len(set(ms)) == len(ms)
        keys = [(m.min_level, len(m)) for m in ms]
        assert keys == sorted(keys)

    def test_index(self):
        fam = IntervalFamily(4, 4)
        for i in (0, 1, 7, len(fam) - 1):
            assert fam.index(fam[i]) == i

    def test_packed_matches_partitions(self):
        fam = IntervalFamily(3, 4)
        lst = ListFamily(list(fam), atom_level=3)
        np.testing.assert_array_equal(fam.packed.sizes, lst.packed.sizes)
        np.testing.assert_array_equal(fam.packed.bounds, lst.packed.bounds)

    def test_cap(self):
        with pytest.raises(FamilyTooLargeError):
            IntervalFamily(8, 8, cap=1000)
