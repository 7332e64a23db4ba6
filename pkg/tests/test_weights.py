import math
from math import comb, exp, log

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phest.errors import PartitionError
from phest.partitions import (
    CubePartition,
    DyadicCube,
    IntervalFamily,
    IntervalPartition,
    ListFamily,
    VectorPartition,
    WeightScheme,
    dyadic_sigma,
    enumerate_consecutive_family,
    enumerate_interval_family,
    enumerate_singleton_family,
    enumerate_tree_family,
    tree_sigma,
    tree_sigma_series,
    truncated_sigma,
    vector_interval_sigma,
    vector_singletons_sigma,
    weight,
)

DYADIC = WeightScheme("dyadic")
TREE = WeightScheme("tree")


def test_dyadic_examples():
    assert weight(IntervalPartition.trivial(), DYADIC) == 1.0
    half = IntervalPartition.regular(1)
    assert weight(half, DYADIC) == pytest.approx(2 * (log(2) + 2 - log(2)) + 2 * log(1))
    assert weight(half, DYADIC) == pytest.approx(4.0)


def test_tree_examples():
    m = IntervalPartition.regular(2)
    assert weight(m, TREE) == 8.0
    t = enumerate_tree_family(2, 1)[-1]
    assert weight(t, WeightScheme("cube", k=2)) == 4.0
    with pytest.raises(PartitionError):
        weight(IntervalPartition.from_grid([3], 2), TREE)


def test_dyadic_sigma_two_routes():
    # closed-form class counts against brute enumeration
    brute = math.fsum(exp(-weight(m, DYADIC)) for m in enumerate_interval_family(4, 16))
    assert dyadic_sigma(4, include_root=True) == pytest.approx(brute, rel=1e-12)
    fam = IntervalFamily(5, 6)
    brute = math.fsum(np.exp(-fam.weights(DYADIC)).tolist())
    # the counting route inside IntervalFamily.sigma
    assert fam.sigma(DYADIC) == pytest.approx(brute, rel=1e-12)


def test_dyadic_sigma_bound():
    assert dyadic_sigma(8) < 0.14


def test_tree_sigma_series():
    # printed series: e^-2 sum_j (2/e)^(2j) / (j + 1)
    series = exp(-2) * math.fsum((2 / math.e) ** (2 * j) / (j + 1) for j in range(400))
    brute = math.fsum(exp(-weight(t, TREE)) for t in enumerate_tree_family(1, 11))
    assert tree_sigma(1, 11) == pytest.approx(brute, rel=1e-12)
    assert brute < series
    assert tree_sigma_series(1) == pytest.approx(series, rel=1e-9)


def test_vector_sigmas():
    n = 12
    ex4 = WeightScheme("vector-interval", n=n)
    ex5 = WeightScheme("vector-singletons", n=n)
    b4 = math.fsum(exp(-weight(m, ex4)) for m in enumerate_consecutive_family(n))
    b5 = math.fsum(exp(-weight(m, ex5)) for m in enumerate_singleton_family(n))
    assert vector_interval_sigma(n) == pytest.approx(b4, rel=1e-12)
    assert vector_singletons_sigma(n) == pytest.approx(b5, rel=1e-12)
    # the gaps to the bounds (about 1e-22) sit below double resolution
    assert vector_interval_sigma(50) <= 1 / (math.e - 1) + 1e-12
    assert vector_singletons_sigma(50) <= math.e / (math.e - 1) + 1e-12


def test_vector_weight_values():
    m = VectorPartition.from_cuts(10, [4, 8])
    assert weight(m, WeightScheme("vector-interval", n=10)) == pytest.approx(3 + log(comb(9, 2)))
    s = VectorPartition.with_singletons(10, [2, 7])
    assert weight(s, WeightScheme("vector-singletons", n=10)) == pytest.approx(log(comb(10, 2)) + 2)


class TestCubeWeights:
    scheme = WeightScheme("cube", k=2)

    def test_regular(self):
        # K_j = m_{empty} v K_j: Delta = j, but K_j is also a tree partition
        assert weight(CubePartition.regular(2, 0), self.scheme) == 1.0
        assert weight(CubePartition.regular(2, 2), self.scheme) == 16.0

    def test_single_spike(self):
        # {Q, remainder} with Q at level 3: j = 0, p = {Q}, Delta = 0 + 2 * 3
        m = CubePartition.spike(2, 0, [DyadicCube(3, (5, 1))])
        assert weight(m, self.scheme) == 6.0

    def test_infimum_over_representations(self):
        # a level-1 quadrant is itself a tree partition piece: m = {Q, rest}
        # with Q at level 1 is not a tree partition, Delta = 2 * 1
        m = CubePartition.from_cubes(2, [DyadicCube(1, (0, 0))])
        assert weight(m, self.scheme) == 2.0

    def test_wrong_kind(self):
        with pytest.raises(PartitionError):
            weight(CubePartition.regular(2, 1), DYADIC)


@given(st.integers(1, 6), st.integers(1, 12))
def test_weights_nonnegative(level, size):
    from phest.partitions import dyadic_weight
    if size <= 1 << level:
        assert dyadic_weight(level, size) >= 0


def test_truncated_sigma_monotone():
    ms = enumerate_interval_family(3, 8)
    vals = [truncated_sigma(DYADIC, ms[:i]) for i in range(len(ms) + 1)]
    assert vals[0] == 0.0
    assert all(b >= a for a, b in zip(vals, vals[1:]))
