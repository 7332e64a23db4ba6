import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phest.errors import SupportError
from phest.estimation import (
    HistogramEstimate,
    bias_sq,
    fit,
    hellinger_sq,
    hellinger_to_truth,
    mean_approximant,
    root_approximant,
)
from phest.observations import (
    Constant,
    PiecewiseConstant,
    PiecewisePolynomial,
    PoissonSample,
    simulate_density,
    simulate_poisson,
    simulate_vector,
)
from phest.partitions import IntervalPartition, VectorPartition

from ._helpers import random_interval_partition


def test_fit_density_m0():
    obs = simulate_density(Constant(1.0), 50, seed=1)
    assert fit(IntervalPartition.trivial(), obs).levels == (1.0,)


def test_fit_vector_singletons():
    obs = simulate_vector([1.0, 4.0, 2.0], "poisson", seed=3)
    m = VectorPartition.from_cuts(3, [2, 3])
    assert fit(m, obs).levels == tuple(obs.values.tolist())


def test_fit_poisson_mean():
    lv = [fit(IntervalPartition.trivial(), simulate_poisson(Constant(5.0), seed=r, level=2)).levels[0]
          for r in range(4000)]
    assert abs(np.mean(lv) - 5) < 3 * math.sqrt(5 / 4000)


def test_support_violation():
    class Broken(PoissonSample):
        def atom_masses(self, level):
            N, M = super().atom_masses(level)
            M = M.copy()
            M[0] = 0.0
            return N, M

    obs = Broken(np.array([3, 0]), 1, 1)
    with pytest.raises(SupportError):
        fit(IntervalPartition.regular(1), obs)


def test_mean_approximant_linear():
    s = PiecewisePolynomial((0, 1), ((0.0, 2.0),))
    got = mean_approximant(IntervalPartition.regular(1), s)
    assert got.levels == pytest.approx((0.5, 1.5))


def test_piecewise_constant_exact():
    s = PiecewiseConstant((0, 0.25, 1), (3.0, 1.0))
    m = IntervalPartition.from_grid([1], 2)
    assert mean_approximant(m, s).levels == (3.0, 1.0)
    assert bias_sq(s, m) == pytest.approx(0.0, abs=1e-15)


def test_vector_hellinger():
    m = VectorPartition.from_cuts(2, [2])
    t = HistogramEstimate(m, (4.0, 1.0))
    u = HistogramEstimate(m, (1.0, 1.0))
    assert hellinger_sq(t, u, provider=None) == 1.0
    assert hellinger_sq(t, t) == 0.0


def _random_estimate(rng, level=5):
    m = random_interval_partition(rng, level)
    return HistogramEstimate(m, tuple(rng.gamma(2.0, 1.0, len(m))))


def test_triangle_like(rng):
    for _ in range(200):
        a, b, c = (_random_estimate(rng) for _ in range(3))
        ab, bc, ac = hellinger_sq(a, b), hellinger_sq(b, c), hellinger_sq(a, c)
        assert ac <= 2 * ab + 2 * bc + 1e-12
        assert hellinger_sq(a, b) == pytest.approx(hellinger_sq(b, a), rel=1e-14)


def test_cross_term_identity(rng):
    # H(a, j) - H(b, j) = H(a, b) + 2 int (sqrt b - sqrt a)(sqrt j - sqrt b) dM
    obs = simulate_density(PiecewiseConstant((0, 0.5, 1), (1.5, 0.5)), 500, seed=4)
    for _ in range(50):
        ma = random_interval_partition(rng, 5)
        mb = random_interval_partition(rng, 5)
        a, b, j = fit(ma, obs), fit(mb, obs), fit(ma.join(mb), obs)
        joint, pa, pb = ma.join_with_parents(mb)
        lam = np.array([float(v.to_fraction() - u.to_fraction()) for u, v in joint.cells])
        cross = math.fsum((2 * (b.roots[pb] - a.roots[pa]) * (j.roots - b.roots[pb]) * lam).tolist())
        lhs = hellinger_sq(a, j) - hellinger_sq(b, j)
        assert lhs == pytest.approx(hellinger_sq(a, b) + cross, rel=1e-10, abs=1e-13)


def test_density_distance_at_most_two():
    obs = simulate_density(Constant(1.0), 30, seed=5)
    a = fit(IntervalPartition.regular(4), obs)
    b = fit(IntervalPartition.from_grid([1], 3), obs)
    assert hellinger_sq(a, b) <= 2.0


def test_root_approximant_attains_bias():
    s = PiecewisePolynomial((0, 0.5, 1), ((1.0, 3.0, 0.0), (0.5, 0.0, 2.0)))
    m = IntervalPartition.from_grid([1, 3, 6], 3)
    best = root_approximant(m, s)
    assert hellinger_to_truth(best, s) == pytest.approx(bias_sq(s, m), rel=1e-9, abs=1e-14)


@given(st.lists(st.integers(1, 31), max_size=5), st.lists(st.integers(1, 31), max_size=5))
def test_bias_nonincreasing_under_refinement(a, b):
    s = PiecewisePolynomial((0, 1), ((0.2, 1.0, 3.0),))
    ma = IntervalPartition.from_grid(a, 5)
    mb = IntervalPartition.from_grid(b, 5)
    assert bias_sq(s, ma.join(mb)) <= bias_sq(s, ma) + 1e-12


def test_mean_approximant_within_twice_bias(rng):
    for _ in range(100):
        coeffs = tuple(tuple(rng.uniform(0, 2, 3)) for _ in range(2))
        s = PiecewisePolynomial((0, Fraction(3, 8), 1), coeffs)
        m = random_interval_partition(rng, 6)
        assert hellinger_to_truth(mean_approximant(m, s), s) <= 2 * bias_sq(s, m) + 1e-12


def test_json_and_step_csv():
    est = HistogramEstimate(IntervalPartition.regular(1), (0.5, 1.5))
    assert HistogramEstimate.from_json(est.to_json()) == est
    assert est.step_csv() == "x,y\n0.0,0.5\n0.5,0.5\n0.5,1.5\n1.0,1.5\n"
