import math

import numpy as np
import pytest

from phest.errors import ConfigError
from phest.observations import (
    Constant,
    PiecewiseConstant,
    PiecewisePolynomial,
    PowerRoot,
    SpikyCube,
    load_jsonl,
    simulate_density,
    simulate_poisson,
    simulate_survival,
    simulate_vector,
)
from phest.partitions import DyadicCube, IntervalPartition


def test_density_total_mass():
    obs = simulate_density(Constant(1.0), 37, seed=1)
    N, M = obs.cell_masses(IntervalPartition.trivial())
    assert N[0] == 1.0 and M[0] == 1.0


def test_density_half_mass():
    s = PiecewiseConstant((0, 0.5, 1), (2.0, 0.0))
    obs = simulate_density(s, 100_000, seed=2)
    N, _ = obs.cell_masses(IntervalPartition.regular(1))
    assert N[0] == 1.0 and N[1] == 0.0


def test_density_rejects_non_density():
    with pytest.raises(ConfigError):
        simulate_density(Constant(2.0), 10, seed=0)


def test_density_cdf_band():
    s = PowerRoot.density(1.0, 3.0)
    n = 20_000
    obs = simulate_density(s, n, seed=3)
    grid = np.arange(1, 64) / 64
    emp = np.searchsorted(np.sort(obs.x), grid) / n
    assert np.max(np.abs(emp - s.cdf(grid))) < 3 * math.sqrt(math.log(n) / n)


def test_poisson_zero_and_moments():
    assert simulate_poisson(Constant(0.0), seed=1, level=4).counts.sum() == 0
    tot = np.array([simulate_poisson(Constant(5.0), seed=r, level=3).counts.sum() for r in range(10_000)])
    se = math.sqrt(5 / tot.size)
    assert abs(tot.mean() - 5) < 3 * se
    assert abs(tot.var() - 5) < 3 * 5 * math.sqrt(2 / tot.size) + 0.1


def test_poisson_disjoint_cells_uncorrelated():
    c = np.array([simulate_poisson(Constant(5.0), seed=r, level=1).counts for r in range(10_000)])
    assert abs(np.corrcoef(c[:, 0], c[:, 1])[0, 1]) < 0.05


def test_vector_laws():
    assert np.all(simulate_vector([0.0] * 5, "poisson", seed=1).values == 0)
    means = np.array([simulate_vector([3.0], "poisson", seed=r).values[0] for r in range(10_000)])
    assert abs(means.mean() - 3) < 3 * math.sqrt(3 / 10_000)
    b = simulate_vector([2.0, 4.0], "binomial", seed=1, trials=[10, 10])
    assert np.all(b.values <= 10)
    with pytest.raises(ConfigError):
        simulate_vector([-1.0], "poisson", seed=1)


def test_survival_no_censoring():
    obs = simulate_survival(Constant(1.0), None, 500, seed=4)
    assert np.all(obs.events == 1)


def test_survival_at_risk_integral():
    obs = simulate_survival(Constant(1.0), {"type": "uniform", "low": 0.0, "high": 2.0}, 300, seed=5)
    _, M = obs.cell_masses(IntervalPartition.trivial())
    assert M[0] == pytest.approx(math.fsum(np.minimum(obs.times, 1.0).tolist()), rel=1e-12)
    N, _ = obs.cell_masses(IntervalPartition.trivial())
    assert N[0] == np.sum((obs.events == 1) & (obs.times < 1))
    y = obs.at_risk(np.linspace(0, 1, 50))
    assert np.all(np.diff(y) <= 0) and y.max() <= obs.n


def test_survival_unit_hazard_integral():
    s = Constant(1.0)
    assert s.total == pytest.approx(-math.log(math.exp(-1.0)))


@pytest.mark.parametrize("make", [
    lambda: simulate_density(Constant(1.0), 20, seed=9),
    lambda: simulate_poisson(Constant(3.0), seed=9, level=3),
    lambda: simulate_vector([1.0, 2.0, 0.5], "gamma", seed=9),
    lambda: simulate_survival(Constant(1.0), {"type": "exponential", "rate": 1.0}, 20, seed=9),
])
def test_jsonl_roundtrip_and_determinism(make):
    a, b = make(), make()
    assert a.dumps() == b.dumps()
    back = load_jsonl(a.dumps())
    assert back.dumps() == a.dumps()


def test_additivity():
    obs = simulate_poisson(Constant(7.0), seed=1, level=6)
    m = IntervalPartition.from_grid([5, 17, 40], 6)
    N, M = obs.cell_masses(m)
    N0, M0 = obs.cell_masses(IntervalPartition.trivial())
    assert N.sum() == N0[0] and math.fsum(M.tolist()) == pytest.approx(M0[0], rel=1e-12)


def test_polynomial_integrals():
    s = PiecewisePolynomial((0, 1), ((0.0, 2.0),))
    assert s.integral(0.0, 0.5) == pytest.approx(0.25)
    # int_0^1 sqrt(2x) dx = 2 sqrt(2) / 3
    assert s.root_integral(0.0, 1.0) == pytest.approx(2 * math.sqrt(2) / 3, abs=1e-9)


def test_spiky_cube_integrals():
    s = SpikyCube(2, (DyadicCube(2, (1, 1)),), outside=1.0, base=1.0, R=0.0)
    S, R = s.atom_integrals(3)
    assert S.sum() == pytest.approx(1.0) and R.sum() == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        s.atom_integrals(1)
