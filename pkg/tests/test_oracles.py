import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phest.config import ExperimentConfig
from phest.errors import ConfigError
from phest.estimation import fit, hellinger_to_truth
from phest.observations import PiecewiseConstant, simulate_density
from phest.oracles import (RiskEstimate, chi2_tail_check, exhaustive_best_model, monotone_partition,
                           oracle_inequality_check)
from phest.partitions import IntervalFamily, IntervalPartition


def test_risk_estimate_stderr():
    est = RiskEstimate.from_values([0.1, 0.3, 0.2, 0.4])
    assert est.mean == pytest.approx(0.25)
    assert est.stderr == pytest.approx(np.std([0.1, 0.3, 0.2, 0.4], ddof=1) / 2)


# chi-square tails ------------------------------------------------------------
def test_tail_zero_means():
    tc = chi2_tail_check("poisson", 4, 0.0, [0.5, 1, 2], 1000, seed=1)
    assert np.all(tc.upper == 0)


def test_tail_poisson_example():
    tc = chi2_tail_check("poisson", 8, 5.0, [0.5, 1.0, 2.0], 10_000, seed=2)
    assert tc.upper[1] <= math.exp(-1)
    assert tc.passes().all()
    assert np.all(np.diff(tc.upper) <= 0) and np.all((tc.upper >= 0) & (tc.upper <= 1))
    assert np.all(np.diff(tc.lower) <= 0)
    # E chi2 for Poisson(5) cells is below 8 * 1/4-ish per cell
    assert 0 < tc.mean_chi2 < 8 * 0.5


def test_tail_bernoulli_rows():
    tc = chi2_tail_check("vector", 8, 0.5, [0.5, 1.0, 2.0], 10_000, seed=3, trials=50)
    assert tc.kind == "one-hot" and tc.lower is None
    assert np.all(tc.upper <= np.exp(-tc.x_grid))
    assert tc.upper_threshold.tolist() == [8 * 8 + 101, 8 * 8 + 202, 8 * 8 + 404]


def test_tail_errors():
    with pytest.raises(ConfigError):
        chi2_tail_check("poisson", 8, 5.0, [1.0], 999, seed=0)
    with pytest.raises(ConfigError):
        chi2_tail_check("vector", 2, 0.9, [1.0], 1000, seed=0, trials=1)


def test_tail_outputs_deterministic():
    a = chi2_tail_check("poisson", 3, 2.0, [1.0, 2.0], 1000, seed=7)
    b = chi2_tail_check("poisson", 3, 2.0, [1.0, 2.0], 1000, seed=7)
    assert json.dumps(a.to_json()) == json.dumps(b.to_json())
    assert a.to_csv() == b.to_csv() and a.to_csv().count("\n") == 3


# monotone approximation ------------------------------------------------------
def test_monotone_constant():
    fit_ = monotone_partition([3.0] * 10, 4)
    assert len(fit_.partition) == 1 and fit_.error == 0


def test_monotone_identity_by_hand():
    fit_ = monotone_partition(np.arange(1, 17), 4)
    assert fit_.levels == (1.0, 4.0, 8.0, 13.0)
    blocks = [(1, 3), (4, 7), (8, 12), (13, 16)]
    want = math.fsum((math.sqrt(i) - math.sqrt(a)) ** 2 for a, b in blocks for i in range(a, b + 1))
    assert fit_.error == pytest.approx(want, rel=1e-14)
    assert fit_.bound == 9.0 and fit_.error <= 9.0


def test_monotone_end_exceedance():
    amended = monotone_partition([0.0, 1.0], 2)
    assert amended.error == 0 and len(amended.partition) == 2
    literal = monotone_partition([0.0, 1.0], 2, literal=True)
    assert literal.error == 1.0 > literal.bound == 0.5


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=40), st.data())
def test_monotone_bound_property(vals, data):
    f = np.sort(np.asarray(vals))
    D = data.draw(st.integers(1, f.size))
    out = monotone_partition(f, D)
    assert out.error <= out.bound * (1 + 1e-12) + 1e-12
    assert len(out.partition) <= D
    assert np.all(out.g <= f)


def test_monotone_full_resolution():
    f = np.cumsum(np.random.default_rng(0).exponential(size=12))
    out = monotone_partition(f, 12)
    assert out.error <= out.bound


def test_monotone_rejects_decreasing():
    with pytest.raises(ConfigError):
        monotone_partition([2.0, 1.0], 1)


# exhaustive search -----------------------------------------------------------
STEP = PiecewiseConstant((0, 0.25, 1), (2.2, 0.6))


def test_exhaustive_singleton():
    obs = simulate_density(STEP, 100, seed=1)
    m = IntervalPartition.regular(2)
    best, risks = exhaustive_best_model([m], obs, STEP)
    assert best == m and risks.size == 1


def test_exhaustive_large_n_finds_true_cells():
    obs = simulate_density(STEP, 500_000, seed=2)
    best, _ = exhaustive_best_model(IntervalFamily(3, 3), obs, STEP)
    assert best.refines(IntervalPartition.from_grid([1], 2))


def test_exhaustive_matches_recomputation():
    obs = simulate_density(STEP, 300, seed=3)
    fam = IntervalFamily(3, 4)
    _, risks = exhaustive_best_model(fam, obs, STEP)
    want = [hellinger_to_truth(fit(m, obs), STEP) for m in fam]
    np.testing.assert_allclose(risks, want, rtol=1e-9, atol=1e-13)


# oracle inequality -----------------------------------------------------------
def _cfg(**kw):
    return ExperimentConfig.from_dict(kw)


def test_oracle_poisson_zero():
    cfg = _cfg(framework="poisson", intensity={"type": "constant", "value": 0.0},
               family={"type": "regular", "max_level": 3}, replicates=5)
    v = oracle_inequality_check(cfg)
    assert v.risk.mean == 0 and v.passed


def test_oracle_poisson_constant():
    cfg = _cfg(framework="poisson", intensity={"type": "constant", "value": 5.0},
               family={"type": "regular", "max_level": 6}, replicates=100, seed=4)
    v = oracle_inequality_check(cfg)
    assert v.passed
    body = v.to_json()
    assert {"claim", "bound", "empirical", "stderr", "pass"} <= set(body)


def test_oracle_density_bound():
    cfg = _cfg(framework="density", n=1000,
               intensity={"type": "piecewise-constant", "breaks": [0, 0.25, 0.5, 0.75, 1],
                          "values": [1.6, 0.4, 1.2, 0.8]},
               family={"type": "interval", "max_level": 3, "max_cells": 4}, replicates=40, seed=5)
    v = oracle_inequality_check(cfg)
    assert v.passed and v.bound <= 2.0
    assert v.best_model_risk <= v.risk.mean
