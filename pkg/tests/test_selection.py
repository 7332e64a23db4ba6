import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phest.errors import ConfigError, FamilyTooLargeError, PartitionError, PenaltyError, PhestError
from phest.estimation import fit, hellinger_sq
from phest.observations import (Constant, DensitySample, PiecewiseConstant, simulate_density,
                                simulate_vector)
from phest.partitions import IntervalFamily, IntervalPartition, ListFamily, WeightScheme
from phest.selection import PenaltySpec, penalty, phe_pipeline, select
from phest.selection import test_statistic as t_stat

M0 = IntervalPartition.trivial()
M1 = IntervalPartition.regular(1)
DYADIC = WeightScheme("dyadic")


# penalties -------------------------------------------------------------------
def test_density_penalty_example():
    spec = PenaltySpec("density", n=100)
    assert penalty(IntervalPartition.regular(2), spec, lambda m: 8.0) == pytest.approx(16.48, rel=1e-14)


def test_poisson_penalty_example():
    assert penalty(M0, PenaltySpec("poisson"), DYADIC) == 9.0


def test_vector_matches_poisson_at_unit_constants():
    vec, poi = PenaltySpec("vector", kappa=1, tau=1), PenaltySpec("poisson")
    assert vec.K ** 2 == pytest.approx(2.0, rel=1e-15)
    sizes, deltas = np.arange(1, 30), np.linspace(1, 40, 29)
    np.testing.assert_allclose(vec.penalties(sizes, deltas), poi.penalties(sizes, deltas), rtol=1e-14)


def test_vector_K_large_tau():
    spec = PenaltySpec("vector", kappa=1, tau=4.5)
    assert spec.K == pytest.approx(math.sqrt(2) / 2 + 2)


def test_counting_penalty():
    spec = PenaltySpec("counting", k=1, kappa_prime=2, gamma=1.0)
    # 16 * 1 * 3 + 404 * (1 + 1) * 1
    assert spec.penalties([1], [1.0])[0] == 48 + 808
    assert spec.constants() == {"a": 2.0, "b": 808.0, "c": 48.0}


def test_penalty_floor():
    with pytest.raises(PenaltyError):
        PenaltySpec("poisson", c2=5.0)
    assert PenaltySpec("poisson", c2=5.0, unsafe=True).coefficients == (3.0, 5.0)
    assert PenaltySpec("poisson", c1=4.0).coefficients == (4.0, 6.0)
    with pytest.raises(ConfigError):
        PenaltySpec("counting")
    with pytest.raises(ConfigError):
        PenaltySpec("density")


def test_default_eps():
    assert PenaltySpec("density", n=250).eps == 1 / 250
    assert PenaltySpec("poisson").eps == 1.0
    assert PenaltySpec("vector").eps == 1.0


def test_risk_bound_density_cap():
    spec = PenaltySpec("density", n=1000)
    assert spec.risk_bound(1.0, 0.1) == 2.0
    assert spec.risk_bound(1e-4, 0.1) == pytest.approx(390 * (1e-4 + 101 * 0.01 / 1000) + 1e-3)


# test statistic --------------------------------------------------------------
OBS = simulate_density(PiecewiseConstant((0, 0.5, 1), (1.6, 0.4)), 300, seed=21)
SPEC = PenaltySpec("density", n=300)


def test_statistic_same_model():
    assert t_stat(M1, M1, OBS, SPEC, DYADIC) == 0.0


def test_statistic_nested():
    fine = IntervalPartition.from_grid([1, 2], 2)
    p0, p1 = penalty(M0, SPEC, DYADIC), penalty(fine, SPEC, DYADIC)
    want = hellinger_sq(fit(M0, OBS), fit(fine, OBS)) + 16 * (p0 - p1)
    assert t_stat(M0, fine, OBS, SPEC, DYADIC) == pytest.approx(want, rel=1e-12)


def test_statistic_antisymmetric(rng):
    fam = IntervalFamily(3, 4)
    for _ in range(50):
        i, j = (int(v) for v in rng.integers(0, len(fam), 2))
        a = t_stat(fam[i], fam[j], OBS, SPEC, DYADIC)
        b = t_stat(fam[j], fam[i], OBS, SPEC, DYADIC)
        assert a == -b


@settings(max_examples=40)
@given(st.integers(0, 63), st.integers(0, 63), st.floats(1.0, 50.0))
def test_penalty_scaling_shrinks_rejections(i, j, factor):
    fam = IntervalFamily(3, 4)
    m, m2 = fam[i], fam[j]
    if penalty(m, SPEC, DYADIC) > penalty(m2, SPEC, DYADIC):
        m, m2 = m2, m
    c1, c2 = SPEC.coefficients
    big = PenaltySpec("density", n=300, c1=c1 * factor, c2=c2 * factor)
    if t_stat(m, m2, OBS, big, DYADIC) > 0:
        assert t_stat(m, m2, OBS, SPEC, DYADIC) > 0


# selection -------------------------------------------------------------------
def test_singleton_family():
    rep = select([M1], OBS, SPEC, DYADIC)
    assert rep.selected == 0 and rep.D.tolist() == [0.0]
    with pytest.raises(PartitionError):
        select([], OBS, SPEC, DYADIC)


def test_report_invariants():
    fam = IntervalFamily(3, 5)
    rep = select(fam, OBS, PenaltySpec("density", n=300, c1=0.001, c2=0.001, unsafe=True), DYADIC)
    F = len(fam)
    np.testing.assert_array_equal(rep.T, -rep.T.T)
    assert not rep.reject[np.arange(F), np.arange(F)].any()
    np.testing.assert_array_equal(rep.reject, rep.T > 0)
    assert rep.D[rep.selected] <= rep.min_D + rep.spec.eps / 3
    assert rep.selected == rep.admissible[0]
    for j in rep.rejection_set(rep.selected):
        assert rep.H[rep.selected, j] <= rep.D[rep.selected]
    for i in range(F):
        r = rep.rejection_set(i)
        assert rep.D[i] == (max(rep.H[i, r]) if r else 0.0)
    # with tiny penalties some model must have been rejected
    assert rep.reject.any()


def test_ties_do_not_reject():
    obs = DensitySample(np.array([0.1, 0.6]))
    spec = PenaltySpec("density", n=2, c1=0.0, c2=0.0, unsafe=True)
    rep = select([M0, M1], obs, spec, DYADIC)
    assert not rep.reject.any() and rep.selected == 0
    rnd = select([M0, M1], obs, spec, DYADIC, randomize_ties=True, tie_seed=3)
    assert rnd.reject[0, 1] != rnd.reject[1, 0]
    with pytest.raises(ConfigError):
        select([M0, M1], obs, spec, DYADIC, method="pruned", randomize_ties=True)


def test_max_pairs():
    fam = IntervalFamily(3, 5)
    with pytest.raises(FamilyTooLargeError):
        select(fam, OBS, SPEC, DYADIC, method="full", max_pairs=100)
    rep = select(fam, OBS, SPEC, DYADIC, max_pairs=100)
    assert rep.method == "pruned" and rep.T is None
    with pytest.raises(PhestError):
        rep.t_matrix_csv()


def test_report_serialization():
    rep = select(IntervalFamily(2, 3), OBS, SPEC, DYADIC)
    body = json.loads(rep.dumps())
    assert body["selected"] == rep.selected and body["n_models"] == 7
    assert len(body["rejections"]) == 7 and "timing" not in body
    rows = rep.t_matrix_csv().strip().split("\n")
    assert len(rows) == 8 and rows[0].startswith("i,0,1")
    assert float(rows[2].split(",")[1]) == rep.T[1, 0]


def test_two_model_monte_carlo():
    spec = PenaltySpec("density", n=10_000)
    hits = sum(select([M0, M1], simulate_density(Constant(1.0), 10_000, seed=r), spec, DYADIC).selected == 0
               for r in range(200))
    assert hits >= 180


# pipeline --------------------------------------------------------------------
STEP = {"type": "piecewise-constant", "breaks": [0, 0.5, 1], "values": [2.0, 0.0]}


def _jump_hits(n, replicates):
    cfg = {"framework": "density", "n": n, "intensity": STEP,
           "family": {"type": "interval", "max_level": 2, "max_cells": 4}}
    hits = 0
    for r in range(replicates):
        est, _ = phe_pipeline(cfg, seed=r)
        hits += 0.5 in [float(p.to_fraction()) for p in est.partition.interior]
    return hits


@pytest.mark.xfail(strict=True, reason="minimal density penalty hides any jump at n = 1e4; see ledger")
def test_pipeline_recovers_jump_at_1e4():
    assert _jump_hits(10_000, 100) >= 80


def test_pipeline_recovers_jump_at_larger_n():
    # 16 * (pen(m_1) - pen(m_0)) = 16 * 614 / n falls below H^2(1, s) ~ 0.586 for n >~ 1.7e4
    assert _jump_hits(40_000, 100) >= 80


def test_pipeline_survival():
    cfg = {"framework": "survival", "n": 1000, "intensity": {"type": "constant", "value": 1.0},
           "family": {"type": "interval", "max_level": 3, "max_cells": 3}, "penalty": {"gamma": 1.0}}
    close = 0
    for r in range(50):
        est, _ = phe_pipeline(cfg, seed=r)
        close += abs(est.levels[int(np.argmax(est.partition.lengths))] - 1) <= 0.2
    assert close >= 45


def test_pipeline_poisson_zero():
    cfg = {"framework": "poisson", "intensity": {"type": "constant", "value": 0.0},
           "family": {"type": "regular", "max_level": 4}}
    est, rep = phe_pipeline(cfg, seed=0)
    assert all(v == 0 for v in est.levels)


def test_pipeline_stage_annotation():
    cfg = {"framework": "vector", "intensity": {"type": "vector", "values": [1.0, 2.0]},
           "family": {"type": "vector-interval"}, "method": "full", "max_pairs": 1}
    cfg["intensity"]["values"] = [1.0] * 6
    with pytest.raises(FamilyTooLargeError, match=r"^\[selection\]"):
        phe_pipeline(cfg, seed=0)
