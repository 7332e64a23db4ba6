"""Brute-force and Monte Carlo checks of the estimator's quantitative claims.

All replicate loops derive one seed per replicate from ``(seed, r)``, so the
results do not depend on scheduling or worker counts.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FamilyTooLargeError
from .kernels import family_bias
from .partitions import VectorPartition, as_family
from .selection import PenaltySpec, _context, select

EXHAUSTIVE_CAP = 1000

TAIL_KINDS = ("independent", "one-hot")


def replicate_seed(seed: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(r)])


@dataclass
class RiskEstimate:
    """Mean of ``H^2(s_tilde, s)`` over replicates."""

    mean: float
    stderr: float
    replicates: int
    records: list = field(default_factory=list)

    @classmethod
    def from_values(cls, values, records=None) -> "RiskEstimate":
        v = np.asarray(values, dtype=np.float64)
        n = v.size
        mean = math.fsum(v.tolist()) / n
        sd = float(np.std(v, ddof=1)) if n > 1 else 0.0
        return cls(mean, sd / math.sqrt(n), n, list(records or []))

    def to_json(self, records: bool = False) -> dict:
        out = {"mean": self.mean, "stderr": self.stderr, "replicates": self.replicates}
        if records:
            out["records"] = self.records
        return out


@dataclass
class TailCheck:
    """Empirical exceedance frequencies of a chi-square deviation bound."""

    kind: str
    m_size: int
    x_grid: np.ndarray
    upper: np.ndarray
    lower: np.ndarray | None
    upper_threshold: np.ndarray
    lower_threshold: np.ndarray | None
    replicates: int
    mean_chi2: float | None

    @property
    def bound(self) -> np.ndarray:
        return np.exp(-self.x_grid)

    @property
    def slack(self) -> np.ndarray:
        """Three binomial standard errors at the bound."""
        b = self.bound
        return 3.0 * np.sqrt(b * (1 - b) / self.replicates)

    def passes(self) -> np.ndarray:
        ok = self.upper <= self.bound + self.slack
        if self.lower is not None:
            ok &= self.lower <= self.bound + self.slack
        return ok

    def to_json(self) -> dict:
        ok = self.passes()
        return {"claim": f"chi-square deviation bound ({self.kind})", "pass": bool(ok.all()),
                "empirical": self.upper.tolist(), "stderr": (self.slack / 3).tolist(),
                "kind": self.kind, "m_size": self.m_size, "replicates": self.replicates,
                "mean_chi2": self.mean_chi2, "x": self.x_grid.tolist(), "bound": self.bound.tolist(),
                "upper": self.upper.tolist(), "upper_threshold": self.upper_threshold.tolist(),
                "lower": None if self.lower is None else self.lower.tolist(),
                "lower_threshold": None if self.lower_threshold is None else self.lower_threshold.tolist(),
                "pass_by_x": ok.tolist()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "bound", "upper_threshold", "upper_freq", "lower_threshold", "lower_freq", "pass"])
        for i, x in enumerate(self.x_grid):
            lo_t = "" if self.lower is None else repr(float(self.lower_threshold[i]))
            lo_f = "" if self.lower is None else repr(float(self.lower[i]))
            w.writerow([repr(float(x)), repr(float(self.bound[i])), repr(float(self.upper_threshold[i])),
                        repr(float(self.upper[i])), lo_t, lo_f, bool(self.passes()[i])])
        return buf.getvalue()


def _draw(framework: str, means: np.ndarray, reps: int, rng, trials: int | None):
    if framework == "poisson":
        return rng.poisson(means, size=(reps, means.size)).astype(np.float64)
    p = int(trials)
    probs = means / p
    rest = 1.0 - probs.sum()
    if rest < -1e-12:
        raise ConfigError("means / trials must sum to at most 1 for one-hot rows")
    x = rng.multinomial(p, np.append(probs, max(rest, 0.0)), size=reps)
    return x[:, :-1].astype(np.float64)


def chi2_tail_check(framework: str, m_size: int, means, x_grid, replicates: int, seed,
                    kind: str | None = None, kappa: float = 1.0, tau: float = 1.0,
                    trials: int | None = None, A: float = 1.0) -> TailCheck:
    """Simulate ``chi2(m) = sum_I (sqrt(X_I) - sqrt(E X_I))^2`` and count
    exceedances of the deviation thresholds.

    ``kind="independent"`` (default for ``poisson``): independent Poisson cells, thresholds
    ``E chi2 + K^2 kappa (2 sqrt(2 |m| x) + x)`` above and
    ``E chi2 - 2 K^2 kappa sqrt(2 |m| x)`` below, with ``E chi2`` taken from
    an independent pilot batch of the same size.
    ``kind="one-hot"`` (default for ``vector``): ``X_I`` sums ``trials`` i.i.d.
    one-hot rows with ``P(row hits I) = means_I / trials``, threshold
    ``8 kappa |m| + 202 A x``.
    """
    if framework not in ("poisson", "vector"):
        raise ConfigError("framework must be poisson or vector")
    if replicates < 1000:
        raise ConfigError("tail checks need at least 1000 replicates")
    kind = kind or ("independent" if framework == "poisson" else "one-hot")
    if kind not in TAIL_KINDS:
        raise ConfigError(f"kind must be one of {TAIL_KINDS}")
    mu = np.broadcast_to(np.asarray(means, dtype=np.float64), (m_size,)).copy()
    if np.any(mu < 0):
        raise ConfigError("means must be nonnegative")
    if kind == "one-hot" and trials is None:
        trials = max(1, int(math.ceil(mu.sum())))
    x = np.asarray(x_grid, dtype=np.float64)
    if np.any(x <= 0):
        raise ConfigError("x values must be positive")
    pilot_seq, main_seq = np.random.SeedSequence(seed).spawn(2)
    root_mu = np.sqrt(mu)

    def chi2(rng):
        X = _draw("poisson" if kind == "independent" else "vector", mu, replicates, rng, trials)
        return np.sum((np.sqrt(X) - root_mu) ** 2, axis=1)

    values = chi2(np.random.default_rng(main_seq))
    if kind == "independent":
        pilot = chi2(np.random.default_rng(pilot_seq))
        mean = math.fsum(pilot.tolist()) / pilot.size
        K2 = max(math.sqrt(2.0), math.sqrt(2.0) / 2 + math.sqrt(max(tau / kappa - 0.5, 0.0))) ** 2
        up = mean + K2 * kappa * (2 * np.sqrt(2 * m_size * x) + x)
        lo = mean - 2 * K2 * kappa * np.sqrt(2 * m_size * x)
        upper = (values[None, :] >= up[:, None]).mean(axis=1)
        lower = (values[None, :] <= lo[:, None]).mean(axis=1)
        return TailCheck("independent", m_size, x, upper, lower, up, lo, replicates, mean)
    up = 8 * kappa * m_size + 202 * A * x
    upper = (values[None, :] >= up[:, None]).mean(axis=1)
    return TailCheck("one-hot", m_size, x, upper, None, up, None, replicates, None)


# ---------------------------------------------------------------------------
@dataclass
class OracleVerdict:
    risk: RiskEstimate
    bound: float
    inf_term: float
    sigma: float
    best_model_risk: float
    ratio: float
    claim: str = "oracle inequality"

    @property
    def passed(self) -> bool:
        return self.risk.mean + 2 * self.risk.stderr <= self.bound

    def to_json(self, records: bool = False) -> dict:
        return {"claim": self.claim, "bound": self.bound, "empirical": self.risk.mean,
                "stderr": self.risk.stderr, "pass": self.passed, "replicates": self.risk.replicates,
                "inf_term": self.inf_term, "sigma": self.sigma,
                "best_model_risk": self.best_model_risk, "ratio": self.ratio,
                **({"records": self.risk.records} if records else {})}


def _atom_level(fam):
    return None if fam.packed.kind == "vector" else fam.packed.atom_level


def oracle_inequality_check(scenario, family=None, spec: PenaltySpec | None = None,
                            replicates: int | None = None, seed: int | None = None, weights=None,
                            workers: int = 1, backend: str | None = None) -> OracleVerdict:
    """Monte Carlo risk of the selected estimator against the risk bound.

    ``scenario`` is an :class:`phest.config.ExperimentConfig`; missing
    arguments default to its values. The per-model risks of every ``s_m``
    are averaged over the same replicates to form the ratio
    ``mean risk(s_tilde) / min_m mean risk(s_m)``.
    """
    cfg = scenario
    fam = as_family(family if family is not None else cfg.build_family())
    spec = spec or cfg.penalty_spec()
    weights = weights or cfg.weight_scheme()
    replicates = replicates or cfg.replicates
    seed = cfg.seed if seed is None else seed
    s = cfg.build_intensity()
    deltas = fam.weights(weights)
    pens = spec.penalties(fam.packed.sizes, deltas)
    sigma = fam.sigma(weights)
    level = _atom_level(fam)
    survival = cfg.framework == "survival"
    if survival:
        from .observations import _grid
        g = _grid(level)
        lam = np.diff(g)
        bias = cfg.n * family_bias(fam.packed, s.root_integral(g[:-1], g[1:]), s.integral(g[:-1], g[1:]), lam)
        inf_term = float(np.min(bias + pens))
    risks, records, inf_terms = [], [], []
    model_sum = np.zeros(len(fam))
    for r in range(replicates):
        obs = cfg.simulate(replicate_seed(seed, r), family=fam)
        ctx = _context(fam, obs, backend)
        rep = select(fam, obs, spec, weights, context=ctx, deltas=deltas, workers=workers,
                     max_pairs=cfg.max_pairs, method=cfg.method)
        R, S = obs.truth_masses(s, level)
        per_model = np.maximum(ctx.risk(R, S, workers), 0.0)
        model_sum += per_model
        risk = float(per_model[rep.selected])
        if not survival and r == 0:
            inf_term = float(np.min(family_bias(fam.packed, R, S, ctx.M) + pens))
        inf_terms.append(inf_term)
        risks.append(risk)
        records.append({"replicate": r, "selected": rep.selected, "partition": rep.partition.to_json(),
                        "risk": risk, "D_selected": float(rep.D[rep.selected])})
    est = RiskEstimate.from_values(risks, records)
    inf_mean = math.fsum(inf_terms) / len(inf_terms)
    bound = spec.risk_bound(inf_mean, sigma)
    best = float(np.min(model_sum / replicates))
    ratio = est.mean / best if best > 0 else (1.0 if est.mean == 0 else math.inf)
    return OracleVerdict(est, bound, inf_mean, sigma, best, ratio)


# ---------------------------------------------------------------------------
@dataclass
class MonotoneFit:
    partition: VectorPartition
    levels: tuple
    g: np.ndarray
    error: float
    bound: float


def monotone_partition(f_values, D: int, literal: bool = False) -> MonotoneFit:
    """Piecewise-constant lower approximation of a nondecreasing ``f``.

    Block starts ``j_k`` are the first indices where ``sqrt(f)`` exceeds its
    value at the previous start by more than ``R / D`` (no such index means
    ``n``); the level on each block is ``f`` at its start.

    When ``n`` itself is reached by such an exceedance, ``{n}`` becomes its
    own block, otherwise ``n`` would sit more than ``R / D`` above its level
    and the error bound can fail. ``literal=True`` keeps the unamended
    construction for comparison.
    """
    f = np.asarray(f_values, dtype=np.float64)
    n = f.size
    if n < 1 or not 1 <= D <= n:
        raise ConfigError("D must lie in {1..n}")
    if np.any(np.diff(f) < 0) or np.any(f < 0):
        raise ConfigError("f must be nonnegative and nondecreasing")
    r = np.sqrt(f)
    R = float(r[-1] - r[0])
    step = R / D
    starts = [0]
    while True:
        prev = starts[-1]
        above = np.flatnonzero(r[prev + 1:] - r[prev] > step)
        if above.size == 0:
            break
        j = prev + 1 + int(above[0])
        if j == n - 1:
            if not literal:
                starts.append(j)
            break
        starts.append(j)
    labels = np.zeros(n, dtype=np.int64)
    for k, st in enumerate(starts):
        labels[st:] = k
    levels = tuple(float(f[st]) for st in starts)
    g = np.asarray(levels)[labels]
    err = math.fsum(((r - np.sqrt(g)) ** 2).tolist())
    return MonotoneFit(VectorPartition.from_labels(labels), levels, g, err, n * R * R / (D * D))


def exhaustive_best_model(family, obs, s, backend: str | None = None):
    """``argmin_m H^2(s_m, s)`` over a small family, with all the risks."""
    fam = as_family(family)
    if len(fam) > EXHAUSTIVE_CAP:
        raise FamilyTooLargeError(f"exhaustive search is limited to {EXHAUSTIVE_CAP} models")
    ctx = _context(fam, obs, backend)
    R, S = obs.truth_masses(s, _atom_level(fam))
    risks = np.maximum(ctx.risk(R, S), 0.0)
    return fam[int(np.argmin(risks))], risks
