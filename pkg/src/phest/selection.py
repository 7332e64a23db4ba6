"""Penalties, pairwise tests and the choice of the selected partition.

For models ``m, m'`` the test statistic is

    T(m, m') = H^2(s_m, s_{m v m'}) - H^2(s_m', s_{m v m'}) + 16 [pen(m) - pen(m')]

``R_m = {m' != m : T(m, m') > 0}``, ``D(m) = max_{m' in R_m} H^2(s_m, s_m')``
(0 when ``R_m`` is empty) and the selected model is the first one, in
family order, with ``D(m) <= min D + eps / 3``.

Two exact strategies compute ``D``:

``full``
    every pair is evaluated; the report keeps the ``T`` and ``H`` matrices.
``pruned``
    used for large families. ``|H^2 diff| <= 2 N(X)``, so only models with
    ``16 (pen(m') - pen(m)) < 2 N(X)`` can reject ``m``. Candidates are
    scanned by increasing penalty and a model is dropped as soon as its
    running ``D`` exceeds ``D(m_seed) + eps / 3``, which no admissible model
    can. Every model that is not dropped gets its exact ``D``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, FamilyTooLargeError, PenaltyError, PhestError
from .estimation import HistogramEstimate
from .kernels import PairContext, backend_name
from .partitions import Family, ListFamily, WeightScheme, as_family

FRAMEWORKS = ("density", "poisson", "vector", "counting")
DEFAULT_MAX_PAIRS = 5_000_000
SLACK_REL = 1e-9


@dataclass(frozen=True)
class PenaltySpec:
    """Framework constants and the penalty ``c1 |m| + c2 * w * Delta_m``.

    ``w`` is 1 except in the counting framework, where weights enter as
    ``Delta'_m = (1 + Gamma / k) Delta_m`` for a known bound ``Gamma`` on
    ``int s d lambda``. Coefficients ``c1``, ``c2`` default to the minimal
    admissible values; smaller overrides need ``unsafe=True``.
    """

    framework: str
    delta: float = 1.0
    n: int | None = None
    kappa: float = 1.0
    tau: float = 1.0
    k: int = 1
    kappa_prime: float = 2.0
    gamma: float | None = None
    c1: float | None = None
    c2: float | None = None
    epsilon: float | None = None
    unsafe: bool = False

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ConfigError(f"framework must be one of {FRAMEWORKS}, got {self.framework!r}")
        if self.delta < 1:
            raise PenaltyError("delta must be at least 1")
        if self.framework == "density" and not self.n:
            raise ConfigError("density penalties need the sample size n")
        if self.framework == "counting":
            if self.gamma is None or self.gamma < 0:
                raise ConfigError("counting penalties need a bound gamma >= 0 on int s")
            if self.k < 1 or self.kappa_prime <= 0:
                raise ConfigError("counting penalties need k >= 1 and kappa' > 0")
        if self.framework == "vector" and (self.kappa <= 0 or self.tau < 0):
            raise ConfigError("vector penalties need kappa > 0 and tau >= 0")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        lo1, lo2 = self.minimal_coefficients()
        for name, val, lo in (("c1", self.c1, lo1), ("c2", self.c2, lo2)):
            if val is not None and val < lo * (1 - 1e-12) and not self.unsafe:
                raise PenaltyError(f"{name}={val} is below the admissible minimum {lo}")

    @property
    def K(self) -> float:
        if self.tau <= self.kappa:
            return math.sqrt(2.0)
        return math.sqrt(2.0) / 2 + math.sqrt(self.tau / self.kappa - 0.5)

    def minimal_coefficients(self) -> tuple[float, float]:
        fw, d = self.framework, self.delta
        if fw == "density":
            return 8 * d / self.n, 202 / self.n
        if fw == "poisson":
            return 3 * d, 6.0
        if fw == "vector":
            K2 = self.K ** 2
            return self.kappa * d * (1 + K2), 3 * self.kappa * K2
        return 16 * d * (self.k + self.kappa_prime), 404.0 * self.k

    @property
    def coefficients(self) -> tuple[float, float]:
        lo1, lo2 = self.minimal_coefficients()
        return (lo1 if self.c1 is None else self.c1, lo2 if self.c2 is None else self.c2)

    @property
    def weight_factor(self) -> float:
        return 1.0 + self.gamma / self.k if self.framework == "counting" else 1.0

    @property
    def eps(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return 1.0 / self.n if self.framework == "density" else 1.0

    def constants(self) -> dict:
        """Read-only ``(a, b, c)`` of the generic deviation assumption."""
        fw = self.framework
        if fw == "density":
            return {"a": 1.0, "b": 202 / self.n, "c": 8 / self.n}
        if fw == "poisson":
            return {"a": 1.0, "b": 6.0, "c": 3.0}
        if fw == "vector":
            K2 = self.K ** 2
            return {"a": 1.0, "b": 3 * K2 * self.kappa, "c": (1 + K2) * self.kappa}
        return {"a": 2.0, "b": 404.0 * self.k * self.weight_factor, "c": 16.0 * (self.k + self.kappa_prime)}

    def remainder(self, sigma: float) -> float:
        """Additive complexity term of the risk bound."""
        fw = self.framework
        if fw == "density":
            return 101 * sigma ** 2 / self.n
        if fw == "poisson":
            return 3 * sigma ** 2
        if fw == "vector":
            return 1.5 * self.kappa * self.K ** 2 * sigma ** 2
        # 404 k / eta * Sigma'(eta)^2 with eta^-1 <= 1 + Gamma / k and Sigma'(eta) <= Sigma
        return 404 * self.k * self.weight_factor * sigma ** 2

    def risk_bound(self, inf_term: float, sigma: float) -> float:
        """``390 (inf_m {bias + pen} + remainder) + eps`` (capped at 2 for densities)."""
        bound = 390 * (inf_term + self.remainder(sigma)) + self.eps
        return min(bound, 2.0) if self.framework == "density" else bound

    def penalties(self, sizes, deltas) -> np.ndarray:
        c1, c2 = self.coefficients
        return c1 * np.asarray(sizes, dtype=np.float64) + c2 * self.weight_factor * np.asarray(deltas)

    def to_json(self) -> dict:
        c1, c2 = self.coefficients
        return {"framework": self.framework, "delta": self.delta, "n": self.n, "kappa": self.kappa,
                "tau": self.tau, "K": self.K, "k": self.k, "kappa_prime": self.kappa_prime,
                "gamma": self.gamma, "c1": c1, "c2": c2, "epsilon": self.eps, "unsafe": self.unsafe,
                "constants": self.constants()}


def framework_of(obs) -> str:
    fw = obs.framework
    return "counting" if fw == "survival" else fw


def penalty(m, spec: PenaltySpec, weights: WeightScheme) -> float:
    return float(spec.penalties([len(m)], [weights(m)])[0])


# ---------------------------------------------------------------------------
def _context(fam: Family, obs, backend=None) -> PairContext:
    level = fam.packed.atom_level
    if fam.packed.kind == "vector":
        N, M = obs.atom_masses(None)
    else:
        N, M = obs.atom_masses(level)
    return PairContext(fam.packed, N, M, backend=backend)


def test_statistic(m, m2, obs, spec: PenaltySpec, weights: WeightScheme, backend=None) -> float:
    """``T(m, m')``, exactly antisymmetric in its two partition arguments."""
    if m == m2:
        return 0.0
    ctx = _context(ListFamily([m, m2]), obs, backend)
    hij, hji, _ = ctx.pair(0, 1)
    p = spec.penalties([len(m), len(m2)], [weights(m), weights(m2)])
    return (hij - hji) + 16.0 * (p[0] - p[1])


@dataclass
class SelectionReport:
    """Everything the selection step computed.

    ``exact[i]`` is False for models the pruned strategy dropped; their
    ``D`` is a lower bound that already exceeds the admissibility
    threshold. ``T``, ``H`` and ``reject`` are only kept by the full
    strategy (``reject[i, j]`` means ``j`` is in ``R_i``).
    """

    family: Family
    selected: int
    D: np.ndarray
    exact: np.ndarray
    penalties: np.ndarray
    weights: np.ndarray
    spec: PenaltySpec
    scheme: WeightScheme
    method: str
    T: np.ndarray | None = None
    H: np.ndarray | None = None
    reject: np.ndarray | None = None
    timing: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def partition(self):
        return self.family[self.selected]

    @property
    def min_D(self) -> float:
        return float(self.D[self.exact].min())

    @property
    def admissible(self) -> np.ndarray:
        return np.flatnonzero(self.exact & (self.D <= self.min_D + self.spec.eps / 3))

    def rejection_set(self, i: int) -> list[int]:
        if self.reject is None:
            raise PhestError("rejection sets are only stored by the full strategy")
        return np.flatnonzero(self.reject[i]).tolist()

    def to_json(self, detail: bool | None = None, timing: bool = False) -> dict:
        F = len(self.D)
        detail = F <= 10_000 if detail is None else detail
        out = {
            "schema": 1,
            "method": self.method,
            "n_models": F,
            "selected": self.selected,
            "partition": self.partition.to_json(),
            "D_selected": float(self.D[self.selected]),
            "min_D": self.min_D,
            "epsilon": self.spec.eps,
            "n_admissible": int(self.admissible.size),
            "n_exact": int(self.exact.sum()),
            "penalty_selected": float(self.penalties[self.selected]),
            "weight_selected": float(self.weights[self.selected]),
            "spec": self.spec.to_json(),
            "weights": self.scheme.to_json(),
            "meta": self.meta,
        }
        if detail:
            out["D"] = self.D.tolist()
            out["exact"] = self.exact.tolist()
            out["penalties"] = self.penalties.tolist()
            if self.reject is not None:
                out["rejections"] = [self.rejection_set(i) for i in range(F)]
        if timing:
            out["timing"] = self.timing
        return out

    def dumps(self, **kw) -> str:
        return json.dumps(self.to_json(**kw), sort_keys=True, indent=1)

    def t_matrix_csv(self) -> str:
        if self.T is None:
            raise PhestError("the T matrix is only stored by the full strategy")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        F = len(self.D)
        w.writerow(["i"] + [str(j) for j in range(F)])
        for i in range(F):
            w.writerow([i] + [repr(float(v)) for v in self.T[i]])
        return buf.getvalue()


def select(family, obs, spec: PenaltySpec, weights: WeightScheme, *, method: str = "auto",
           workers: int = 1, max_pairs: int = DEFAULT_MAX_PAIRS, randomize_ties: bool = False,
           tie_seed=None, backend: str | None = None, context: PairContext | None = None,
           deltas: np.ndarray | None = None) -> SelectionReport:
    """Run the selection procedure on ``family`` for observation ``obs``."""
    fam = as_family(family)
    F = len(fam)
    if F == 0:
        raise ConfigError("family is empty")
    t0 = time.perf_counter()
    ctx = context if context is not None else _context(fam, obs, backend)
    deltas = fam.weights(weights) if deltas is None else deltas
    pens = spec.penalties(fam.packed.sizes, deltas)
    pairs = F * (F - 1) // 2
    if method == "auto":
        method = "full" if pairs <= max_pairs else "pruned"
    if method == "full" and pairs > max_pairs:
        raise FamilyTooLargeError(f"{pairs} pairs exceed the cap of {max_pairs}")
    if method not in ("full", "pruned"):
        raise ConfigError(f"unknown selection method {method!r}")
    if randomize_ties and method != "full":
        raise ConfigError("randomized tie-breaking needs the full strategy")

    T = H = reject = None
    if method == "full":
        H, HJ = ctx.matrices(workers)
        T = (HJ - HJ.T) + 16.0 * (pens[:, None] - pens[None, :])
        np.fill_diagonal(T, 0.0)
        reject = T > 0
        if randomize_ties:
            rng = np.random.default_rng(tie_seed)
            iu, ju = np.triu_indices(F, 1)
            tie = T[iu, ju] == 0
            coin = rng.random(int(tie.sum())) < 0.5
            reject[iu[tie], ju[tie]] = coin
            reject[ju[tie], iu[tie]] = ~coin
        D = np.where(reject, H, 0.0).max(axis=1) if F > 1 else np.zeros(1)
        exact = np.ones(F, dtype=bool)
    else:
        order = np.argsort(pens, kind="stable")
        slack = 2.0 * ctx.total * (1 + SLACK_REL) + 1e-300
        seed = order[:1]
        D0, _ = ctx.pruned(pens, order, seed, math.inf, slack, 1)
        tau = D0[seed[0]] + spec.eps / 3
        D, elim = ctx.pruned(pens, order, np.arange(F), tau, slack, workers)
        exact = ~elim
    minD = float(D[exact].min())
    adm = np.flatnonzero(exact & (D <= minD + spec.eps / 3))
    chosen = int(adm[0])
    elapsed = time.perf_counter() - t0
    return SelectionReport(fam, chosen, D, exact, pens, np.asarray(deltas), spec, weights, method,
                           T=T, H=H, reject=reject,
                           timing={"seconds": elapsed, "workers": workers, "backend": backend_name(ctx.mod)},
                           meta={"gamma": spec.gamma} if spec.framework == "counting" else {})


def selected_estimate(report: SelectionReport, obs) -> HistogramEstimate:
    from .estimation import fit
    return fit(report.partition, obs)


def phe_pipeline(config, obs=None, seed=None, workers: int = 1):
    """Enumerate the family, fit, select and return ``(s_tilde, report)``.

    ``config`` is an :class:`phest.config.ExperimentConfig` or a mapping
    accepted by it. When ``obs`` is None the observation is simulated from
    the configured intensity with ``seed``.
    """
    from .config import ExperimentConfig
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    stage = "family"
    try:
        fam = cfg.build_family()
        stage = "observation"
        if obs is None:
            obs = cfg.simulate(cfg.seed if seed is None else seed)
        stage = "selection"
        spec = cfg.penalty_spec()
        report = select(fam, obs, spec, cfg.weight_scheme(), method=cfg.method, workers=workers,
                        max_pairs=cfg.max_pairs, randomize_ties=cfg.randomize_ties,
                        tie_seed=cfg.seed)
        stage = "fit"
        return selected_estimate(report, obs), report
    except PhestError as exc:
        exc.args = (f"[{stage}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise
