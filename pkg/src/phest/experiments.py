"""Configuration-driven studies behind the command line verbs.

Every function writes UTF-8 JSON/CSV files into an output directory and
returns the in-memory result. Files never contain timings, so reruns with
the same configuration and seed are byte-identical.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .errors import ConfigError
from .estimation import fit, hellinger_to_truth
from .kernels import family_bias
from .observations import SpikyCube
from .oracles import RiskEstimate, chi2_tail_check, oracle_inequality_check
from .partitions import CubePartition, DyadicCube, ListFamily, WeightScheme, enumerate_tree_family
from .selection import _context, select

SCHEMA_VERSION = 1


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _out(out_dir) -> Path:
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _envelope(kind: str, cfg: ExperimentConfig | None, body: dict) -> dict:
    out = {"schema": SCHEMA_VERSION, "kind": kind, **body}
    if cfg is not None:
        out["config"] = cfg.to_dict()
    return out


# ---------------------------------------------------------------------------
def replicate_runs(cfg: ExperimentConfig, fam, n=None, scale_cfg=None, workers: int = 1,
                   seed_prefix=()):
    """Select and score the estimator on ``cfg.replicates`` simulated data sets.

    Yields ``(r, report, estimate, risk)``.
    """
    c = scale_cfg or cfg
    spec = c.penalty_spec(n=n)
    weights = c.weight_scheme()
    deltas = fam.weights(weights)
    s = c.build_intensity()
    for r in range(cfg.replicates):
        seq = np.random.SeedSequence([int(cfg.seed), *seed_prefix, r])
        obs = c.simulate(seq, n=n, family=fam)
        ctx = _context(fam, obs)
        rep = select(fam, obs, spec, weights, context=ctx, deltas=deltas, workers=workers,
                     method=c.method, max_pairs=c.max_pairs, randomize_ties=c.randomize_ties,
                     tie_seed=seq)
        est = fit(rep.partition, obs)
        yield r, rep, est, hellinger_to_truth(est, s, obs)


def run_experiment(cfg: ExperimentConfig, out_dir, workers: int = 1) -> RiskEstimate:
    """``run``: replicate the pipeline and write risk summary, per-replicate
    table and plot data for the first replicate's estimate."""
    out = _out(out_dir)
    fam = cfg.build_family()
    rows, risks, first = [], [], None
    for r, rep, est, risk in replicate_runs(cfg, fam, workers=workers):
        if first is None:
            first = (rep, est)
        risks.append(risk)
        rows.append((r, rep.selected, len(rep.partition), float(rep.D[rep.selected]), risk))
    result = RiskEstimate.from_values(risks, [])
    rep, est = first
    write_json(out / "risk.json", _envelope("run", cfg, {"risk": result.to_json(),
                                                        "selection": rep.to_json(detail=False)}))
    write_csv(out / "replicates.csv", ["replicate", "selected", "n_cells", "D_selected", "risk"], rows)
    write_json(out / "estimate.json", est.to_json())
    if not isinstance(est.partition, CubePartition):
        (out / "estimate_step.csv").write_text(est.step_csv(), encoding="utf-8")
    return result


# ---------------------------------------------------------------------------
@dataclass
class RateStudyResult:
    grid: list
    mean_risks: list
    stderrs: list
    slope: float
    intercept: float
    ci: tuple
    target: float | None
    replicates: int
    tolerance: float | None = None

    @property
    def within_tolerance(self) -> bool | None:
        if self.target is None or self.tolerance is None:
            return None
        return bool(math.isfinite(self.slope) and abs(self.slope - self.target) <= self.tolerance)

    def to_json(self) -> dict:
        return {"grid": self.grid, "mean_risks": self.mean_risks, "stderrs": self.stderrs,
                "slope": self.slope, "intercept": self.intercept, "ci": list(self.ci),
                "target": self.target, "tolerance": self.tolerance, "replicates": self.replicates,
                "within_tolerance": self.within_tolerance}


def loglog_slope(x, y) -> tuple[float, float]:
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if np.any(y <= 0) or np.any(x <= 0):
        return math.nan, math.nan
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


def bootstrap_slope_ci(x, samples, seed, draws: int = 1000, level: float = 0.95):
    """Percentile interval for the log-log slope, resampling replicates
    independently at each grid point."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB007]))
    slopes = np.empty(draws)
    for b in range(draws):
        means = [float(np.mean(s[rng.integers(0, len(s), len(s))])) for s in samples]
        slopes[b] = loglog_slope(x, means)[0]
    if np.any(~np.isfinite(slopes)):
        return (math.nan, math.nan)
    a = (1 - level) / 2
    return (float(np.quantile(slopes, a)), float(np.quantile(slopes, 1 - a)))


def _scaled_config(cfg: ExperimentConfig, factor: float) -> ExperimentConfig:
    inten = cfg.intensity
    if inten.get("type") == "vector":
        new = {"type": "vector", "values": [factor * v for v in inten["values"]]}
    else:
        new = {"type": "scaled", "base": inten, "factor": factor}
    return replace(cfg, intensity=new)


def run_rate_study(cfg: ExperimentConfig, out_dir, workers: int = 1) -> RateStudyResult:
    """``rate-study``: mean risk over a grid of sample sizes (density and
    survival) or intensity scales (Poisson and vector), and the log-log slope."""
    grid = cfg.grid
    if not grid or len(grid) < 4 or len(set(grid)) != len(grid) or min(grid) <= 0:
        raise ConfigError("field 'grid': needs at least 4 distinct positive values")
    out = _out(out_dir)
    fam = cfg.build_family()
    by_n = cfg.framework in ("density", "survival")
    rows, means, ses, samples = [], [], [], []
    for g in grid:
        c = None if by_n else _scaled_config(cfg, float(g))
        risks = []
        for r, rep, est, risk in replicate_runs(cfg, fam, n=int(g) if by_n else None, scale_cfg=c,
                                                workers=workers, seed_prefix=(int(g * 1000),)):
            risks.append(risk)
            rows.append((g, r, rep.selected, len(rep.partition), risk))
        est = RiskEstimate.from_values(risks)
        means.append(est.mean)
        ses.append(est.stderr)
        samples.append(np.asarray(risks))
    slope, intercept = loglog_slope(grid, means)
    opts = cfg.output or {}
    ci = bootstrap_slope_ci(grid, samples, cfg.seed, int(opts.get("bootstrap", 1000)))
    res = RateStudyResult(list(grid), means, ses, slope, intercept, ci, opts.get("target_slope"),
                          cfg.replicates, opts.get("tolerance"))
    write_json(out / "rate_study.json", _envelope("rate-study", cfg, res.to_json()))
    write_csv(out / "rate_replicates.csv", ["grid", "replicate", "selected", "n_cells", "risk"], rows)
    return res


# ---------------------------------------------------------------------------
def spike_bounds(k: int, jbar: int, V: float, R: float, alpha: float) -> dict:
    """The three upper bounds on ``inf B_m`` with unit constant."""
    e = 2 * k / (k + 2 * alpha)
    kR = k * R
    mi1 = 2 ** (k * jbar) + V ** (k / (k + 2 * alpha)) * kR ** e
    log = math.log(kR) if kR > 1 else 0.0
    mi2 = V * (k * jbar * 2 ** (k * jbar) + kR ** e * log ** (2 * alpha / (2 * alpha + k)))
    mi3 = V * (2 ** k * jbar * 2 ** (k * jbar) + kR ** e)
    return {"mi1": mi1, "mi2": mi2, "mi3": mi3}


def adapted_tree(k: int, targets, depth: int) -> CubePartition:
    """Smallest tree partition isolating every cube of ``targets`` and
    refining each of them uniformly down to level ``depth``."""
    leaves = []

    def grow(c: DyadicCube):
        inside = any(t.contains(c) for t in targets)
        strict = any(c.contains(t) and c != t for t in targets)
        if (inside and c.level < depth) or strict:
            for ch in c.children():
                grow(ch)
        else:
            leaves.append(c)

    grow(DyadicCube(0, (0,) * k))
    return CubePartition.from_cubes(k, leaves, remainder=False)


def spike_subfamilies(s: SpikyCube, max_level: int, max_splits: int = 2) -> dict:
    k, jbar = s.k, s.jbar
    if max_level < jbar:
        raise ConfigError(f"field 'spike.max_level': {max_level} is below the spike level {jbar}")
    regular = [CubePartition.regular(k, j) for j in range(max_level + 1)]
    spike = []
    for j in range(jbar, max_level + 1):
        cover = [DyadicCube(j, idx) for c in s.cubes for idx in _subcubes(c, j)]
        spike.append(CubePartition.spike(k, 0, cover))
    trees = {t.to_cube_partition(): None for t in enumerate_tree_family(k, max_splits, max_level)}
    for j in range(jbar, max_level + 1):
        trees.setdefault(adapted_tree(k, s.cubes, j), None)
    return {"regular": regular, "spike": spike, "tree": list(trees)}


def _subcubes(c: DyadicCube, level: int):
    d = level - c.level
    base = [i << d for i in c.index]
    return [tuple(b + o for b, o in zip(base, off)) for off in itertools.product(range(1 << d), repeat=len(base))]


def run_spike_study(cfg: ExperimentConfig, out_dir) -> dict:
    """``spike-study``: compare ``min B_m = H^2(s, S_m) + |m| + Delta_m``
    over the regular, spike and tree subfamilies."""
    s = cfg.build_intensity()
    if not isinstance(s, SpikyCube) or s.k < 2:
        raise ConfigError("field 'intensity': spike studies need a spiky-cube intensity with k >= 2")
    opts = cfg.spike or {}
    J = int(opts.get("max_level", cfg.family.get("max_level", s.jbar + 2)))
    subs = spike_subfamilies(s, J, int(opts.get("max_splits", 2)))
    scheme = WeightScheme("cube", k=s.k)
    out = _out(out_dir)
    S, Rt = s.atom_integrals(J)
    M = np.full(S.size, 1.0 / S.size)
    summary, rows = {}, []
    for name, members in subs.items():
        fam = ListFamily(members, atom_level=J)
        bias = family_bias(fam.packed, Rt, S, M)
        deltas = fam.weights(scheme)
        B = bias + fam.packed.sizes + deltas
        i = int(np.argmin(B))
        summary[name] = {"min_B": float(B[i]), "bias": float(bias[i]), "size": int(fam.packed.sizes[i]),
                         "weight": float(deltas[i]), "n_models": len(fam), "argmin": members[i].to_json()}
        rows.extend((name, j, int(fam.packed.sizes[j]), float(deltas[j]), float(bias[j]), float(B[j]))
                    for j in range(len(fam)))
    winner = min(summary, key=lambda n: summary[n]["min_B"])
    body = {"subfamilies": summary, "winner": winner,
            "bounds": spike_bounds(s.k, s.jbar, s.volume, s.R, s.alpha),
            "k": s.k, "jbar": s.jbar, "V": s.volume, "R": s.R, "alpha": s.alpha, "max_level": J}
    write_json(out / "spike_study.json", _envelope("spike-study", cfg, body))
    write_csv(out / "spike_models.csv", ["subfamily", "index", "size", "weight", "bias", "B"], rows)
    return body


# ---------------------------------------------------------------------------
TAIL_KEYS = ("framework", "m_size", "means", "x_grid", "replicates", "kind", "kappa", "tau",
             "trials", "A", "seed")


def run_tail_check(doc: dict, out_dir, seed: int | None = None):
    tail = doc.get("tail") if "tail" in doc else doc
    if not isinstance(tail, dict):
        raise ConfigError("field 'tail': must be a table")
    bad = sorted(set(tail) - set(TAIL_KEYS))
    if bad:
        raise ConfigError(f"field 'tail.{bad[0]}': unknown field")
    for key in ("framework", "m_size", "means", "x_grid"):
        if key not in tail:
            raise ConfigError(f"field 'tail.{key}': is required")
    seed = int(tail.get("seed", doc.get("seed", 0))) if seed is None else seed
    tc = chi2_tail_check(tail["framework"], int(tail["m_size"]), tail["means"], tail["x_grid"],
                         int(tail.get("replicates", 10_000)), seed, kind=tail.get("kind"),
                         kappa=float(tail.get("kappa", 1.0)), tau=float(tail.get("tau", 1.0)),
                         trials=tail.get("trials"), A=float(tail.get("A", 1.0)))
    out = _out(out_dir)
    write_json(out / "tail_check.json", {"schema": SCHEMA_VERSION, "kind": "tail-check", "seed": seed,
                                         **tc.to_json()})
    (out / "tail_check.csv").write_text(tc.to_csv(), encoding="utf-8")
    return tc


def run_oracle_check(cfg: ExperimentConfig, out_dir, workers: int = 1):
    verdict = oracle_inequality_check(cfg, workers=workers)
    out = _out(out_dir)
    write_json(out / "oracle_check.json", _envelope("oracle-check", cfg, verdict.to_json()))
    write_csv(out / "oracle_replicates.csv", ["replicate", "selected", "risk", "D_selected"],
              [(r["replicate"], r["selected"], r["risk"], r["D_selected"]) for r in verdict.risk.records])
    return verdict


def run_enumerate(cfg: ExperimentConfig, out_dir, limit: int | None = None) -> dict:
    """``enumerate``: the family with weights and penalties, plus the
    truncated ``Sigma``."""
    fam = cfg.build_family()
    scheme = cfg.weight_scheme()
    deltas = fam.weights(scheme)
    pens = cfg.penalty_spec().penalties(fam.packed.sizes, deltas)
    out = _out(out_dir)
    count = len(fam) if limit is None else min(limit, len(fam))
    with open(out / "family.jsonl", "w", encoding="utf-8") as fh:
        for i in range(count):
            rec = {"index": i, "partition": fam[i].to_json(), "size": int(fam.packed.sizes[i]),
                   "weight": float(deltas[i]), "penalty": float(pens[i])}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    body = {"n_models": len(fam), "written": count, "sigma_trunc": fam.sigma(scheme),
            "weights": scheme.to_json(), "penalty": cfg.penalty_spec().to_json()}
    write_json(out / "family_summary.json", _envelope("enumerate", cfg, body))
    return body
