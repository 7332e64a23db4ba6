"""Experiment configuration: parsing, validation and object construction.

A configuration is one TOML or JSON document. Every default is the
procedure's own choice (minimal penalties, framework ``eps``); validation
errors name the offending field.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError, PartitionError
from .observations import (intensity_from_config, simulate_density, simulate_poisson,
                           simulate_survival, simulate_vector)
from .partitions import (CubePartition, DyadicCube, IntervalFamily, IntervalPartition, ListFamily,
                         WeightScheme, enumerate_consecutive_family, enumerate_singleton_family,
                         enumerate_tree_family, partition_from_json)
from .selection import DEFAULT_MAX_PAIRS, PenaltySpec

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

FRAMEWORKS = ("density", "poisson", "vector", "survival")
FAMILY_TYPES = ("interval", "tree", "regular", "cube", "vector-interval", "vector-singletons", "list")
DEFAULT_WEIGHTS = {"interval": "dyadic", "tree": "tree", "cube": "cube",
                   "vector-interval": "vector-interval", "vector-singletons": "vector-singletons"}
PENALTY_KEYS = ("delta", "c1", "c2", "kappa", "tau", "k", "kappa_prime", "gamma", "epsilon")


def _field_error(name: str, msg: str) -> ConfigError:
    return ConfigError(f"field '{name}': {msg}")


def _positive_int(d: dict, key: str, where: str, default=None, minimum: int = 1):
    v = d.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise _field_error(f"{where}.{key}" if where else key, f"must be an integer >= {minimum}")
    return v


@dataclass
class ExperimentConfig:
    framework: str
    intensity: dict
    family: dict
    n: int | None = None
    weights: str | None = None
    penalty: dict = field(default_factory=dict)
    unsafe_penalties: bool = False
    replicates: int = 1
    seed: int = 0
    method: str = "auto"
    max_pairs: int = DEFAULT_MAX_PAIRS
    randomize_ties: bool = False
    obs_level: int | None = None
    law: str = "poisson"
    trials: int | None = None
    scale: float = 1.0
    censoring: dict | None = None
    grid: list | None = None
    x_grid: list | None = None
    tail: dict | None = None
    spike: dict | None = None
    output: dict = field(default_factory=dict)

    # parsing -----------------------------------------------------------------
    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("configuration must be a table/object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise _field_error(unknown[0], "unknown field")
        for key in ("framework", "intensity", "family"):
            if key not in obj:
                raise _field_error(key, "is required")
        cfg = cls(**obj)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, **overrides) -> "ExperimentConfig":
        obj = load_document(path)
        obj.update(overrides)
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def validate(self) -> None:
        if self.framework not in FRAMEWORKS:
            raise _field_error("framework", f"must be one of {FRAMEWORKS}")
        if not isinstance(self.intensity, dict):
            raise _field_error("intensity", "must be a table")
        if not isinstance(self.family, dict) or self.family.get("type") not in FAMILY_TYPES:
            raise _field_error("family.type", f"must be one of {FAMILY_TYPES}")
        for key in ("max_level", "max_cells", "max_splits", "max_depth", "cap", "max_singletons"):
            _positive_int(self.family, key, "family", minimum=0 if key in ("max_level", "max_splits") else 1)
        _positive_int(self.family, "k", "family")
        _positive_int(self.family, "max_spikes", "family", minimum=0)
        d = self.__dict__
        _positive_int(d, "replicates", "")
        _positive_int(d, "max_pairs", "")
        _positive_int(d, "seed", "", minimum=0)
        if self.framework in ("density", "survival"):
            _positive_int(d, "n", "")
            if self.n is None:
                raise _field_error("n", f"is required for the {self.framework} framework")
        if self.method not in ("auto", "full", "pruned"):
            raise _field_error("method", "must be auto, full or pruned")
        bad = sorted(set(self.penalty) - set(PENALTY_KEYS))
        if bad:
            raise _field_error(f"penalty.{bad[0]}", "unknown penalty field")
        if self.framework == "survival" and "gamma" not in self.penalty:
            raise _field_error("penalty.gamma", "survival runs need a bound gamma on the hazard integral")
        if self.grid is not None and (not isinstance(self.grid, list) or len(self.grid) < 4):
            raise _field_error("grid", "needs at least 4 values")
        try:
            self.build_intensity()
            self.penalty_spec()
            self.weight_scheme()
        except ConfigError as exc:
            raise ConfigError(str(exc)) from None
        except PartitionError as exc:
            raise _field_error("weights", str(exc)) from None

    # construction ------------------------------------------------------------
    def build_intensity(self):
        return intensity_from_config(self.intensity)

    @property
    def k(self) -> int:
        return int(self.family.get("k", self.intensity.get("k", 1)))

    @property
    def delta(self) -> float:
        if "delta" in self.penalty:
            return float(self.penalty["delta"])
        return 2.0 if self.family["type"] == "cube" else 1.0

    def penalty_spec(self, n: int | None = None) -> PenaltySpec:
        p = self.penalty
        fw = "counting" if self.framework == "survival" else self.framework
        try:
            return PenaltySpec(
                fw, delta=self.delta, n=n if n is not None else self.n,
                kappa=float(p.get("kappa", 1.0)), tau=float(p.get("tau", 1.0)), k=int(p.get("k", 1)),
                kappa_prime=float(p.get("kappa_prime", 2.0)),
                gamma=None if "gamma" not in p else float(p["gamma"]),
                c1=None if "c1" not in p else float(p["c1"]), c2=None if "c2" not in p else float(p["c2"]),
                epsilon=None if "epsilon" not in p else float(p["epsilon"]), unsafe=bool(self.unsafe_penalties))
        except ConfigError as exc:
            raise _field_error("penalty", str(exc)) from None

    def weight_scheme(self) -> WeightScheme:
        ftype = self.family["type"]
        name = self.weights
        if name is None:
            if ftype == "regular":
                name = "dyadic" if self.k == 1 else "cube"
            elif ftype == "tree" and self.k >= 2:
                name = "cube"
            elif ftype == "list":
                raise _field_error("weights", "must be given for explicit families")
            else:
                name = DEFAULT_WEIGHTS[ftype]
        n = len(self.intensity.get("values", ())) or None
        return WeightScheme(name, k=self.k, n=n)

    def build_family(self):
        f = self.family
        ftype, k = f["type"], self.k
        cap = f.get("cap", 4_000_000)
        if ftype == "interval":
            return IntervalFamily(_need(f, "max_level"), _need(f, "max_cells"), cap=cap)
        if ftype == "tree":
            trees = enumerate_tree_family(k, _need(f, "max_splits"), f.get("max_depth"), cap=cap)
            return ListFamily(trees)
        if ftype == "regular":
            L = _need(f, "max_level")
            if k == 1:
                return ListFamily([IntervalPartition.regular(j) for j in range(L + 1)])
            return ListFamily([CubePartition.regular(k, j) for j in range(L + 1)])
        if ftype == "cube":
            return ListFamily(cube_family(k, _need(f, "max_level"), f.get("max_splits", 0),
                                          f.get("max_spikes", 1), cap))
        if ftype in ("vector-interval", "vector-singletons"):
            n = len(self.intensity.get("values", ()))
            if not n:
                raise _field_error("intensity.values", "vector families need a vector intensity")
            if ftype == "vector-interval":
                return ListFamily(enumerate_consecutive_family(n, f.get("max_cells"), cap=cap))
            return ListFamily(enumerate_singleton_family(n, f.get("max_singletons"), cap=cap))
        members = f.get("members")
        if not members:
            raise _field_error("family.members", "explicit families need members")
        return ListFamily([partition_from_json(m) for m in members])

    def simulate(self, seed, n: int | None = None, family=None):
        """One observation for replicate seed ``seed`` (``n`` overrides the size)."""
        s = self.build_intensity()
        n = self.n if n is None else n
        if self.framework == "density":
            return simulate_density(s, n, seed)
        if self.framework == "poisson":
            level = self.obs_level
            if level is None:
                fam = family if family is not None else self.build_family()
                level = max(fam.packed.atom_level or 0, getattr(s, "jbar", 0))
            return simulate_poisson(s, seed, level=level)
        if self.framework == "vector":
            return simulate_vector(s, self.law, seed, trials=self.trials, scale=self.scale)
        return simulate_survival(s, self.censoring, n, seed)


def load_document(path) -> dict:
    """Parse a JSON (``.json``) or TOML (anything else) file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    else:
        try:
            obj = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            msg = str(exc)
            if "line" not in msg:
                msg += f" (line {max(len(text.splitlines()), 1)})"
            raise ConfigError(f"{path}: {msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return obj


def _need(d: dict, key: str):
    if d.get(key) is None:
        raise _field_error(f"family.{key}", "is required for this family type")
    return d[key]


def cube_family(k: int, max_level: int, max_splits: int = 0, max_spikes: int = 1,
                cap: int = 1_000_000) -> list:
    """Deterministic subfamily of the cube family on [0, 1)^k.

    Regular partitions ``K_j`` (``j <= max_level``), tree partitions with at
    most ``max_splits`` splits and depth ``<= max_level``, and ``m_p v K_j``
    for every set ``p`` of at most ``max_spikes`` disjoint cubes of level in
    ``(j, max_level]``. Duplicates keep their first position.
    """
    seen: dict = {}

    def add(m):
        if m not in seen:
            if len(seen) >= cap:
                from .errors import FamilyTooLargeError
                raise FamilyTooLargeError(f"cube family exceeds the cap of {cap}")
            seen[m] = None

    for j in range(max_level + 1):
        add(CubePartition.regular(k, j))
    if max_splits:
        for t in enumerate_tree_family(k, max_splits, max_level, cap=cap):
            add(t.to_cube_partition())
    cubes = [DyadicCube(l, idx) for l in range(1, max_level + 1)
             for idx in itertools.product(range(1 << l), repeat=k)]
    for size in range(1, max_spikes + 1):
        for p in itertools.combinations(cubes, size):
            if any(a.contains(b) or b.contains(a) for a, b in itertools.combinations(p, 2)):
                continue
            for j in range(min(c.level for c in p)):
                add(CubePartition.spike(k, j, p))
    return list(seen)
