"""True intensities, observation types and simulators.

Every observation reduces to atom masses ``(N_a, M_a)`` on a dyadic grid
(or on the points of {1..n}); cell masses of any partition are exact sums
of those. ``truth_masses`` gives the atom integrals ``int sqrt(s) dM`` and
``int s dM`` needed to evaluate ``H^2(t, s)`` for a histogram ``t``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import integrate

from .errors import ConfigError, QuadratureError, SupportError
from .partitions.dyadic import DyadicCube

QUAD_TOL = 1e-10
SCHEMA_VERSION = 1


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _grid(level: int) -> np.ndarray:
    return np.arange((1 << level) + 1) / float(1 << level)


# ---------------------------------------------------------------------------
# intensities on [0, 1)
# ---------------------------------------------------------------------------
class Intensity:
    """Nonnegative function on [0, 1) with cell integrals of ``s`` and
    ``sqrt(s)``."""

    k = 1
    domain = "interval"

    def __call__(self, x):
        raise NotImplementedError

    def integral(self, u, v):
        raise NotImplementedError

    def root_integral(self, u, v):
        raise NotImplementedError

    @property
    def total(self) -> float:
        return float(self.integral(np.array([0.0]), np.array([1.0]))[0])

    def atom_integrals(self, level: int):
        """``(int_a s, int_a sqrt(s))`` over the level-``level`` intervals."""
        g = _grid(level)
        return self.integral(g[:-1], g[1:]), self.root_integral(g[:-1], g[1:])

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.integral(np.zeros_like(x), x) / self.total

    def sample(self, size: int, rng) -> np.ndarray:
        """Inverse-CDF draws, by bisection to ``QUAD_TOL``."""
        u = rng.random(size)
        lo, hi = np.zeros(size), np.ones(size)
        for _ in range(int(math.ceil(-math.log2(QUAD_TOL))) + 1):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < u
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return np.minimum(0.5 * (lo + hi), np.nextafter(1.0, 0.0))

    def scaled(self, factor: float) -> "Intensity":
        return Scaled(self, factor)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Intensity):
    value: float = 1.0

    def __post_init__(self):
        if self.value < 0:
            raise ConfigError("intensity must be nonnegative")

    def __call__(self, x):
        return np.full(np.shape(x), self.value, dtype=np.float64)

    def integral(self, u, v):
        return self.value * (np.asarray(v, dtype=np.float64) - u)

    def root_integral(self, u, v):
        return math.sqrt(self.value) * (np.asarray(v, dtype=np.float64) - u)

    def sample(self, size, rng):
        return rng.random(size)

    def to_json(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class PiecewiseConstant(Intensity):
    """``s = values[i]`` on ``[breaks[i], breaks[i+1])``."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if b.size != v.size + 1 or b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise ConfigError("breaks must run strictly from 0 to 1, one more than values")
        if np.any(v < 0):
            raise ConfigError("intensity must be nonnegative")
        object.__setattr__(self, "breaks", tuple(b.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    def _cum(self, x):
        b = np.asarray(self.breaks)
        v = np.asarray(self.values)
        mass = np.concatenate([[0.0], np.cumsum(np.diff(b) * v)])
        x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
        i = np.clip(np.searchsorted(b, x, side="right") - 1, 0, v.size - 1)
        return mass[i] + v[i] * (x - b[i])

    def _root_cum(self, x):
        return PiecewiseConstant(self.breaks, tuple(np.sqrt(self.values)))._cum(x)

    def __call__(self, x):
        b, v = np.asarray(self.breaks), np.asarray(self.values)
        i = np.clip(np.searchsorted(b, x, side="right") - 1, 0, v.size - 1)
        return v[i]

    def integral(self, u, v):
        return self._cum(v) - self._cum(u)

    def root_integral(self, u, v):
        return self._root_cum(v) - self._root_cum(u)

    def sample(self, size, rng):
        b, v = np.asarray(self.breaks), np.asarray(self.values)
        mass = np.concatenate([[0.0], np.cumsum(np.diff(b) * v)])
        u = rng.random(size) * mass[-1]
        i = np.clip(np.searchsorted(mass, u, side="right") - 1, 0, v.size - 1)
        while np.any(v[i] == 0):
            i = np.where(v[i] == 0, i + 1, i)
        return np.minimum(b[i] + (u - mass[i]) / v[i], np.nextafter(b[i + 1], b[i]))

    def to_json(self):
        return {"type": "piecewise-constant", "breaks": list(self.breaks), "values": list(self.values)}


@dataclass(frozen=True)
class PiecewisePolynomial(Intensity):
    """``s(x) = sum_d coeffs[i][d] x**d`` on ``[breaks[i], breaks[i+1])``.

    ``int s`` is exact; ``int sqrt(s)`` uses adaptive quadrature with
    absolute tolerance ``tol`` per piece.
    """

    breaks: tuple
    coeffs: tuple
    tol: float = QUAD_TOL

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=np.float64)
        if b.size != len(self.coeffs) + 1 or b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise ConfigError("breaks must run strictly from 0 to 1, one more than pieces")
        object.__setattr__(self, "breaks", tuple(b.tolist()))
        object.__setattr__(self, "coeffs", tuple(tuple(float(c) for c in p) for p in self.coeffs))

    def _piece(self, x):
        b = np.asarray(self.breaks)
        return np.clip(np.searchsorted(b, x, side="right") - 1, 0, len(self.coeffs) - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.empty_like(x)
        idx = self._piece(x)
        for i, c in enumerate(self.coeffs):
            sel = idx == i
            out[sel] = np.polynomial.polynomial.polyval(x[sel], c)
        return np.maximum(out, 0.0)

    def _pieces_between(self, u: float, v: float):
        b = self.breaks
        for i, c in enumerate(self.coeffs):
            lo, hi = max(u, b[i]), min(v, b[i + 1])
            if hi > lo:
                yield c, lo, hi

    def integral(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        v = np.atleast_1d(np.asarray(v, dtype=np.float64))
        out = np.zeros(np.broadcast(u, v).shape)
        for idx, (a, z) in enumerate(np.broadcast(u, v)):
            acc = []
            for c, lo, hi in self._pieces_between(a, z):
                anti = np.polynomial.polynomial.polyint(c)
                acc.append(np.polynomial.polynomial.polyval(hi, anti)
                           - np.polynomial.polynomial.polyval(lo, anti))
            out.flat[idx] = math.fsum(acc)
        return out

    def root_integral(self, u, v):
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        v = np.atleast_1d(np.asarray(v, dtype=np.float64))
        out = np.zeros(np.broadcast(u, v).shape)
        for idx, (a, z) in enumerate(np.broadcast(u, v)):
            acc = []
            for c, lo, hi in self._pieces_between(a, z):
                f = lambda x, c=c: math.sqrt(max(np.polynomial.polynomial.polyval(x, c), 0.0))
                val, err = integrate.quad(f, lo, hi, epsabs=self.tol, epsrel=0.0, limit=200)
                if err > self.tol:
                    raise QuadratureError(f"sqrt integral on [{lo}, {hi}) has error {err:.2e}")
                acc.append(val)
            out.flat[idx] = math.fsum(acc)
        return out

    def to_json(self):
        return {"type": "piecewise-polynomial", "breaks": list(self.breaks),
                "coeffs": [list(c) for c in self.coeffs], "tol": self.tol}


@dataclass(frozen=True)
class PowerRoot(Intensity):
    """``sqrt(s(x)) = a + b x**alpha``: monotone for ``b >= 0`` and
    alpha-Hölder with constant ``|b|`` when ``alpha <= 1``. All cell
    integrals are closed form."""

    a: float = 1.0
    b: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0 or self.a < 0 or self.a + min(self.b, 0.0) < 0:
            raise ConfigError("need alpha > 0 and a + b x^alpha >= 0 on [0, 1]")

    @classmethod
    def density(cls, alpha: float = 1.0, ratio: float = 1.0) -> "PowerRoot":
        """Normalized so that ``int s = 1``, with ``b / a = ratio``."""
        raw = cls(1.0, ratio, alpha)
        c = 1.0 / math.sqrt(raw.total)
        return cls(c, c * ratio, alpha)

    def __call__(self, x):
        return (self.a + self.b * np.asarray(x, dtype=np.float64) ** self.alpha) ** 2

    def _pow(self, u, v, p):
        return (np.asarray(v, dtype=np.float64) ** p - np.asarray(u, dtype=np.float64) ** p) / p

    def integral(self, u, v):
        a, b, al = self.a, self.b, self.alpha
        return (a * a * (np.asarray(v, dtype=np.float64) - u) + 2 * a * b * self._pow(u, v, al + 1)
                + b * b * self._pow(u, v, 2 * al + 1))

    def root_integral(self, u, v):
        return self.a * (np.asarray(v, dtype=np.float64) - u) + self.b * self._pow(u, v, self.alpha + 1)

    def to_json(self):
        return {"type": "power-root", "a": self.a, "b": self.b, "alpha": self.alpha}


@dataclass(frozen=True)
class Scaled(Intensity):
    base: Any
    factor: float

    def __call__(self, x):
        return self.factor * self.base(x)

    def integral(self, u, v):
        return self.factor * self.base.integral(u, v)

    def root_integral(self, u, v):
        return math.sqrt(self.factor) * self.base.root_integral(u, v)

    def to_json(self):
        return {"type": "scaled", "factor": self.factor, "base": self.base.to_json()}


# ---------------------------------------------------------------------------
# intensities on [0, 1)^k and on {1..n}
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SpikyCube:
    """Intensity on [0, 1)^k with ``sqrt(s) = outside`` off ``V`` and
    ``sqrt(s)(x) = base + R (x_1 - c_1)**alpha`` on each cube of ``V``
    (``c_1`` the cube's lower first coordinate)."""

    k: int
    cubes: tuple
    outside: float = 1.0
    base: float = 1.0
    R: float = 0.0
    alpha: float = 1.0

    domain = "cube"

    def __post_init__(self):
        cubes = tuple(c if isinstance(c, DyadicCube) else DyadicCube(c["level"], tuple(c["index"]))
                      for c in self.cubes)
        if not cubes or any(c.k != self.k for c in cubes):
            raise ConfigError("spike cubes must be nonempty and k-dimensional")
        for i, c in enumerate(cubes):
            if any(c.contains(d) or d.contains(c) for d in cubes[i + 1:]):
                raise ConfigError("spike cubes must be disjoint")
        if min(self.outside, self.base, self.R) < 0 or self.alpha <= 0:
            raise ConfigError("spiky intensity parameters must be nonnegative")
        object.__setattr__(self, "cubes", cubes)

    @property
    def jbar(self) -> int:
        return max(c.level for c in self.cubes)

    @property
    def volume(self) -> float:
        return float(sum(c.volume() for c in self.cubes))

    def atom_integrals(self, level: int):
        if level < self.jbar:
            raise ConfigError(f"atom level {level} is coarser than the spike level {self.jbar}")
        side = 1 << level
        h = 1.0 / side
        vol = h ** self.k
        S = np.full(side ** self.k, self.outside ** 2 * vol)
        Rt = np.full(side ** self.k, self.outside * vol)
        from .partitions.cube import cube_atom_index
        for c in self.cubes:
            idx = cube_atom_index(c, level)
            x1 = np.unravel_index(idx, (side,) * self.k)[0] * h
            u = x1 - c.index[0] / (1 << c.level)
            v = u + h
            a, b, al = self.base, self.R, self.alpha
            pw = lambda p: (v ** p - u ** p) / p
            slab = h ** (self.k - 1)
            S[idx] = slab * (a * a * h + 2 * a * b * pw(al + 1) + b * b * pw(2 * al + 1))
            Rt[idx] = slab * (a * h + b * pw(al + 1))
        return S, Rt

    @property
    def total(self) -> float:
        return float(np.sum(self.atom_integrals(self.jbar)[0]))

    def to_json(self):
        return {"type": "spiky-cube", "k": self.k, "cubes": [c.to_json() for c in self.cubes],
                "outside": self.outside, "base": self.base, "R": self.R, "alpha": self.alpha}


@dataclass(frozen=True)
class ConstantCube:
    k: int
    value: float = 1.0

    domain = "cube"

    def atom_integrals(self, level: int):
        vol = 1.0 / (1 << (self.k * level))
        n = 1 << (self.k * level)
        return np.full(n, self.value * vol), np.full(n, math.sqrt(self.value) * vol)

    @property
    def total(self) -> float:
        return self.value

    def to_json(self):
        return {"type": "constant-cube", "k": self.k, "value": self.value}


@dataclass(frozen=True)
class VectorIntensity:
    values: tuple

    domain = "vector"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ConfigError("vector intensity must be finite and nonnegative")
        object.__setattr__(self, "values", tuple(v.tolist()))

    @property
    def n(self) -> int:
        return len(self.values)

    def atom_integrals(self, level=None):
        v = np.asarray(self.values)
        return v, np.sqrt(v)

    @property
    def total(self) -> float:
        return math.fsum(self.values)

    def to_json(self):
        return {"type": "vector", "values": list(self.values)}


def intensity_from_config(obj: dict):
    """Build an intensity from its JSON/TOML descriptor."""
    try:
        kind = obj["type"]
        if kind == "constant":
            return Constant(float(obj.get("value", 1.0)))
        if kind == "piecewise-constant":
            return PiecewiseConstant(tuple(obj["breaks"]), tuple(obj["values"]))
        if kind == "piecewise-polynomial":
            return PiecewisePolynomial(tuple(obj["breaks"]), tuple(tuple(c) for c in obj["coeffs"]),
                                       float(obj.get("tol", QUAD_TOL)))
        if kind == "power-root":
            if obj.get("normalize"):
                return PowerRoot.density(float(obj.get("alpha", 1.0)), float(obj.get("ratio", 1.0)))
            return PowerRoot(float(obj.get("a", 1.0)), float(obj.get("b", 1.0)),
                             float(obj.get("alpha", 1.0)))
        if kind == "scaled":
            return Scaled(intensity_from_config(obj["base"]), float(obj["factor"]))
        if kind == "spiky-cube":
            return SpikyCube(int(obj["k"]), tuple(obj["cubes"]), float(obj.get("outside", 1.0)),
                             float(obj.get("base", 1.0)), float(obj.get("R", 0.0)),
                             float(obj.get("alpha", 1.0)))
        if kind == "constant-cube":
            return ConstantCube(int(obj["k"]), float(obj.get("value", 1.0)))
        if kind == "vector":
            return VectorIntensity(tuple(obj["values"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad intensity descriptor {obj!r}: {exc}") from exc
    raise ConfigError(f"unknown intensity type {obj.get('type')!r}")


# ---------------------------------------------------------------------------
# observations
# ---------------------------------------------------------------------------
class ObservationPair:
    """Observed random measures ``N`` and ``M`` reduced to atom masses."""

    framework: str = ""
    domain: str = "interval"
    k: int = 1

    def atom_masses(self, level: int | None = None):
        raise NotImplementedError

    def truth_masses(self, s, level: int | None = None):
        """Atom integrals ``(int sqrt(s) dM, int s dM)``."""
        S, R = s.atom_integrals(level)
        return R, S

    def cell_masses(self, m):
        """Exact ``(N(I), M(I))`` over the cells of partition ``m``."""
        level = self._level_for(m)
        N, M = self.atom_masses(level)
        lab = m.atom_labels(level)
        return (np.bincount(lab, weights=N, minlength=len(m)),
                np.bincount(lab, weights=M, minlength=len(m)))

    def _level_for(self, m):
        if self.domain == "vector":
            return None
        return m.min_level if hasattr(m, "min_level") else m.resolution

    def check_support(self, level: int | None = None):
        N, M = self.atom_masses(level)
        if np.any((N > 0) & (M <= 0)):
            raise SupportError("a cell carries N-mass but no M-mass")

    def records(self) -> list[dict]:
        raise NotImplementedError

    def header(self) -> dict:
        return {"schema": SCHEMA_VERSION, "framework": self.framework}

    def dump_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(self.header(), sort_keys=True) + "\n")
            for rec in self.records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def dumps(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        lines += [json.dumps(r, sort_keys=True) for r in self.records()]
        return "\n".join(lines) + "\n"


@dataclass
class DensitySample(ObservationPair):
    """i.i.d. sample on [0, 1): ``N`` is the empirical measure, ``M = lambda``."""

    x: np.ndarray
    framework = "density"

    def __post_init__(self):
        self.x = np.sort(np.asarray(self.x, dtype=np.float64))
        if self.x.size == 0 or self.x[0] < 0 or self.x[-1] >= 1:
            raise ConfigError("density sample must be nonempty and inside [0, 1)")

    @property
    def n(self) -> int:
        return int(self.x.size)

    def counts(self, level: int) -> np.ndarray:
        idx = np.floor(self.x * (1 << level)).astype(np.int64)
        return np.bincount(idx, minlength=1 << level)

    def atom_masses(self, level):
        return self.counts(level) / self.n, np.full(1 << level, 1.0 / (1 << level))

    def records(self):
        return [{"x": float(v)} for v in self.x]

    def header(self):
        return {**super().header(), "n": self.n}


@dataclass
class PoissonSample(ObservationPair):
    """Poisson counts on the level-``level`` grid of [0, 1)^k; ``M = lambda``."""

    counts: np.ndarray
    level: int
    k: int = 1
    framework = "poisson"

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if self.counts.size != 1 << (self.k * self.level) or np.any(self.counts < 0):
            raise ConfigError("counts do not match the grid")
        self.domain = "interval" if self.k == 1 else "cube"

    def atom_masses(self, level):
        if level is None:
            level = self.level
        if level > self.level:
            raise ConfigError(f"grid level {self.level} is coarser than requested {level}")
        r = 1 << (self.level - level)
        side = 1 << level
        c = self.counts.reshape(sum(((side, r) for _ in range(self.k)), ()))
        c = c.sum(axis=tuple(range(1, 2 * self.k, 2))).reshape(-1).astype(np.float64)
        return c, np.full(c.size, 1.0 / (1 << (self.k * level)))

    def records(self):
        nz = np.flatnonzero(self.counts)
        return [{"cell": int(i), "count": int(self.counts[i])} for i in nz]

    def header(self):
        return {**super().header(), "level": self.level, "k": self.k}


@dataclass
class VectorSample(ObservationPair):
    """Independent nonnegative components; ``M`` is the counting measure."""

    values: np.ndarray
    law: str = "poisson"
    framework = "vector"
    domain = "vector"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0):
            raise ConfigError("vector observations must be nonnegative")

    @property
    def n(self) -> int:
        return int(self.values.size)

    def atom_masses(self, level=None):
        return self.values.copy(), np.ones(self.n)

    def records(self):
        return [{"i": i + 1, "value": float(v)} for i, v in enumerate(self.values)]

    def header(self):
        return {**super().header(), "n": self.n, "law": self.law}


@dataclass
class SurvivalSample(ObservationPair):
    """Right-censored lifetimes ``(T_j, D_j)`` restricted to [0, 1).

    ``N`` puts unit mass at each uncensored time below 1 and
    ``M = Y d lambda`` with ``Y(t) = #{j : T_j >= t}``.
    """

    times: np.ndarray
    events: np.ndarray
    framework = "survival"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.events = np.asarray(self.events, dtype=np.int64)
        if self.times.shape != self.events.shape or np.any(self.times < 0):
            raise ConfigError("times and events must align and be nonnegative")
        if not np.all(np.isin(self.events, (0, 1))):
            raise ConfigError("event indicators must be 0 or 1")

    @property
    def n(self) -> int:
        return int(self.times.size)

    def at_risk(self, t) -> np.ndarray:
        """``Y(t)``."""
        st = np.sort(self.times)
        return self.n - np.searchsorted(st, t, side="left")

    def _segments(self, level: int):
        """Pieces of [0, 1) on which ``Y`` is constant, tagged with their atom."""
        inner = self.times[(self.times > 0) & (self.times < 1)]
        cuts = np.unique(np.concatenate([_grid(level), inner]))
        u, v = cuts[:-1], cuts[1:]
        st = np.sort(self.times)
        y = self.n - np.searchsorted(st, v, side="left")
        atom = np.floor(u * (1 << level)).astype(np.int64)
        return u, v, y.astype(np.float64), atom

    def atom_masses(self, level):
        ev = self.times[(self.events == 1) & (self.times < 1)]
        N = np.bincount(np.floor(ev * (1 << level)).astype(np.int64), minlength=1 << level)
        u, v, y, atom = self._segments(level)
        M = np.bincount(atom, weights=y * (v - u), minlength=1 << level)
        return N.astype(np.float64), M

    def truth_masses(self, s, level):
        u, v, y, atom = self._segments(level)
        R = np.bincount(atom, weights=y * s.root_integral(u, v), minlength=1 << level)
        S = np.bincount(atom, weights=y * s.integral(u, v), minlength=1 << level)
        return R, S

    def records(self):
        return [{"time": float(t), "event": int(d)} for t, d in zip(self.times, self.events)]

    def header(self):
        return {**super().header(), "n": self.n}


def load_jsonl(path_or_text) -> ObservationPair:
    """Inverse of :meth:`ObservationPair.dump_jsonl`."""
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    lines = [json.loads(line) for line in text.splitlines() if line.strip()]
    head, recs = lines[0], lines[1:]
    fw = head.get("framework")
    if fw == "density":
        return DensitySample(np.array([r["x"] for r in recs]))
    if fw == "poisson":
        k, level = int(head.get("k", 1)), int(head["level"])
        counts = np.zeros(1 << (k * level), dtype=np.int64)
        for r in recs:
            counts[r["cell"]] = r["count"]
        return PoissonSample(counts, level, k)
    if fw == "vector":
        vals = np.zeros(int(head["n"]))
        for r in recs:
            vals[r["i"] - 1] = r["value"]
        return VectorSample(vals, head.get("law", "poisson"))
    if fw == "survival":
        return SurvivalSample(np.array([r["time"] for r in recs]),
                              np.array([r["event"] for r in recs], dtype=np.int64))
    raise ConfigError(f"unknown framework {fw!r} in observation file")


# ---------------------------------------------------------------------------
# simulators
# ---------------------------------------------------------------------------
def simulate_density(s: Intensity, n: int, seed) -> DensitySample:
    if n < 1:
        raise ConfigError("sample size must be positive")
    if abs(s.total - 1.0) > 1e-9:
        raise ConfigError(f"intensity integrates to {s.total}, not 1")
    return DensitySample(s.sample(n, make_rng(seed)))


def simulate_poisson(s, seed, level: int = 10) -> PoissonSample:
    """Independent Poisson counts on the atoms of the level-``level`` grid."""
    S, _ = s.atom_integrals(level)
    if not np.all(np.isfinite(S)):
        raise ConfigError("intensity is not integrable")
    k = getattr(s, "k", 1)
    return PoissonSample(make_rng(seed).poisson(S), level, k)


def simulate_vector(s, law: str = "poisson", seed=None, trials=None, scale: float = 1.0) -> VectorSample:
    """Independent components with means ``s_i``.

    ``binomial`` draws ``Bin(trials_i, s_i / trials_i)``; ``gamma`` draws
    ``scale * Gamma(s_i / scale)`` (variance ``scale * s_i``).
    """
    v = np.asarray(s.values if isinstance(s, VectorIntensity) else s, dtype=np.float64)
    if np.any(v < 0):
        raise ConfigError("means must be nonnegative")
    rng = make_rng(seed)
    if law == "poisson":
        x = rng.poisson(v)
    elif law == "binomial":
        if trials is None:
            raise ConfigError("binomial law needs trial counts")
        t = np.broadcast_to(np.asarray(trials, dtype=np.int64), v.shape)
        if np.any(v > t):
            raise ConfigError("binomial means exceed trial counts")
        x = rng.binomial(t, np.divide(v, t, out=np.zeros_like(v), where=t > 0))
    elif law == "gamma":
        x = np.where(v > 0, scale * rng.gamma(np.where(v > 0, v / scale, 1.0)), 0.0)
    else:
        raise ConfigError(f"unknown law {law!r}")
    return VectorSample(x.astype(np.float64), law)


def _censor(law: dict | None, n: int, rng) -> np.ndarray:
    if not law or law.get("type", "none") == "none":
        return np.full(n, np.inf)
    kind = law["type"]
    if kind == "uniform":
        return rng.uniform(float(law.get("low", 0.0)), float(law["high"]), n)
    if kind == "exponential":
        return rng.exponential(1.0 / float(law["rate"]), n)
    raise ConfigError(f"unknown censoring law {kind!r}")


def simulate_survival(hazard: Intensity, censor_law: dict | None, n: int, seed) -> SurvivalSample:
    """Lifetimes with hazard ``s`` on [0, 1) (unit hazard after 1, which
    never affects data restricted to [0, 1)) and independent censoring."""
    if n < 1:
        raise ConfigError("sample size must be positive")
    lam1 = hazard.total
    if not math.isfinite(lam1):
        raise ConfigError("hazard integral diverges on [0, 1)")
    rng = make_rng(seed)
    e = rng.exponential(1.0, n)
    t = np.empty(n)
    late = e >= lam1
    t[late] = 1.0 + (e[late] - lam1)
    target = e[~late]
    lo, hi = np.zeros(target.size), np.ones(target.size)
    for _ in range(int(math.ceil(-math.log2(QUAD_TOL))) + 1):
        mid = 0.5 * (lo + hi)
        below = hazard.integral(np.zeros_like(mid), mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    t[~late] = 0.5 * (lo + hi)
    c = _censor(censor_law, n, rng)
    obs = np.minimum(t, c)
    return SurvivalSample(obs, (t <= c).astype(np.int64))
