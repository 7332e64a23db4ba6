"""Exact dyadic rationals and dyadic cubes."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

from ..errors import PartitionError


@total_ordering
@dataclass(frozen=True)
class DyadicPoint:
    """The number ``numerator * 2**-level`` in [0, 1], stored in lowest terms.

    Two points are equal exactly when they denote the same rational, since
    the constructor reduces the pair until the numerator is odd (or zero,
    in which case the level is 0).
    """

    numerator: int
    level: int = 0

    def __post_init__(self):
        num, lev = int(self.numerator), int(self.level)
        if num < 0 or lev < 0:
            raise PartitionError(f"negative dyadic component ({num}, {lev})")
        if num == 0:
            lev = 0
        else:
            shift = min((num & -num).bit_length() - 1, lev)
            num >>= shift
            lev -= shift
        if num > (1 << lev):
            raise PartitionError(f"{num}/2^{lev} lies outside [0, 1]")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "level", lev)

    @classmethod
    def coerce(cls, value) -> "DyadicPoint":
        """Build from a DyadicPoint, a ``(num, level)`` pair, a Fraction,
        an int (0 or 1) or a dict ``{"num": .., "level": ..}``."""
        if isinstance(value, DyadicPoint):
            return value
        if isinstance(value, dict):
            return cls(value["num"], value["level"])
        if isinstance(value, tuple):
            return cls(*value)
        if isinstance(value, int):
            return cls(value, 0)
        if isinstance(value, float):
            value = Fraction(value)
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise PartitionError(f"{value} is not dyadic")
            return cls(value.numerator, den.bit_length() - 1)
        raise PartitionError(f"cannot interpret {value!r} as a dyadic point")

    def at_level(self, level: int) -> int:
        """Integer ``j`` with ``self == j / 2**level``."""
        if level < self.level:
            raise PartitionError(f"{self} is not on the level-{level} grid")
        return self.numerator << (level - self.level)

    def __lt__(self, other):
        if not isinstance(other, DyadicPoint):
            return NotImplemented
        return (self.numerator << other.level) < (other.numerator << self.level)

    def __float__(self):
        return self.numerator / (1 << self.level)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.level)

    def to_json(self) -> dict:
        return {"num": self.numerator, "level": self.level}

    def __repr__(self):
        return f"DyadicPoint({self.numerator}/2^{self.level})"


ZERO = DyadicPoint(0, 0)
ONE = DyadicPoint(1, 0)


@dataclass(frozen=True)
class DyadicCube:
    """The cube ``prod_i [l_i 2^-j, (l_i + 1) 2^-j)`` with 0-based indices.

    A cube indexed ``l = 1..2^j`` in 1-based notation is ``DyadicCube(j, l - 1)``.
    """

    level: int
    index: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.index)
        side = 1 << self.level
        if self.level < 0 or not idx or any(i < 0 or i >= side for i in idx):
            raise PartitionError(f"invalid dyadic cube ({self.level}, {idx})")
        object.__setattr__(self, "index", idx)

    @property
    def k(self) -> int:
        return len(self.index)

    def contains(self, other: "DyadicCube") -> bool:
        if other.level < self.level or other.k != self.k:
            return False
        shift = other.level - self.level
        return all((o >> shift) == s for o, s in zip(other.index, self.index))

    def children(self) -> list["DyadicCube"]:
        """The ``2**k`` cubes one level down, in row-major order."""
        out = []
        for code in range(1 << self.k):
            bits = [(code >> (self.k - 1 - d)) & 1 for d in range(self.k)]
            out.append(DyadicCube(self.level + 1, tuple(2 * i + b for i, b in zip(self.index, bits))))
        return out

    def volume(self) -> Fraction:
        return Fraction(1, 1 << (self.level * self.k))

    def to_json(self) -> dict:
        return {"level": self.level, "index": list(self.index)}
