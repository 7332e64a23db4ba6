"""Shared random generators for tests."""
import numpy as np


def random_interval_partition(rng, max_level=8, max_cells=None):
    from phest.partitions import IntervalPartition
    level = int(rng.integers(0, max_level + 1))
    inner = np.arange(1, 1 << level)
    if inner.size == 0:
        return IntervalPartition.trivial()
    k = int(rng.integers(0, min(inner.size, (max_cells or inner.size + 1) - 1) + 1))
    pts = rng.choice(inner, size=k, replace=False)
    return IntervalPartition.from_grid(pts, level)


# (criterion, verdict, detail) lines from tests/test_acceptance.py
ACCEPTANCE: list = []


def record(criterion: str, ok: bool, detail: str, known_failure: bool = False) -> None:
    verdict = "PASS" if ok else ("FAIL (known, see decisions ledger)" if known_failure else "FAIL")
    line = f"[criterion {criterion}] {verdict}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
