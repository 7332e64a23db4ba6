"""Partition types, families and weights used as model indices."""
from .cube import CubePartition
from .dyadic import ONE, ZERO, DyadicCube, DyadicPoint
from .family import (
    Family,
    IntervalFamily,
    ListFamily,
    PackedFamily,
    as_family,
    count_interval_family,
    delta_bound_check,
    enumerate_interval_family,
)
from .interval import IntervalPartition
from .trees import TreePartition, count_tree_family, enumerate_tree_family, fuss_catalan
from .vector import (
    VectorPartition,
    count_consecutive_family,
    count_singleton_family,
    enumerate_consecutive_family,
    enumerate_singleton_family,
)
from .weights import (
    WeightScheme,
    dyadic_sigma,
    dyadic_weight,
    tree_sigma,
    tree_sigma_series,
    truncated_sigma,
    vector_interval_sigma,
    vector_singletons_sigma,
    weight,
)


def partition_from_json(obj):
    """Inverse of ``to_json`` for every partition kind."""
    kind = obj.get("kind") if isinstance(obj, dict) else "interval"
    table = {"interval": IntervalPartition, "cube": CubePartition,
             "tree": TreePartition, "vector": VectorPartition}
    if kind not in table:
        from ..errors import PartitionError
        raise PartitionError(f"unknown partition kind {kind!r}")
    return table[kind].from_json(obj)


__all__ = [
    "CubePartition", "DyadicCube", "DyadicPoint", "Family", "IntervalFamily", "IntervalPartition",
    "ListFamily", "ONE", "PackedFamily", "TreePartition", "VectorPartition", "WeightScheme", "ZERO",
    "as_family", "count_consecutive_family", "count_interval_family", "count_singleton_family",
    "count_tree_family", "delta_bound_check", "dyadic_sigma", "dyadic_weight",
    "enumerate_consecutive_family", "enumerate_interval_family", "enumerate_singleton_family",
    "enumerate_tree_family", "fuss_catalan", "partition_from_json", "tree_sigma",
    "tree_sigma_series", "truncated_sigma", "vector_interval_sigma", "vector_singletons_sigma",
    "weight",
]
