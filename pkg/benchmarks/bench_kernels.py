"""Compare the numba kernels with their pure-numpy twins.

    python benchmarks/bench_kernels.py [--repeat 3] [--full] [--json out.json]

Each case runs on both backends with identical inputs; the table reports
the best wall time per backend, the speed-up, and the largest absolute
difference between the two outputs.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from phest.config import cube_family
from phest.kernels import PairContext
from phest.observations import ConstantCube, PiecewiseConstant, simulate_density, simulate_poisson
from phest.partitions import IntervalFamily, ListFamily, WeightScheme
from phest.selection import PenaltySpec


def _density(level, cells, n=2000):
    fam = IntervalFamily(level, cells)
    obs = simulate_density(PiecewiseConstant((0, 0.25, 1), (2.2, 0.6)), n, seed=1)
    return fam, obs.atom_masses(fam.packed.atom_level)


def _cube():
    fam = ListFamily(cube_family(2, 3, max_splits=2, max_spikes=1))
    obs = simulate_poisson(ConstantCube(2, 50.0), seed=2, level=3)
    return fam, obs.atom_masses(fam.packed.atom_level)


def case_matrices(setup):
    def run(backend):
        fam, (N, M) = setup
        H, HJ = PairContext(fam.packed, N, M, backend=backend).matrices()
        return np.concatenate([H.ravel(), HJ.ravel()])
    return run


def case_pruned(setup):
    def run(backend):
        fam, (N, M) = setup
        ctx = PairContext(fam.packed, N, M, backend=backend)
        pens = PenaltySpec("density", n=2000).penalties(fam.packed.sizes, fam.weights(WeightScheme("dyadic")))
        order = np.argsort(pens, kind="stable")
        D, _ = ctx.pruned(pens, order, np.arange(len(fam)), np.inf, 2.0 * ctx.total * (1 + 1e-9))
        return D
    return run


def case_risk(setup):
    def run(backend):
        fam, (N, M) = setup
        R = np.sqrt(M) * 0.9
        return PairContext(fam.packed, N, M, backend=backend).risk(R, M)
    return run


def cases(full=False):
    small = _density(3, 5)
    mid = _density(4, 5)
    big = _density(5, 8)
    cube = _cube()
    return [
        ("pair matrices, interval family (99 models)", case_matrices(small)),
        ("pair matrices, cube family (236 models)", case_matrices(cube)),
        ("pruned D scan, interval family (1941 models)", case_pruned(mid)) if full else
        ("pruned D scan, interval family (99 models)", case_pruned(small)),
        ("per-model risk, interval family (3.57M models)", case_risk(big)),
    ]


def best_time(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--full", action="store_true", help="pruned scan on 1941 models (numpy takes minutes)")
    ap.add_argument("--json", default=None, help="also write the rows to this file")
    args = ap.parse_args(argv)
    rows = []
    for name, run in cases(args.full):
        run("numba")  # compile outside the timing
        t_nb, out_nb = best_time(lambda: run("numba"), args.repeat)
        t_np, out_np = best_time(lambda: run("numpy"), args.repeat)
        diff = float(np.max(np.abs(out_nb - out_np)))
        rows.append({"case": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb, "max_abs_diff": diff})
        print(f"{name:50s} numba {t_nb:8.4f}s  numpy {t_np:8.4f}s  x{t_np / t_nb:7.1f}  diff {diff:.1e}",
              flush=True)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
