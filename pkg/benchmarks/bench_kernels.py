"""Compiled vs pure-Python kernels on the workloads the engine actually runs.

    python benchmarks/bench_kernels.py [--radius 8] [--repeat 5]

Each row times one kernel on both backends (best of ``--repeat``) and checks
that the outputs are identical.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from odoforge import kernels
from odoforge.chains import validate_chain
from odoforge.config import fixture_path, load_config
from odoforge.cosets import subgroup_from_generators
from odoforge.words import GroupDescriptor, ball_enumerate


def _best(fn, repeat: int) -> tuple[float, object]:
    times = []
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def workloads(radius: int):
    cfg = load_config(fixture_path("f2_s3"))
    chain = validate_chain(cfg.group, cfg.chain_levels())
    deep = chain.levels[-1]
    ball = ball_enumerate(cfg.group, radius)
    letters, offsets = kernels.pack_words([w.letters for w in ball])
    table = deep.np_table
    starts = np.arange(len(ball), dtype=np.int32) % deep.index
    grid_starts = np.arange(deep.index, dtype=np.int32)
    yield f"walk_many  F2 ball r={radius} ({len(ball)} words), index {deep.index}", \
        lambda: kernels.walk_many(table, letters, offsets, starts)
    yield f"walk_grid  F2 ball r={radius} x {deep.index} starts", \
        lambda: kernels.walk_grid(table, letters, offsets, grid_starts)

    z2 = GroupDescriptor.abelian(["a", "b"])
    lat = subgroup_from_generators(z2, ["a^64*b^3", "b^64"])
    basis = np.array(lat.hnf, dtype=np.int64)
    radix = np.array([basis[i, i] for i in range(2)], dtype=np.int64)
    us = np.array([w.data for w in ball_enumerate(z2, 40)], dtype=np.int64)
    gs = np.array([w.data for w in ball_enumerate(z2, 12)], dtype=np.int64)
    yield f"lattice_grid  Z^2 {len(us)} x {len(gs)} points", \
        lambda: kernels.lattice_grid(basis, radix, us, gs)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--radius", type=int, default=8)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    try:
        kernels.use("compiled")
    except ImportError:
        print("compiled kernels are not built; run `pip install --no-build-isolation -e .` with Cython available")
        return 1
    rows = []
    for name, fn in workloads(args.radius):
        kernels.use("compiled")
        fast, out_c = _best(fn, args.repeat)
        kernels.use("python")
        slow, out_p = _best(fn, args.repeat)
        if not np.array_equal(out_c, out_p):
            raise AssertionError(f"backends disagree on {name}")
        rows.append((name, fast, slow))
    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'compiled':>10}  {'python':>10}  {'speedup':>8}")
    for name, fast, slow in rows:
        print(f"{name:<{width}}  {fast * 1e3:>8.2f}ms  {slow * 1e3:>8.2f}ms  {slow / fast:>7.1f}x")
    print(f"geometric mean speedup: {statistics.geometric_mean([s / f for _, f, s in rows]):.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
