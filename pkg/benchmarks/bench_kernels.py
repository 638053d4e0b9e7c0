"""Compare the compiled and numpy tick kernels.

    python benchmarks/bench_kernels.py [--n 1000] [--d 6] [--horizon 200] [--repeat 5]

Both backends run the same simulation; the script checks that their
outputs are bit-identical and reports the best wall time of each.
"""
import argparse
import time

import numpy as np

from synchrony import _backend
from synchrony.netgen import NetworkSpec, make_small_world


def bench(kern, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kern.simulate(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--d", type=int, default=6)
    ap.add_argument("--horizon", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args(argv)

    graph = make_small_world(NetworkSpec(opts.n, opts.d, 0.3, opts.seed))
    rng = np.random.default_rng(opts.seed)
    p_agent = rng.uniform(0.3, 0.9, opts.n)
    T0 = rng.uniform(0.0, 0.5, opts.n)
    a0 = np.zeros(opts.n, dtype=np.uint8)
    a0[0] = 1
    t = np.arange(opts.horizon)[:, None]
    f = np.repeat(0.5 * np.sin(2 * np.pi * t / 16) + 0.5, opts.n, axis=1)
    forced = np.zeros((opts.horizon + 1, opts.n), dtype=np.uint8)
    forced[::16, 0] = 1
    args = (graph.indptr, graph.indices, p_agent, T0, a0, f, forced, (0.1, 1.0, 0.0, 1.0), False)

    rows = [("python", *bench(_backend.get("python"), args, opts.repeat))]
    try:
        rows.append(("compiled", *bench(_backend.get("compiled"), args, opts.repeat)))
    except ImportError:
        print("compiled backend not built; showing the numpy fallback only")
    base = rows[0][1]
    print(f"n={opts.n} d={opts.d} horizon={opts.horizon} edges={graph.n_edges}")
    for name, secs, _ in rows:
        print(f"{name:>9}: {secs * 1e3:9.2f} ms  ({base / secs:5.1f}x)")
    if len(rows) == 2:
        same = all(np.array_equal(x, y) for x, y in zip(rows[0][2], rows[1][2]))
        print(f"outputs bit-identical: {same}")


if __name__ == "__main__":
    main()
