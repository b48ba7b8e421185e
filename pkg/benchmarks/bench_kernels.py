"""Compare the compiled and pure-Python multi-source BFS kernels.

    python3 benchmarks/bench_kernels.py --sizes 100 300 900 --repeat 5
"""

import argparse
import timeit

import numpy as np

from greedy_peering import _pykernels
from greedy_peering.constructions import gen_random
from greedy_peering.graph import GameParams

try:
    from greedy_peering import _ckernels
except ImportError:
    _ckernels = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 900])
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--miners", type=float, default=0.1, help="miner fraction")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if _ckernels is None:
        print("compiled extension not built; only the Python kernel is timed")
    print(f"{'n':>6} {'sources':>8} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n in args.sizes:
        m = max(1, int(n * args.miners))
        g = gen_random(GameParams(n=n, m=m, d=args.d), 0)
        indptr, indices = g.undirected_csr()
        sources = np.arange(m, dtype=np.int32)

        def py():
            return _pykernels.bfs_multi(indptr, indices, n, sources, -1)

        t_py = min(timeit.repeat(py, number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{n:>6} {m:>8} {t_py:>10.2f} {'-':>10} {'-':>8}")
            continue

        def cy():
            return _ckernels.bfs_multi(indptr, indices, n, sources, -1)

        assert np.array_equal(py(), cy())
        t_cy = min(timeit.repeat(cy, number=1, repeat=args.repeat)) * 1e3
        print(f"{n:>6} {m:>8} {t_py:>10.2f} {t_cy:>10.3f} {t_py / t_cy:>7.0f}x")


if __name__ == "__main__":
    main()
