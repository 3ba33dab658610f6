"""Benchmark the greedy refinement kernels: compiled extension vs numpy.

Runs both implementations on identical random similarity matrices,
verifies they agree, and reports best-of-N wall times per matrix size.

    python3 benchmarks/bench_refine.py --sizes 100,300,600 --repeats 5
"""

import argparse
import time

import numpy as np

from lfrefine._kernels import BACKEND, fallback

try:
    from lfrefine._kernels import _greedy
except ImportError:
    _greedy = None


def random_similarity(rng, m):
    vals = np.zeros((m, m))
    iu = np.triu_indices(m, 1)
    vals[iu] = rng.random(iu[0].size)
    vals = vals + vals.T
    np.fill_diagonal(vals, 1.0)
    return vals


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def bench_size(rng, m, repeats):
    vals = random_similarity(rng, m)
    m_r = m // 4
    m_e = m
    rows = []
    removal_results = {}
    edge_results = {}
    backends = [("numpy", fallback)]
    if _greedy is not None:
        backends.append(("cython", _greedy))
    for name, impl in backends:
        t_removal, removed = best_of(lambda: impl.greedy_removal(vals, m_r), repeats)
        survivors = np.setdiff1d(np.arange(m), np.asarray(removed))
        sub = np.ascontiguousarray(vals[np.ix_(survivors, survivors)])
        t_edges, picked = best_of(lambda: impl.greedy_edges(sub, m_e), repeats)
        removal_results[name] = np.asarray(removed)
        edge_results[name] = (np.asarray(picked[0]), np.asarray(picked[1]))
        rows.append((name, t_removal, t_edges))
    if len(backends) == 2:
        assert np.array_equal(removal_results["numpy"], removal_results["cython"])
        assert np.array_equal(edge_results["numpy"][0], edge_results["cython"][0])
        assert np.array_equal(edge_results["numpy"][1], edge_results["cython"][1])
    return m_r, m_e, rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="100,300,600", help="comma-separated m values")
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    rng = np.random.default_rng(args.seed)
    print(f"active package backend: {BACKEND}")
    if _greedy is None:
        print("compiled extension unavailable; timing the numpy fallback only")
    header = f"{'m':>5} {'m_r':>5} {'m_e':>5} {'backend':>8} {'removal_s':>10} {'edges_s':>10}"
    print(header)
    print("-" * len(header))
    for m in sizes:
        m_r, m_e, rows = bench_size(rng, m, args.repeats)
        base = rows[0]
        for name, t_removal, t_edges in rows:
            print(f"{m:>5} {m_r:>5} {m_e:>5} {name:>8} {t_removal:>10.6f} {t_edges:>10.6f}")
        if len(rows) == 2:
            _, nr, ne = rows[0][0], rows[0][1], rows[0][2]
            _, cr, ce = rows[1][0], rows[1][1], rows[1][2]
            print(
                f"{'':>5} {'':>5} {'':>5} {'speedup':>8} "
                f"{nr / cr:>9.2f}x {ne / ce:>9.2f}x"
            )
    print("outputs verified identical across backends" if _greedy is not None else "")


if __name__ == "__main__":
    main()
