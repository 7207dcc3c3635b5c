"""Compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]

Times the dense simplex, the table gradient and the Frank-Wolfe loop on the
same inputs with both backends, checks that their outputs agree, and prints
one row per kernel with the median time of each backend and the speedup.
"""
from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from drsubmax import _fallback, _kernel
from drsubmax.functions import multilinear_exact, random_coverage, random_quadratic
from drsubmax.polytope import cardinality, knapsack


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def _cases(rng):
    n = 6
    Q = random_quadratic(n, rng)
    C = multilinear_exact(random_coverage(n, rng))
    P = knapsack(rng.uniform(0.2, 1.0, size=n), 1.5)
    K = cardinality(n, 2)
    W = np.zeros((0, n))
    t = np.zeros(0)
    c = rng.standard_normal(n)
    x = rng.random(n)
    x0 = np.zeros(n)
    return [
        ("lp_solve n=6 knapsack", lambda m: m.lp_solve(P.A, P.b, W, t, c)),
        ("table_gradient n=6", lambda m: m.table_gradient(C.table, n, x)),
        ("fw_run quadratic 400 it", lambda m: m.fw_run(0, Q.H, Q.h, None, K.A, K.b, W, t, x0, 0.05, 400)),
        ("fw_run table 400 it", lambda m: m.fw_run(1, None, None, C.table, K.A, K.b, W, t, x0, 0.05, 400)),
    ]


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(_same(u, v) for u, v in zip(a, b))
    return bool(np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=1e-12))


def run(repeat: int = 5, seed: int = 0):
    if not _kernel.compiled_available():
        raise SystemExit("compiled kernel not built; run `pip install --no-build-isolation -e .` first")
    rows = []
    for name, call in _cases(np.random.default_rng(seed)):
        t_py, out_py = _median_time(lambda: call(_fallback), repeat)
        t_c, out_c = _median_time(lambda: call(_kernel._core), repeat)
        rows.append({"kernel": name, "python_s": t_py, "compiled_s": t_c,
                     "speedup": t_py / t_c if t_c > 0 else float("inf"), "agree": _same(out_py, out_c)})
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    rows = run(args.repeat, args.seed)
    print(f"{'kernel':<26}{'python':>12}{'compiled':>12}{'speedup':>10}  agree")
    for r in rows:
        print(f"{r['kernel']:<26}{r['python_s'] * 1e3:>10.3f}ms{r['compiled_s'] * 1e3:>10.3f}ms"
              f"{r['speedup']:>9.1f}x  {r['agree']}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
