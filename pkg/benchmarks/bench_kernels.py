"""Compiled kernels against the numpy/scipy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--json FILE]

Each case runs once to warm up (compilation is cached on disk) and then
``repeat`` times per engine; the best time is reported together with the
largest difference between the two engines' results.
"""

import argparse
import json
import time

import numpy as np

from monopole import bps, nahm, nahm_inverse, scattering
from monopole.minitwistor import OrientedLine


def _best(fn, repeat):
    fn()
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def case_spectral(engine, n_lines=20):
    rng = np.random.default_rng(42)
    p = np.array([0.3, -0.2, 0.5])
    cfg = bps.bps_config(p)
    us = rng.standard_normal((n_lines, 3))
    us /= np.linalg.norm(us, axis=1)[:, None]
    lines = [OrientedLine.through(p + 0.3 * rng.standard_normal(3), u) for u in us]
    return lambda: scattering.spectral_determinants(cfg, lines, engine=engine)


def case_nahm(engine, k=3):
    T0 = nahm.random_initial(np.random.default_rng(42), k)
    return lambda: nahm.evolve(T0, -0.9, 0.9, engine=engine).T


def case_reconstruct(engine, n_points=2000):
    data = nahm.NahmData.point([0.0, 0.0, 0.0])
    xs = np.random.default_rng(42).uniform(-2, 2, (n_points, 3))
    return lambda: nahm_inverse.reconstruct_connection(data, xs, engine=engine)


CASES = {"spectral_determinants (20 lines)": case_spectral,
         "nahm evolve (k=3, 201 samples)": case_nahm,
         "inverse Nahm connection (2000 points)": case_reconstruct}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json")
    args = parser.parse_args(argv)
    rows = []
    for name, make in CASES.items():
        t_nb, out_nb = _best(make("numba"), args.repeat)
        t_np, out_np = _best(make("numpy"), args.repeat)
        diff = float(np.max(np.abs(np.asarray(out_nb) - np.asarray(out_np))))
        rows.append({"case": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb,
                     "max_difference": diff})
    width = max(len(r["case"]) for r in rows)
    print(f"{'case':<{width}}  {'numba':>9}  {'numpy':>9}  {'speedup':>7}  {'max diff':>9}")
    for r in rows:
        print(f"{r['case']:<{width}}  {r['numba_s']:9.4f}  {r['numpy_s']:9.4f}  "
              f"{r['speedup']:7.1f}  {r['max_difference']:9.2e}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return rows


if __name__ == "__main__":
    main()
