"""Time each hot kernel in its numpy form and its numba form.

    python3 benchmarks/bench_kernels.py [--repeat 20]

The numba timings exclude compilation (one warm-up call each).
"""

import argparse
import time

import numpy as np

from sparsegeom import _kernels as K
from sparsegeom.bouquet import AnifIndex
from sparsegeom.brute import subsets


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(rng):
    P = rng.normal(size=(20000, 8))
    Q = rng.normal(size=(200, 8))
    q = Q[0]
    a, b = rng.normal(size=(2, 20000, 8))
    pts = rng.normal(size=(30, 6))
    verts = np.ascontiguousarray(pts[subsets(30, 3)])
    idx = AnifIndex(rng.normal(size=(60, 8)), 3)
    scan = (idx.origins, idx.flats, idx.ptr, idx.dirs, idx.pids, False)
    qs = rng.normal(size=8)
    tree_np = K._np_kd_build(P, 8)
    tree_nb = K._nb_kd_build(P, 8)
    return [
        ("nearest (n=20000, d=8)", lambda: K._np_nearest(P, q), lambda: K._nb_nearest(P, q)),
        ("nearest_many (200 queries)", lambda: K._np_nearest_many(P, Q), lambda: K._nb_nearest_many(P, Q)),
        ("segment_distances (20000)", lambda: K._np_segment_distances(q, a, b),
         lambda: K._nb_segment_distances(q, a, b)),
        ("simplex_distances (4060 triangles)", lambda: K._np_simplex_distances(q[:6], verts, 1e-12),
         lambda: K._nb_simplex_distances(q[:6], verts, 1e-12)),
        ("bouquet_scan (1770 bases)", lambda: K._np_bouquet_scan(qs, *scan),
         lambda: K._nb_bouquet_scan(qs, *scan)),
        ("kd_query eps=0.25", lambda: K._np_kd_query(P, *tree_np, q, 0.25),
         lambda: K._nb_kd_query(P, *tree_nb, q, 0.25)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':36s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, np_fn, nb_fn in cases(rng):
        t_np = best_of(np_fn, args.repeat if "kd" not in name else 3)
        t_nb = best_of(nb_fn, args.repeat)
        print(f"{name:36s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.1f}")


if __name__ == "__main__":
    main()
