"""Time the numba kernels against their pure-numpy twins.

    python3 benchmarks/bench_kernels.py [--levels 6] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from zero_tracer import _kernels
from zero_tracer.labelling import random_labelling, triangle_mixed_edges
from zero_tracer.sphere_mesh import build_refined


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    T = build_refined(args.levels)
    lab = random_labelling(T, np.random.default_rng(0))
    tme = triangle_mixed_edges(T, lab)
    edge_tris = np.ascontiguousarray(T.edge_tris)

    rng = np.random.default_rng(1)
    # ordered samples of a great circle, as the solver sees them
    t = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
    pts = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
    starts = rng.integers(0, len(pts), 256).astype(np.int64)
    origins = pts[starts]

    cases = {
        f"walk_paths (level {args.levels}, F={T.n_triangles})": (
            _kernels.walk_paths_py, _kernels.walk_paths_nb, (tme, edge_tris)),
        f"first_crossings (M={len(pts)}, 256 queries)": (
            _kernels.first_crossings_py, _kernels.first_crossings_nb, (pts, origins, starts, 1.0)),
    }
    print(f"numba available: {_kernels.HAVE_NUMBA}")
    for name, (py, nb, a) in cases.items():
        t_py = best(lambda: py(*a), args.repeat)
        if nb is None:
            print(f"{name}: numpy {t_py * 1e3:.2f} ms (numba not installed)")
            continue
        nb(*a)  # compile
        t_nb = best(lambda: nb(*a), args.repeat)
        print(f"{name}: numpy {t_py * 1e3:.2f} ms, numba {t_nb * 1e3:.2f} ms, "
              f"speedup {t_py / t_nb:.1f}x")


if __name__ == "__main__":
    main()
