"""Time the compiled series kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per workload with the best-of-N time of each backend and
the speed-up.  Both backends must agree on every value they return.
"""

import argparse
import timeit

from selfsim import _kernels_py

try:
    from selfsim import _kernels as _compiled
except ImportError:
    _compiled = None

WORKLOADS = {
    "1F1(0.5; 1.3; -4.9)": ("pfq_series", ((0.5,), (1.3,), -4.9, 1e-16, 10_000, 3)),
    "3F2(1,4/3,5/3; 1.4,1.8; -0.9)": (
        "pfq_series", ((1.0, 4 / 3, 5 / 3), (1.4, 1.8), -0.9, 1e-16, 10_000, 3)),
    "1F3(1; .8,.7,.6; -30)": ("pfq_series", ((1.0,), (0.8, 0.7, 0.6), -30.0, 1e-16, 10_000, 3)),
    "Psi2(0.5; 0.8, 0.9; -2, -1.5)": (
        "kdf_series", ((0.5,), (), (), (), (0.8,), (0.9,), -2.0, -1.5, 1e-16, 10_000, 3)),
    "KdF 1:0;0 / 0:2;2 at (-1, -0.5)": (
        "kdf_series",
        ((1.0,), (), (), (), (0.78, 0.57), (0.75, 0.5), -1.0, -0.5, 1e-16, 10_000, 3)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args()
    if _compiled is None:
        print("compiled extension not built; only the Python kernels are available")
    print(f"{'workload':36s} {'python [us]':>12s} {'cython [us]':>12s} {'speed-up':>9s}")
    for label, (name, call_args) in WORKLOADS.items():
        py_fn = getattr(_kernels_py, name)
        t_py = min(timeit.repeat(lambda: py_fn(*call_args), repeat=args.repeat,
                                 number=args.number)) / args.number * 1e6
        if _compiled is None:
            print(f"{label:36s} {t_py:12.2f} {'-':>12s} {'-':>9s}")
            continue
        c_fn = getattr(_compiled, name)
        v_py, v_c = py_fn(*call_args)[0], c_fn(*call_args)[0]
        if abs(v_py - v_c) > 1e-13 * max(1.0, abs(v_py)):
            raise SystemExit(f"{label}: backends disagree ({v_py!r} vs {v_c!r})")
        t_c = min(timeit.repeat(lambda: c_fn(*call_args), repeat=args.repeat,
                                number=args.number)) / args.number * 1e6
        print(f"{label:36s} {t_py:12.2f} {t_c:12.2f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
