"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from hdsqm import _kernels_py
from hdsqm.potential import Potential

try:
    from hdsqm import _kernels
except ImportError:
    _kernels = None

V = Potential.quartic(1.0, 1.0)


def cases(mod):
    y0 = np.array([1.0, 0.5, 0.0, 0.2])
    x = np.linspace(-1.0, 1.0, 400)
    u = np.linspace(-10.0, 10.0, 100_000)
    return {
        "dopri5 pure quartic t=50": lambda: mod.dopri5(0, V.d1, V.d2, 0.0, y0, 0.0, 50.0,
                                                      1e-10, 1e-12, 1e-3, 1e12, 10**7),
        "flow_batch 400 points t=5": lambda: mod.flow_batch(V.d1, x, x[::-1], 5.0, 1e-10, 1e-12),
        "sncndn 1e5 arguments": lambda: mod.sncndn(u, 0.3),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = {"python": _kernels_py}
    if _kernels is not None:
        backends["cython"] = _kernels
    results = {}
    for name, mod in backends.items():
        for case, fn in cases(mod).items():
            results[(case, name)] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"{'case':32s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for case in cases(_kernels_py):
        py = results[(case, "python")]
        cy = results.get((case, "cython"))
        if cy is None:
            print(f"{case:32s} {py:12.4f} {'-':>12s} {'-':>9s}")
        else:
            print(f"{case:32s} {py:12.4f} {cy:12.4f} {py / cy:9.1f}")


if __name__ == "__main__":
    main()
