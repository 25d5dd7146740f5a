"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--spans S]

Times the three kernels on their own and a full stiffness assembly on the
quarter ring, swapping the backend in place.
"""
import argparse
import contextlib
import timeit

import numpy as np

from nlbc_iga import _kernels_py, kernels
from nlbc_iga.assembly import Discretization
from nlbc_iga.geometry import BoundarySpec
from nlbc_iga.splines import open_uniform
from nlbc_iga.study import reference_geometry

try:
    from nlbc_iga import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

NAMES = ("find_spans", "basis_funs_ders", "accumulate_bilinear")


@contextlib.contextmanager
def backend(module):
    saved = {n: getattr(kernels, n) for n in NAMES}
    for n in NAMES:
        setattr(kernels, n, getattr(module, n))
    try:
        yield
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def best(fun, repeat):
    return min(timeit.repeat(fun, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--spans", type=int, default=20)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return 1

    rng = np.random.default_rng(0)
    U = open_uniform(3, args.spans).values
    x = rng.uniform(0, 1, 20000)
    spans = _kernels_py.find_spans(U, 3, x)
    E, Q, nl = args.spans ** 2, 16, 16
    rows = rng.integers(0, 500, (E, nl)).astype(np.intp)
    left = rng.normal(size=(E, Q, nl, 2))
    w = rng.uniform(size=(E, Q))

    cases = {
        "find_spans (20k pts)": lambda m: (lambda: m.find_spans(U, 3, x)),
        "basis_funs_ders (20k pts, p=3)": lambda m: (lambda: m.basis_funs_ders(U, 3, spans, x)),
        f"accumulate_bilinear ({E} elems)": lambda m: (lambda: m.accumulate_bilinear(
            np.zeros((500, 500)), rows, rows, left, left, w)),
    }
    geo = reference_geometry(3, args.spans)

    def assemble():
        Discretization(geo, BoundarySpec()).stiffness()

    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for label, make in cases.items():
        t_py = best(make(_kernels_py), args.repeat)
        t_c = best(make(_ckernels), args.repeat)
        print(f"{label:40s} {1e3 * t_py:12.2f} {1e3 * t_c:12.2f} {t_py / t_c:9.1f}")
    timings = {}
    for name, mod in (("python", _kernels_py), ("cython", _ckernels)):
        with backend(mod):
            timings[name] = best(assemble, args.repeat)
    label = f"stiffness assembly (p=3, {args.spans}x{args.spans})"
    print(f"{label:40s} {1e3 * timings['python']:12.2f} {1e3 * timings['cython']:12.2f} "
          f"{timings['python'] / timings['cython']:9.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
