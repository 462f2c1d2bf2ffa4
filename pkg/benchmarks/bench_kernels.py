"""Time the compiled clustering kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--repeat 3]

Both backends are called directly, so the comparison does not depend on
which one the package selected at import.
"""

import argparse
import time

import numpy as np

from kgaffinity import _pykernels
from kgaffinity.kernels import pack_fingerprints

try:
    from kgaffinity import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000, help="number of items")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    words = pack_fingerprints(rng.random((args.n, 2048)) < 0.05)
    X = np.ascontiguousarray(rng.random((args.n, 552)))
    D = _pykernels.cosine_matrix(X)
    cases = [
        ("jaccard_matrix", lambda k: k.jaccard_matrix(words)),
        ("cosine_matrix", lambda k: k.cosine_matrix(X)),
        ("threshold_components", lambda k: k.threshold_components(D, 0.2)),
        ("jaccard_components", lambda k: k.jaccard_components(words, 0.9)),
    ]
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels is not None else [])
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':<22}" + "".join(f"{name:>12}" for name, _ in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, call in cases:
        results = [best_of(lambda: call(k), args.repeat) for _, k in backends]
        row = f"{label:<22}" + "".join(f"{t:>11.4f}s" for t, _ in results)
        if len(results) > 1:
            a, b = results[0][1], results[1][1]
            agree = np.allclose(a, b, rtol=0, atol=1e-12) if a.dtype.kind == "f" else \
                len(set(zip(a.tolist(), b.tolist()))) == len(set(a.tolist())) == len(set(b.tolist()))
            row += f"{results[0][0] / results[1][0]:>11.1f}x" + ("" if agree else "  (outputs differ!)")
        print(row)


if __name__ == "__main__":
    main()
