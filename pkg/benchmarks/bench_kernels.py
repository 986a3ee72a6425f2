"""Compare the numba and numpy kernel backends.

Run: python benchmarks/bench_kernels.py [--sizes 16,32,64,128] [--repeats 20]

Prints one CSV row per (kernel, n, backend) with the median time in
microseconds, after a warm-up call so numba compilation is excluded. Also
checks that both backends agree on every input.
"""

import argparse
import statistics
import sys
import time

import numpy as np

from touriso import _kernels
from touriso.core import lex_product, paley, random_tournament, transitive


def instances(n, rng):
    yield "random", random_tournament(n, int(rng.integers(2**31)))
    yield "transitive", transitive(n)
    q = n - 1 if (n - 1) % 4 == 3 else n + (3 - n % 4) % 4
    if all(q % p for p in range(2, int(q**0.5) + 1)):
        yield "paley", paley(q)
    k = round(n ** 0.5)
    if k >= 3 and k % 2 == 1:
        inner = random_tournament(k, 1)
        yield "lexprod", lex_product(inner, inner)


def timed(fn, args, repeats):
    fn(*args)
    out = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn(*args)
        out.append((time.perf_counter() - t) * 1e6)
    return statistics.median(out)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="16,32,64,128")
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = ["numpy"]
    if _kernels._HAVE_NUMBA:
        backends.insert(0, "numba")
    else:
        print("numba not importable; timing the numpy backend only", file=sys.stderr)
    kernels = {b: _kernels.get_backend(b) for b in backends}
    rng = np.random.default_rng(args.seed)

    print("kernel,family,n,backend,median_us")
    for n in [int(x) for x in args.sizes.split(",")]:
        for family, T in instances(n, rng):
            adj, colors = T.adj, T.colors
            perm = rng.permutation(T.n).astype(np.int64)
            labels = rng.integers(0, 4, T.n).astype(np.int64)
            results = {}
            for b in backends:
                refine, is_aut, blocks = kernels[b]
                results[b] = (refine(adj, colors), is_aut(adj, colors, perm), blocks(adj, labels, 4))
                for name, fn, fargs in (
                    ("refine", refine, (adj, colors)),
                    ("is_automorphism", is_aut, (adj, colors, perm)),
                    ("block_counts", blocks, (adj, labels, 4)),
                ):
                    print(f"{name},{family},{T.n},{b},{timed(fn, fargs, args.repeats):.1f}")
            if len(backends) == 2:
                a, b = results["numba"], results["numpy"]
                if not (np.array_equal(a[0], b[0]) and a[1] == b[1] and np.array_equal(a[2], b[2])):
                    raise SystemExit(f"backends disagree on {family} n={T.n}")


if __name__ == "__main__":
    main()
