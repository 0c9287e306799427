"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--n 16] [--k 8] [--words 20000] [--repeat 5]

Both backends run on identical inputs; their outputs are compared before
any timing is reported.
"""

import argparse
import timeit

import numpy as np

from mdlab import _pykernels
from mdlab.gf2code import LinearCode, random_generator

try:
    from mdlab import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def as_tuple(out) -> tuple:
    return tuple(map(np.asarray, out)) if isinstance(out, tuple) else (np.asarray(out),)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--words", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    code = LinearCode(random_generator(rng, args.n, args.k), n=args.n)
    words = rng.integers(0, 1 << args.n, size=args.words, dtype=np.uint64)
    codebook = code.codebook
    gens = code._key_gens
    nkeys = 1 << (args.n - code.k)

    cases = {
        f"nearest_codewords ({args.words} words, 2^{code.k} codewords)": (
            lambda m: m.nearest_codewords(words, codebook)
        ),
        f"coset_min_weights (2^{args.n - code.k} cosets)": lambda m: m.coset_min_weights(gens, nkeys),
    }
    backends = {"python": _pykernels}
    if _ckernels is None:
        print("compiled extension not available; timing the numpy fallback only")
    else:
        backends["cython"] = _ckernels

    print(f"{'kernel':<52} " + " ".join(f"{b:>10}" for b in backends) + "   speedup")
    for label, call in cases.items():
        ref = as_tuple(call(_pykernels))
        times = {}
        for name, mod in backends.items():
            got = as_tuple(call(mod))
            if not all(np.array_equal(g, w) for g, w in zip(got, ref, strict=True)):
                raise SystemExit(f"{label}: {name} backend disagrees with numpy fallback")
            times[name] = best_of(lambda m=mod: call(m), args.repeat)
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else "       -"
        print(f"{label:<52} " + " ".join(f"{t * 1e3:8.2f}ms" for t in times.values()) + f"  {speed}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
