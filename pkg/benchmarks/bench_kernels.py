"""Time the compiled and pure-Python LCS kernels on random token sequences.

    python benchmarks/bench_kernels.py [--lengths 10 30 100 400] [--repeat 5]
"""

import argparse
import random
import sys
import timeit

from nesum import kernels


def sequences(rng, length, vocab, count):
    return [
        ([f"t{rng.randrange(vocab)}" for _ in range(length)], [f"t{rng.randrange(vocab)}" for _ in range(length)])
        for _ in range(count)
    ]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lengths", type=int, nargs="+", default=[10, 30, 100, 400])
    parser.add_argument("--pairs", type=int, default=50, help="pairs per length")
    parser.add_argument("--vocab", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; only the pure-Python backend is available", file=sys.stderr)
    rng = random.Random(args.seed)
    print(f"{'length':>7} " + " ".join(f"{b + ' ms/pair':>18}" for b in backends) + (f" {'speedup':>8}" if len(backends) > 1 else ""))
    for length in args.lengths:
        pairs = sequences(rng, length, args.vocab, args.pairs)
        results = {}
        for backend in backends:
            expected = [kernels.lcs_length(a, b, backend) for a, b in pairs]
            results.setdefault("check", expected)
            if expected != results["check"]:
                raise SystemExit(f"backends disagree at length {length}")
            timer = timeit.Timer(lambda: [kernels.lcs_length(a, b, backend) for a, b in pairs])
            best = min(timer.repeat(repeat=args.repeat, number=1))
            results[backend] = 1000 * best / len(pairs)
        row = f"{length:>7} " + " ".join(f"{results[b]:>18.4f}" for b in backends)
        if len(backends) > 1:
            row += f" {results['python'] / results['cython']:>7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
