"""Compare the compiled kernels against the pure NumPy fallback.

Times the batch hot paths (log strain, energy, 2D stress) on random
well-conditioned batches and prints one table row per (op, backend).

Run: python3 benchmarks/bench_kernels.py [--n 200000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from henckylab import kernels


def random_batch(rng, n, dim):
    # rotations times log-uniform stretches, det > 0 by construction
    lams = np.exp(rng.uniform(np.log(0.2), np.log(5.0), (n, dim)))
    a = rng.standard_normal((n, dim, dim))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.einsum("nii->ni", r))[:, None, :]
    q[np.linalg.det(q) < 0, :, -1] *= -1.0
    return q * lams[:, None, :]


def timeit(fn, *args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    batches = {2: random_batch(rng, args.n, 2), 3: random_batch(rng, args.n, 3)}
    backends = kernels.get_backends()
    print(f"batch size {args.n}, best of {args.repeats}, active backend: "
          f"{kernels.backend_name()}")
    print(f"{'op':<22} {'backend':<10} {'time':>9}  {'per call':>9}")

    rows = [
        ("log_strain 2d", lambda impl: impl.log_strain_2d(batches[2])),
        ("log_strain 3d", lambda impl: impl.log_strain_3d(batches[3])),
        ("piola 2d", lambda impl: impl.piola_2d(batches[2], 1.0, 1.0, 1 / 3, 0.125)),
    ]
    for label, call in rows:
        for name, impl in backends.items():
            dt = timeit(call, impl, repeats=args.repeats)
            print(f"{label:<22} {name:<10} {dt:8.4f}s  {dt / args.n * 1e9:7.1f}ns")

    for name, impl in backends.items():
        dev2, trl, det = impl.log_strain_3d(batches[3])
        w = (3.0 * np.exp(dev2 / 3.0) + 4.0 * np.exp(0.125 * trl * trl))
        print(f"checksum {name}: energy sum {w.sum():.6f}, min det {det.min():.4f}")


if __name__ == "__main__":
    main()
