"""Compare the pure-numpy and compiled kernel backends on hot entry points.

Times feature preparation, batch stress evaluation, and the fused
loss+gradient kernel on a synthetic multiaxial batch for both material
symmetries, and prints the per-call times with the resulting speedups.

Run as: python benchmarks/bench_kernels.py [--count 963] [--hidden 8] [--reps 300]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pann._kernels import get_backend


def _random_spd_batch(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, 3, 3)) * 0.3
    C = np.einsum("nij,nkj->nik", A, A) + np.eye(3)[None]
    return np.stack([C[:, 0, 0], C[:, 1, 1], C[:, 2, 2],
                     C[:, 0, 1], C[:, 0, 2], C[:, 1, 2]], axis=1)


def _time(fn, reps: int) -> float:
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=963, help="batch size")
    ap.add_argument("--hidden", type=int, default=8, help="hidden-layer width")
    ap.add_argument("--reps", type=int, default=300, help="repetitions per timing")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = {"python": get_backend("python")}
    try:
        backends["compiled"] = get_backend("compiled")
    except ImportError:
        print("compiled backend unavailable; timing python only")

    rng = np.random.default_rng(args.seed)
    C6 = _random_spd_batch(args.count, args.seed)
    T6 = rng.normal(size=(args.count, 6))

    print(f"batch={args.count}  hidden={args.hidden}  reps={args.reps}")
    header = f"{'workload':34s}" + "".join(f"{name:>12s}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10s}"
    print(header)

    for tiso, label in ((0, "isotropic"), (1, "transiso")):
        k = 6 if tiso else 4
        beta = 2.0 if tiso else 0.0
        sizes = np.array([k, args.hidden], dtype=np.int64)
        n_theta = args.hidden * (k + 1) + args.hidden
        theta = np.abs(rng.normal(size=n_theta)) * 0.5
        preps = {name: be.prepare(C6, tiso, beta) for name, be in backends.items()}

        rows = [
            ("prepare", lambda be, name: be.prepare(C6, tiso, beta)),
            ("stress_batch_prepared", lambda be, name: be.stress_batch_prepared(
                preps[name], theta, sizes, tiso, beta, 1, 1)),
            ("mse_and_grad_prepared", lambda be, name: be.mse_and_grad_prepared(
                preps[name], T6, theta, sizes, tiso, beta, 1, 1)),
        ]
        for row_label, call in rows:
            times = {}
            for name, be in backends.items():
                times[name] = _time(lambda: call(be, name), args.reps)
            line = f"{label + ' ' + row_label:34s}" + "".join(
                f"{times[name] * 1e3:10.3f}ms" for name in backends)
            if len(times) == 2:
                line += f"{times['python'] / times['compiled']:9.1f}x"
            print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
