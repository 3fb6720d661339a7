"""Compare the compiled kernels against the pure-Python fallback.

Times the two hot paths (full-gradient evaluation and one mini-batch
epoch) on an identical synthetic instance, checks that both backends
agree to round-off, and prints per-op timings with the speedup. Exits
cleanly when the extension is not built so the script is safe to run
from a source tree without compiling.

Usage: python3 benchmarks/bench_backends.py [--n 20000] [--dim 20]
"""

import argparse
import timeit

import numpy as np

from fedsilo._kernels import _purepy

try:
    from fedsilo._kernels import _core
except ImportError:
    _core = None


def make_instance(n, dim, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, dim))
    X /= np.linalg.norm(X, axis=1).max()
    y = rng.choice([-1.0, 1.0], n)
    w = rng.standard_normal(dim) * 0.5
    b_over_n = rng.standard_normal(dim) * 0.01
    order = rng.permutation(n).astype(np.int64)
    return X, y, w, b_over_n, order


def best_of(fn, repeats=5, number=None):
    """Best per-call time in microseconds, auto-scaling the inner loop."""
    if number is None:
        number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-9)))
    return min(timeit.repeat(fn, number=number, repeat=repeats)) / number * 1e6


def bench_backend(mod, X, y, w, b_over_n, order, batch_size, lr, loss_id, h, lam):
    grad_us = best_of(lambda: mod.objective_grad(X, y, w, loss_id, h, lam, b_over_n))

    def epoch():
        w_run = w.copy()
        mod.sgd_epoch(X, y, w_run, order, batch_size, lr, loss_id, h, lam, b_over_n)
        return w_run

    return grad_us, best_of(epoch), epoch()


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--n", type=int, default=20_000)
    parser.add_argument("--dim", type=int, default=20)
    parser.add_argument("--batch-size", type=int, default=64)
    args = parser.parse_args()

    if _core is None:
        print("compiled kernels not built; nothing to compare")
        return

    X, y, w, b_over_n, order = make_instance(args.n, args.dim)
    loss_id, h, lam, lr = _purepy.LOGISTIC, 0.0, 0.01, 0.1
    shared = (X, y, w, b_over_n, order, args.batch_size, lr, loss_id, h, lam)

    py_grad, py_epoch, w_py = bench_backend(_purepy, *shared)
    c_grad, c_epoch, w_c = bench_backend(_core, *shared)

    g_py = _purepy.objective_grad(X, y, w, loss_id, h, lam, b_over_n)
    g_c = np.asarray(_core.objective_grad(X, y, w, loss_id, h, lam, b_over_n))
    np.testing.assert_allclose(g_c, g_py, rtol=1e-11, atol=1e-14)
    np.testing.assert_allclose(w_c, w_py, rtol=1e-10, atol=1e-13)
    print(f"agreement ok (n={args.n}, dim={args.dim}, logistic)")
    print()
    print(f"{'kernel':<16}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for name, py_us, c_us in [
        ("objective_grad", py_grad, c_grad),
        ("sgd_epoch", py_epoch, c_epoch),
    ]:
        print(f"{name:<16}{py_us:>10.1f}us{c_us:>10.1f}us{py_us / c_us:>9.1f}x")


if __name__ == "__main__":
    main()
