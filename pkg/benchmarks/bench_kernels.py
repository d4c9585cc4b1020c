"""Benchmark the compiled kernel core against the numpy fallback.

Times the three hot kernels at simulation-typical sizes, plus one end-to-end
learner loop per backend. Run as ``python benchmarks/bench_kernels.py``.
"""

import time

import numpy as np

from glbandit.kernels import available_backends
from glbandit.families import make_family
from glbandit.ons import OnsGlmLearner


def _time(fn, reps):
    fn()  # warm up
    tic = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - tic) / reps * 1e6  # microseconds


def bench_backend(impl, d=10, n_arms=100, reps=2000):
    rng = np.random.default_rng(0)
    A = np.eye(d) + 0.01 * np.eye(d)
    Ainv = np.linalg.inv(A)
    x = rng.standard_normal(d)
    x /= np.linalg.norm(x)
    X = rng.standard_normal((n_arms, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X = np.ascontiguousarray(X)
    theta = rng.standard_normal(d)
    M = np.linalg.inv(np.eye(d) + X[:d].T @ X[:d])

    results = {
        "rank_one_update": _time(lambda: impl.rank_one_update(A, Ainv, x), reps),
        "ucb_scores": _time(lambda: impl.ucb_scores(X, theta, M, 1.5), reps),
        "quad_scores": _time(lambda: impl.quad_scores(X, theta, M, 0.3), reps),
    }
    return results


def bench_learner_loop(steps=3000, d=10):
    """One online-learner run per backend, via monkey-patched dispatch."""
    import glbandit.kernels as kernels

    fam = make_family("logit", 1.0)
    out = {}
    saved = kernels.rank_one_update
    for name, impl in available_backends().items():
        kernels.rank_one_update = impl.rank_one_update
        rng = np.random.default_rng(1)
        learner = OnsGlmLearner(d, 1.0, 1.0, fam.constants().kappa)
        xs = rng.standard_normal((steps, d))
        xs /= np.linalg.norm(xs, axis=1, keepdims=True)
        ys = (rng.random(steps) < 0.5).astype(float)
        tic = time.perf_counter()
        for i in range(steps):
            learner.update(xs[i], ys[i], fam)
        out[name] = (time.perf_counter() - tic) / steps * 1e6
        kernels.rank_one_update = saved
    return out


def main():
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    print()
    print(f"{'kernel':<18}" + "".join(f"{name:>14}" for name in backends))
    rows = {name: bench_backend(impl) for name, impl in backends.items()}
    for kernel in next(iter(rows.values())):
        cells = "".join(f"{rows[name][kernel]:>11.2f} us" for name in rows)
        print(f"{kernel:<18}{cells}")
    print()
    loop = bench_learner_loop()
    print(f"{'learner step':<18}" + "".join(f"{loop[name]:>11.2f} us" for name in loop))


if __name__ == "__main__":
    main()
