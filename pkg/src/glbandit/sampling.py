"""Multinomial importance-sampling estimators of inner products.

Used to approximate the many query-times-projection inner products behind
hash-key computation: draw coordinates i ~ p and average q_i a_i / p_i.
Two probability designs are provided: "l1" (p_i proportional to |q_i|) and
"l2" (p_i proportional to q_i^2), with exact variance formulas and the
matching concentration bounds.
"""

from __future__ import annotations

import math

import numpy as np


class AliasSampler:
    """Constant-time multinomial draws after linear-time table construction."""

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        n = p.shape[0]
        scaled = p * n
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s = small.pop()
            l = large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = l
            scaled[l] = scaled[l] - (1.0 - scaled[s])
            (small if scaled[l] < 1.0 else large).append(l)
        for i in large + small:
            self.prob[i] = 1.0

    def draw(self, rng, size):
        n = self.prob.shape[0]
        k = rng.integers(0, n, size=size)
        accept = rng.random(size=size) < self.prob[k]
        return np.where(accept, k, self.alias[k])


class SamplingScheme:
    """Coordinate-sampling design for inner products against a fixed query q.

    The alias table is built once per query and shared by every estimate
    against that query.
    """

    def __init__(self, kind, q):
        if kind not in ("l1", "l2"):
            raise ValueError("kind must be 'l1' or 'l2'")
        q = np.asarray(q, dtype=float)
        if q.ndim != 1 or not np.any(q):
            raise ValueError("query must be a nonzero 1-d vector")
        self.kind = kind
        self.q = q
        w = np.abs(q) if kind == "l1" else q * q
        self.p = w / w.sum()
        self._alias = AliasSampler(self.p)
        # ratios q_i / p_i with 0/0 -> 0 (zero-probability coordinates are
        # never drawn)
        self._ratio = np.divide(q, self.p, out=np.zeros_like(q),
                                where=self.p > 0)

    @property
    def probs(self):
        return self.p

    def sampled_dot(self, a, m, rng):
        """Average of m one-coordinate estimates of q . a."""
        if m < 1:
            raise ValueError("m must be >= 1")
        a = np.asarray(a, dtype=float)
        idx = self._alias.draw(rng, m)
        return float(np.mean(self._ratio[idx] * a[idx]))

    def sampled_dots(self, A, m, rng):
        """Row-wise sampled estimates of q . A[i] (independent draws per row)."""
        A = np.asarray(A, dtype=float)
        idx = self._alias.draw(rng, (A.shape[0], m))
        rows = np.arange(A.shape[0])[:, None]
        return np.mean(self._ratio[idx] * A[rows, idx], axis=1)

    def exact_variance(self, a):
        """Closed-form variance of a single-draw estimate."""
        a = np.asarray(a, dtype=float)
        dot = float(self.q @ a)
        if self.kind == "l1":
            l1 = float(np.abs(self.q).sum())
            return l1 * float(np.abs(self.q) @ (a * a)) - dot * dot
        return float(self.q @ self.q) * float(a @ a) - dot * dot


def hoeffding_bound(q, a, m, eps):
    """Tail bound for the l1 design: 2 exp(-m eps^2 / (2 ||q||_1^2 ||a||_max^2))."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m < 1:
        raise ValueError("m must be >= 1")
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    M = float(np.abs(q).sum()) * float(np.max(np.abs(a)))
    return 2.0 * math.exp(-m * eps * eps / (2.0 * M * M))


def chebyshev_bound(q, a, m, eps):
    """Polynomial tail bound for the l2 design: ||q||^2 ||a||^2 / (m eps^2)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    return float(q @ q) * float(a @ a) / (m * eps * eps)


def l2_exponential_bound(q, a, m, eps):
    """Exponential tail bound for the l2 design.

    Degenerates when some q_i = 0 with a_i != 0 (the estimate support is
    unbounded); reported as 1 in that case.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    q = np.asarray(q, dtype=float)
    a = np.asarray(a, dtype=float)
    zero = q == 0.0
    if np.any(zero & (a != 0.0)):
        return 1.0
    live = ~zero
    if not np.any(live):
        return 1.0
    M = float(q @ q) * float(np.max(np.abs(a[live] / q[live])))
    return 2.0 * math.exp(-m * eps * eps / (2.0 * M * M))


def gaussian_variance_study(d, trials, rng, tail_reps=20000, tail_m=5):
    """Compare the two designs on i.i.d. standard normal (q, a) pairs.

    Reports per-trial exact variances, their means normalized by d**2 (the
    natural scale, since both variances grow like d**2 for Gaussian pairs),
    the fraction of trials where l1 has the smaller variance, and a
    tail-comparison sample at matched variance: tail_reps estimates with
    tail_m draws each for one fixed (q, a) pair, the l2 sample rescaled
    about the true value so its standard deviation matches l1's.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    var_l1 = np.empty(trials)
    var_l2 = np.empty(trials)
    q_l1_norm_sq = np.empty(trials)
    first_pair = None
    for i in range(trials):
        q = rng.standard_normal(d)
        a = rng.standard_normal(d)
        if first_pair is None:
            first_pair = (q, a)
        s1 = SamplingScheme("l1", q)
        s2 = SamplingScheme("l2", q)
        var_l1[i] = s1.exact_variance(a)
        var_l2[i] = s2.exact_variance(a)
        q_l1_norm_sq[i] = np.abs(q).sum() ** 2

    q, a = first_pair
    s1 = SamplingScheme("l1", q)
    s2 = SamplingScheme("l2", q)
    truth = float(q @ a)
    est_l1 = np.array([s1.sampled_dot(a, tail_m, rng) for _ in range(tail_reps)])
    est_l2 = np.array([s2.sampled_dot(a, tail_m, rng) for _ in range(tail_reps)])
    scale = math.sqrt(s1.exact_variance(a) / s2.exact_variance(a))
    est_l2_scaled = truth + (est_l2 - truth) * scale

    return {
        "d": d,
        "trials": trials,
        "var_l1": var_l1,
        "var_l2": var_l2,
        "normalization": "d**2",
        "mean_var_l1_normalized": float(var_l1.mean() / d**2),
        "mean_var_l2_normalized": float(var_l2.mean() / d**2),
        "frac_l1_smaller": float(np.mean(var_l1 < var_l2)),
        "q_l1_norm_sq_mean": float(q_l1_norm_sq.mean()),
        "tail_truth": truth,
        "tail_l1": est_l1,
        "tail_l2_scaled": est_l2_scaled,
    }
