"""Online Newton-step learner for GLM losses.

Per round: rank-one update of the curvature matrix, a Newton step scaled by
the loss curvature floor kappa, and an exact projection onto the l2 ball of
radius S measured in the matrix norm. State size is independent of the
round count.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels

_PROJ_TOL = 1e-10


def ball_projection(theta_prime, A, S):
    """Minimize (theta - theta_prime)^T A (theta - theta_prime) over ||theta|| <= S.

    Interior points are returned unchanged. Otherwise the KKT system gives
    theta(nu) = (A + nu I)^-1 A theta_prime with ||theta(nu)|| strictly
    decreasing in nu >= 0; the multiplier is located by doubling the bracket
    and bisecting until ||theta(nu)|| is within 1e-10 of S.
    """
    theta_prime = np.asarray(theta_prime, dtype=float)
    if S <= 0:
        raise ValueError("S must be positive")
    if math.sqrt(float(theta_prime @ theta_prime)) <= S:
        return theta_prime.copy()
    # SPD check; raises LinAlgError on failure
    np.linalg.cholesky(A)
    evals, Q = np.linalg.eigh(A)
    w = Q.T @ theta_prime

    def norm_at(nu):
        c = evals * w / (evals + nu)
        return float(np.sqrt(c @ c))

    lo, hi = 0.0, 1.0
    while norm_at(hi) > S:
        lo = hi
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        n = norm_at(mid)
        if abs(n - S) <= _PROJ_TOL:
            lo = hi = mid
            break
        if n > S:
            lo = mid
        else:
            hi = mid
    nu = 0.5 * (lo + hi)
    return Q @ (evals * w / (evals + nu))


class OnsGlmLearner:
    """Second-order online learner whose regret budget feeds confidence sets.

    The budget accumulator tracks sum_s g_s^2 ||x_s||^2 in the inverse
    curvature norm, using the matrix state after absorbing x_s.
    """

    def __init__(self, d, eps, S, kappa, reinvert_every=512):
        if d < 1:
            raise ValueError("d must be >= 1")
        for name, v in (("eps", eps), ("S", S), ("kappa", kappa)):
            if v <= 0:
                raise ValueError(f"{name} must be positive")
        self.d = int(d)
        self.eps = float(eps)
        self.S = float(S)
        self.kappa = float(kappa)
        self.reinvert_every = int(reinvert_every)
        self.A = eps * np.eye(self.d)
        self.Ainv = np.eye(self.d) / eps
        self.theta = np.zeros(self.d)
        self.budget_accum = 0.0
        self.t = 0

    def predict(self):
        """Current parameter prediction; treat as read-only."""
        return self.theta

    def update(self, x, y, family):
        """Absorb one (arm, reward) pair; returns the scalar loss gradient."""
        x = np.ascontiguousarray(x, dtype=float)
        if float(x @ x) > (1.0 + 1e-9) ** 2:
            raise ValueError("arm norm exceeds 1")
        if not math.isfinite(y):
            raise ValueError("reward must be finite")
        z = float(x @ self.theta)
        g = float(family.nll_grad(z, y))
        w = kernels.rank_one_update(self.A, self.Ainv, x)
        self.budget_accum += g * g * float(x @ w)
        theta_next = self.theta - (g / self.kappa) * w
        if float(theta_next @ theta_next) > self.S * self.S:
            theta_next = ball_projection(theta_next, self.A, self.S)
        self.theta = theta_next
        self.t += 1
        if self.t % self.reinvert_every == 0:
            self.Ainv = np.linalg.inv(self.A)
        return g

    def regret_budget(self):
        """Data-dependent bound on the learner's cumulative excess loss."""
        return self.budget_accum / (2.0 * self.kappa) + 2.0 * self.kappa * self.S**2 * self.eps

    def state_float_count(self):
        return 2 * self.d * self.d + self.d + 1
