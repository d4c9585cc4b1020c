"""Arm-selection rules over a confidence ellipsoid.

Rules: optimistic selection with a square-root bonus ("gloc"), posterior-style
random perturbation ("gloc-ts"), a quadratic-bonus rule whose objective is a
plain inner product after a feature lift ("qgloc"), and a batch-MLE UCB
baseline ("ucb-glm") that intentionally keeps the full history.

All argmax rules break ties toward the lowest arm index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class ArmSet:
    """Finite arm pool; rows of X are the arms, all with l2 norm <= 1."""

    X: np.ndarray
    r: float

    def __len__(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def make_arm_set(X):
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("arm set must be a nonempty 2-d array")
    norms = np.linalg.norm(X, axis=1)
    if norms.max() > 1.0 + 1e-9:
        raise ValueError("arm norms must be at most 1")
    r = float(norms.min())
    if r <= 0.0:
        raise ValueError("arms must be nonzero")
    return ArmSet(X=X, r=r)


def _check_nonempty(arms):
    if len(arms) == 0:
        raise ValueError("empty arm set")


# ---------------------------------------------------------------------------
# optimistic (square-root bonus) rule
# ---------------------------------------------------------------------------

def gloc_select(ell, arms):
    """argmax over arms of x^T center + sqrt(radius) * ||x||_{shape_inv}."""
    _check_nonempty(arms)
    sqrt_radius = float(np.sqrt(max(ell.radius_sq, 0.0)))
    scores = kernels.ucb_scores(arms.X, ell.center, ell.shape_inv, sqrt_radius)
    return int(np.argmax(scores))


# ---------------------------------------------------------------------------
# randomized (perturbed-parameter) rule
# ---------------------------------------------------------------------------

def sample_parameter(ell, rng, xi=None):
    """Draw theta = center + sqrt(radius) * shape^{-1/2} xi with xi ~ N(0, I)."""
    evals, Q = np.linalg.eigh(ell.shape)
    if evals[0] <= 0.0:
        raise np.linalg.LinAlgError("ellipsoid shape is not positive definite")
    if xi is None:
        xi = rng.standard_normal(ell.center.shape[0])
    scaled = (Q.T @ xi) / np.sqrt(evals)
    return ell.center + np.sqrt(max(ell.radius_sq, 0.0)) * (Q @ scaled)


def gloc_ts_select(ell, arms, rng, xi=None):
    """Perturb the center within the (rescaled) ellipsoid, then act greedily.

    Returns (arm index, sampled parameter). The caller is responsible for
    any tightening of the confidence level used to build ``ell``.
    """
    _check_nonempty(arms)
    theta_dot = sample_parameter(ell, rng, xi=xi)
    return int(np.argmax(arms.X @ theta_dot)), theta_dot


# ---------------------------------------------------------------------------
# quadratic-bonus rule and its inner-product form
# ---------------------------------------------------------------------------

def arm_norm_floor(Vbar_inv, r, mode="eig", t=None, lam=None, arms=None,
                   center=None):
    """Lower bound on ||x||_{Vbar_inv} over admissible arms.

    mode "eig": exact bound r * sqrt(lambda_min(Vbar_inv)); "bound": the
    cheap r / sqrt(t + lam); "greedy": the whitened norm of the arm
    maximizing x^T center (needs arms and center).
    """
    if not 0.0 < r <= 1.0:
        raise ValueError("r must be in (0, 1]")
    if mode == "eig":
        return float(r * np.sqrt(np.linalg.eigvalsh(Vbar_inv)[0]))
    if mode == "bound":
        if t is None or lam is None:
            raise ValueError("bound mode needs t and lam")
        return float(r / np.sqrt(t + lam))
    if mode == "greedy":
        if arms is None or center is None:
            raise ValueError("greedy mode needs arms and center")
        idx = int(np.argmax(arms.X @ center))
        x = arms.X[idx]
        return float(np.sqrt(x @ Vbar_inv @ x))
    raise ValueError(f"unknown arm_norm_floor mode {mode!r}")


def _quad_coef(radius_sq, c0, floor):
    return float(max(radius_sq, 0.0) ** 0.25 / (4.0 * c0 * floor))


def qgloc_select(ell, arms, c0, floor):
    """argmax of x^T center + coef * ||x||^2_{shape_inv} by exact scan."""
    _check_nonempty(arms)
    if c0 <= 0 or floor <= 0:
        raise ValueError("c0 and floor must be positive")
    coef = _quad_coef(ell.radius_sq, c0, floor)
    scores = kernels.quad_scores(arms.X, ell.center, ell.shape_inv, coef)
    return int(np.argmax(scores))


def quadratic_features(x):
    """Feature lift [x; vec(x x^T)] (column-stacked)."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, np.outer(x, x).ravel(order="F")])


def quadratic_features_matrix(X):
    """Row-wise feature lift; returns an (N, d + d^2) array."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    outer = (X[:, :, None] * X[:, None, :]).reshape(n, d * d)
    return np.ascontiguousarray(np.hstack([X, outer]))


@dataclass(frozen=True)
class QglocQuery:
    """Quadratic-rule query packed as (linear part, symmetric matrix part)."""

    q_lin: np.ndarray
    q_quad: np.ndarray

    @property
    def flat(self):
        """Length d + d^2 vector; <flat, lift(x)> equals score(x)."""
        return np.concatenate([self.q_lin, self.q_quad.ravel(order="F")])

    def score(self, x):
        x = np.asarray(x, dtype=float)
        return float(self.q_lin @ x + x @ self.q_quad @ x)

    def score_many(self, X):
        coef_matrix = np.ascontiguousarray(self.q_quad)
        return kernels.quad_scores(
            np.ascontiguousarray(X, dtype=float), self.q_lin, coef_matrix, 1.0
        )


def qgloc_query(ell, c0, floor):
    """Pack the quadratic rule as a query so selection is an inner product."""
    if c0 <= 0 or floor <= 0:
        raise ValueError("c0 and floor must be positive")
    coef = _quad_coef(ell.radius_sq, c0, floor)
    return QglocQuery(q_lin=ell.center.copy(), q_quad=coef * ell.shape_inv)


def check_quadratic_upper_bound(ell, arms, c0, floor, slack=1e-9):
    """Verify the quadratic score plus c0 * radius^{3/4} * floor dominates
    the square-root-bonus score on every arm. Test-support predicate."""
    _check_nonempty(arms)
    sqrt_radius = float(np.sqrt(max(ell.radius_sq, 0.0)))
    lhs = kernels.ucb_scores(arms.X, ell.center, ell.shape_inv, sqrt_radius)
    coef = _quad_coef(ell.radius_sq, c0, floor)
    rhs = kernels.quad_scores(arms.X, ell.center, ell.shape_inv, coef)
    rhs = rhs + c0 * max(ell.radius_sq, 0.0) ** 0.75 * floor
    return bool(np.all(lhs <= rhs + slack))


def default_c0(constants):
    """Exploration-exploitation coefficient ((L + R) / kappa)^{-1/2}."""
    return float(((constants.L + constants.R) / constants.kappa) ** -0.5)


# ---------------------------------------------------------------------------
# batch-MLE UCB baseline (deliberately O(t) per step)
# ---------------------------------------------------------------------------

def glm_mle(X, y, family, ridge=1e-6, max_iter=100, tol=1e-8, theta0=None):
    """Damped Newton solve of the ridge-regularized GLM likelihood.

    The gradient tolerance scales with the sample count since the objective
    is a sum of per-round losses.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    theta = np.zeros(d) if theta0 is None else np.array(theta0, dtype=float)
    gtol = tol * (1.0 + len(y))

    def objective(th):
        return float(np.sum(family.nll(X @ th, y)) + 0.5 * ridge * th @ th)

    f = objective(theta)
    for it in range(max_iter):
        z = X @ theta
        grad = X.T @ (family.mean(z) - y) + ridge * theta
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= gtol:
            return theta
        H = X.T @ (family.mean_slope(z)[:, None] * X) + ridge * np.eye(d)
        step = np.linalg.solve(H, grad)
        decrease = float(grad @ step)
        alpha = 1.0
        while alpha >= 2.0**-40:
            cand = theta - alpha * step
            f_cand = objective(cand)
            if f_cand <= f - 1e-4 * alpha * decrease:
                theta, f = cand, f_cand
                break
            alpha *= 0.5
        else:
            raise RuntimeError(
                f"MLE line search stalled at iteration {it} "
                f"(grad_inf={gnorm:.3e}, n={len(y)})"
            )
    raise RuntimeError(
        f"MLE Newton did not converge in {max_iter} iterations "
        f"(grad_inf={gnorm:.3e}, n={len(y)})"
    )


def ucb_glm_select(history, arms, family, alpha_radius):
    """Batch baseline: fit the MLE on the whole history, then score arms.

    With an empty history falls back to round-robin (index 0).
    """
    _check_nonempty(arms)
    if not history:
        return len(history) % len(arms)
    X = np.asarray([h[0] for h in history], dtype=float)
    y = np.asarray([h[1] for h in history], dtype=float)
    theta = glm_mle(X, y, family)
    V = X.T @ X + 1e-6 * np.eye(arms.d)
    Vinv = np.linalg.inv(V)
    scores = kernels.ucb_scores(arms.X, theta, np.ascontiguousarray(Vinv),
                                float(alpha_radius))
    return int(np.argmax(scores))


class UcbGlmPolicy:
    """Incremental driver for the batch baseline.

    Retains the full (x, y) history by design; the per-step MLE is warm
    started from the previous solution so Newton usually needs one or two
    iterations.
    """

    def __init__(self, family, arms, horizon, ridge=1e-6):
        self.family = family
        self.arms = arms
        self.ridge = float(ridge)
        d = arms.d
        self.Xbuf = np.empty((horizon, d))
        self.ybuf = np.empty(horizon)
        self.n = 0
        self.V = ridge * np.eye(d)
        self.Vinv = np.eye(d) / ridge
        self.theta = np.zeros(d)

    def select(self, t, alpha_radius):
        if self.n == 0:
            return (t - 1) % len(self.arms)
        self.theta = glm_mle(
            self.Xbuf[: self.n], self.ybuf[: self.n], self.family,
            ridge=self.ridge, theta0=self.theta,
        )
        scores = kernels.ucb_scores(
            self.arms.X, self.theta, self.Vinv, float(alpha_radius)
        )
        return int(np.argmax(scores))

    def observe(self, x, y):
        self.Xbuf[self.n] = x
        self.ybuf[self.n] = y
        self.n += 1
        kernels.rank_one_update(self.V, self.Vinv, np.ascontiguousarray(x, dtype=float))

    def state_float_count(self):
        d = self.arms.d
        return self.n * (d + 1) + 2 * d * d + d
