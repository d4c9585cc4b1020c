"""Ellipsoidal confidence sets driven by an online learner's regret budget.

The set is centered at a ridge regression fit of the learner's *predicted*
natural parameters z_s = x_s^T theta_s (not the raw rewards); its squared
radius combines the regret budget with the unexplained part of the z
sequence. Only constant-size summaries (V, its inverse, X^T z, ||z||^2) are
kept in the hot path.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

logger = logging.getLogger(__name__)

_MIN_RADIUS_SQ = 1e-12


def radius_scale(budget, R, kappa, delta):
    """Radius contribution of a regret budget at confidence level 1 - delta.

    Equals 1 for noise-free data (R = 0, budget = 0) and is strictly
    increasing in the budget.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0,1)")
    inner = 1.0 + (2.0 / kappa) * budget + 4.0 * R**4 / (kappa**4 * delta**2)
    return (
        1.0
        + (4.0 / kappa) * budget
        + (8.0 * R * R / kappa**2) * math.log((2.0 / delta) * math.sqrt(inner))
    )


@dataclass(frozen=True)
class Ellipsoid:
    """Set {theta : (theta - center)^T shape (theta - center) <= radius_sq}."""

    center: np.ndarray
    shape: np.ndarray
    shape_inv: np.ndarray
    radius_sq: float

    def mahalanobis_sq(self, theta):
        dv = np.asarray(theta, dtype=float) - self.center
        return float(dv @ self.shape @ dv)

    def contains(self, theta, slack=0.0):
        return self.mahalanobis_sq(theta) <= self.radius_sq + slack


class OnlineConfidenceSet:
    """Running ridge summary of predicted natural parameters.

    keep_history retains the raw (x, z) pairs for diagnostics; the hot path
    never reads them.
    """

    def __init__(self, d, lam, S, R, kappa, delta, keep_history=False,
                 reinvert_every=512):
        if d < 1:
            raise ValueError("d must be >= 1")
        if lam <= 0:
            raise ValueError("lam must be positive")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must be in (0,1)")
        self.d = int(d)
        self.lam = float(lam)
        self.S = float(S)
        self.R = float(R)
        self.kappa = float(kappa)
        self.delta = float(delta)
        self.reinvert_every = int(reinvert_every)
        self.Vbar = lam * np.eye(self.d)
        self.Vbar_inv = np.eye(self.d) / lam
        self.b = np.zeros(self.d)
        self.z_sq_sum = 0.0
        self.theta_hat = np.zeros(self.d)
        self.t = 0
        self.keep_history = bool(keep_history)
        self.history_x = [] if keep_history else None
        self.history_z = [] if keep_history else None

    def update(self, x, z):
        x = np.ascontiguousarray(x, dtype=float)
        if float(x @ x) > (1.0 + 1e-9) ** 2:
            raise ValueError("arm norm exceeds 1")
        if abs(z) > self.S + 1e-9:
            raise ValueError("predicted natural parameter outside the S ball")
        kernels.rank_one_update(self.Vbar, self.Vbar_inv, x)
        self.b = self.b + z * x
        self.z_sq_sum += z * z
        self.t += 1
        if self.t % self.reinvert_every == 0:
            self.Vbar_inv = np.linalg.inv(self.Vbar)
        self.theta_hat = self.Vbar_inv @ self.b
        if self.keep_history:
            self.history_x.append(x.copy())
            self.history_z.append(float(z))

    def residual(self):
        """||z||^2 - theta_hat^T X^T z; nonnegative up to rounding."""
        return self.z_sq_sum - float(self.theta_hat @ self.b)

    def radius_sq(self, budget, delta=None):
        """Squared radius for the given learner budget; clamped positive."""
        a = radius_scale(budget, self.R, self.kappa,
                         self.delta if delta is None else delta)
        beta = a + self.lam * self.S**2 - self.residual()
        if beta <= 0.0:
            logger.warning(
                "confidence radius clamped at t=%d (beta=%.3e)", self.t, beta
            )
            beta = _MIN_RADIUS_SQ
        return beta

    def snapshot(self, radius_sq):
        """Freeze the current center/shape with an externally chosen radius."""
        return Ellipsoid(
            center=self.theta_hat.copy(),
            shape=self.Vbar.copy(),
            shape_inv=self.Vbar_inv.copy(),
            radius_sq=float(radius_sq),
        )

    def ellipsoid(self, budget, delta=None):
        return self.snapshot(self.radius_sq(budget, delta=delta))

    def state_float_count(self):
        return 2 * self.d * self.d + 2 * self.d + 1


class RefinedConfidenceSet:
    """Variant that folds in the learner's one-step-ahead predictions.

    Blends each z_s with the next prediction z'_s = x_s^T theta_{s+1} as
    zbar = (z + 2 z') / 3 and regresses against X^T X + (2 eps / 3) I. Often
    tighter in practice; off by default in the simulation driver.
    """

    def __init__(self, d, eps, S, R, kappa, delta):
        if d < 1:
            raise ValueError("d must be >= 1")
        if eps <= 0:
            raise ValueError("eps must be positive")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must be in (0,1)")
        self.d = int(d)
        self.eps = float(eps)
        self.S = float(S)
        self.R = float(R)
        self.kappa = float(kappa)
        self.delta = float(delta)
        ridge = 2.0 * eps / 3.0
        self.W = ridge * np.eye(self.d)
        self.W_inv = np.eye(self.d) / ridge
        self.bw = np.zeros(self.d)
        self.zbar_sq_sum = 0.0
        self.diff_sq_sum = 0.0
        self.center = np.zeros(self.d)
        self.t = 0

    def update(self, x, z, z_next):
        """Absorb one round; z_next is x^T theta after the learner's update."""
        x = np.ascontiguousarray(x, dtype=float)
        zbar = (z + 2.0 * z_next) / 3.0
        kernels.rank_one_update(self.W, self.W_inv, x)
        self.bw = self.bw + zbar * x
        self.zbar_sq_sum += zbar * zbar
        self.diff_sq_sum += (z - z_next) ** 2
        self.t += 1
        self.center = self.W_inv @ self.bw

    def radius_sq(self, budget, delta=None):
        delta = self.delta if delta is None else delta
        kappa = self.kappa
        inner = 1.0 + (2.0 / kappa) * budget + 4.0 * self.R**4 / (kappa**4 * delta**2)
        beta = (
            -(self.zbar_sq_sum - float(self.center @ self.bw))
            + (4.0 * self.eps / 3.0) * self.S**2
            - (2.0 / 9.0) * self.diff_sq_sum
            + 1.0 / 3.0
            + (4.0 / (3.0 * kappa)) * budget
            + (8.0 * self.R**2 / (3.0 * kappa**2))
            * math.log((2.0 / delta) * math.sqrt(inner))
        )
        if beta <= 0.0:
            logger.warning(
                "refined confidence radius clamped at t=%d (beta=%.3e)",
                self.t, beta,
            )
            beta = _MIN_RADIUS_SQ
        return beta

    def ellipsoid(self, budget, delta=None):
        return Ellipsoid(
            center=self.center.copy(),
            shape=self.W.copy(),
            shape_inv=self.W_inv.copy(),
            radius_sq=float(self.radius_sq(budget, delta=delta)),
        )
