"""Reward families for generalized linear bandits.

Each family exposes the inverse link ``mean`` (the conditional mean of the
reward given the natural parameter z), its antiderivative ``log_partition``
with ``log_partition(0) = 0``, the induced negative log-likelihood
``nll(z, y) = -y*z + log_partition(z)`` and its derivative, curvature
constants on the parameter ball of radius S, and reward sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, ndtr

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FamilyConstants:
    """Curvature / noise constants of a family on (-S, S).

    kappa: infimum of the mean-function slope (strong convexity of the loss).
    L: Lipschitz constant of the mean function.
    R: sub-Gaussian scale of the reward noise.
    """

    kappa: float
    L: float
    R: float


def _norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


class GlmFamily:
    """Base class; concrete families fill in the link and its constants."""

    name = "?"

    def __init__(self, S, R=None):
        if S <= 0:
            raise ValueError("S must be positive")
        self.S = float(S)
        self._R_override = None if R is None else float(R)

    # -- link functions -------------------------------------------------
    def mean(self, z):
        raise NotImplementedError

    def mean_slope(self, z):
        raise NotImplementedError

    def log_partition(self, z):
        raise NotImplementedError

    # -- loss -----------------------------------------------------------
    def nll(self, z, y):
        return -y * z + self.log_partition(z)

    def nll_grad(self, z, y):
        return -y + self.mean(z)

    # -- constants and sampling ------------------------------------------
    def _default_R(self):
        raise NotImplementedError

    def constants(self):
        kappa = float(self.mean_slope(self.S))
        R = self._R_override if self._R_override is not None else self._default_R()
        return FamilyConstants(kappa=kappa, L=self._lipschitz(), R=R)

    def _lipschitz(self):
        raise NotImplementedError

    def sample(self, z, rng):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(S={self.S})"


class LogitFamily(GlmFamily):
    """Bernoulli rewards through the logistic link."""

    name = "logit"

    def mean(self, z):
        return expit(z)

    def mean_slope(self, z):
        p = expit(z)
        return p * (1.0 - p)

    def log_partition(self, z):
        # softplus, evaluated stably for large |z|
        return np.logaddexp(0.0, z)

    def _lipschitz(self):
        return 0.25

    def _default_R(self):
        return 0.5

    def sample(self, z, rng):
        return 1.0 if rng.random() < float(self.mean(z)) else 0.0


class ProbitFamily(GlmFamily):
    """Bernoulli rewards through the Gaussian-CDF link (non-canonical)."""

    name = "probit"

    def mean(self, z):
        return ndtr(z)

    def mean_slope(self, z):
        return _norm_pdf(z)

    def log_partition(self, z):
        # closed-form antiderivative of the normal CDF, anchored at 0
        z = np.asarray(z, dtype=float)
        return z * ndtr(z) + _norm_pdf(z) - _INV_SQRT_2PI

    def _lipschitz(self):
        return _INV_SQRT_2PI

    def _default_R(self):
        # 0/1 noise is bounded by 1/2
        return 0.5

    def sample(self, z, rng):
        return 1.0 if rng.random() < float(self.mean(z)) else 0.0


class GaussianFamily(GlmFamily):
    """Additive unit-variance Gaussian rewards (identity link).

    Rewards are treated as pre-normalized so the noise scale is 1.
    """

    name = "gaussian"

    def __init__(self, S, R=None, noise_sd=1.0):
        super().__init__(S, R=R)
        if noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        self.noise_sd = float(noise_sd)

    def mean(self, z):
        return z

    def mean_slope(self, z):
        return np.ones_like(np.asarray(z, dtype=float))

    def log_partition(self, z):
        return 0.5 * np.asarray(z, dtype=float) ** 2

    def _lipschitz(self):
        return 1.0

    def _default_R(self):
        return 1.0

    def sample(self, z, rng):
        return float(z) + self.noise_sd * rng.standard_normal()


FAMILIES = {
    "logit": LogitFamily,
    "probit": ProbitFamily,
    "gaussian": GaussianFamily,
}


def make_family(name, S, R=None):
    """Build a family from its config name ("logit" | "probit" | "gaussian")."""
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise ValueError(
            f"unknown family {name!r}; expected one of {sorted(FAMILIES)}"
        ) from None
    return cls(S, R=R)
