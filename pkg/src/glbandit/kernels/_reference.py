"""Pure-numpy fallback for the hot-loop kernels.

Semantics are identical to the compiled core in ``_core.pyx``; the compiled
module is preferred at import time when present.
"""

import numpy as np

NAME = "python"


def rank_one_update(A, Ainv, x):
    """Apply A += x x^T in place and downdate Ainv by Sherman-Morrison.

    Returns the fresh vector Ainv_new @ x (used by callers for both the
    Newton step direction and the quadratic form x^T Ainv_new x).
    """
    u = Ainv @ x
    denom = 1.0 + float(x @ u)
    A += np.outer(x, x)
    Ainv -= np.outer(u, u / denom)
    return u / denom


def quad_forms(X, M):
    """Row-wise quadratic forms x_i^T M x_i for the rows of X."""
    return ((X @ M) * X).sum(axis=1)


def ucb_scores(X, theta, Minv, sqrt_radius):
    """x^T theta + sqrt_radius * ||x||_Minv for each row x of X."""
    q = quad_forms(X, Minv)
    np.maximum(q, 0.0, out=q)
    return X @ theta + sqrt_radius * np.sqrt(q)


def quad_scores(X, theta, Minv, coef):
    """x^T theta + coef * ||x||^2_Minv for each row x of X."""
    return X @ theta + coef * quad_forms(X, Minv)
