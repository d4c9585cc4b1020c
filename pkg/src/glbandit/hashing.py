"""Sublinear arm search: sign-random-projection tables over an asymmetric
transform that turns maximum-inner-product search into cosine search.

Data points x are scaled into the unit ball and lifted to
[scale*x; sqrt(1 - ||scale*x||^2)]; queries are lifted to [q/||q||; 0], so
the lifted inner product is a positive multiple of <q, x> and the argmax is
preserved exactly. Buckets are keyed by k sign bits per table across U
tables; candidate rescoring is always exact. A thresholded series of such
indexes provides multiplicative retrieval guarantees via binary search.
"""

from __future__ import annotations

import math

import numpy as np

from .sampling import SamplingScheme


def transform_points(X, scale):
    """Lift data rows into the unit sphere of one higher dimension."""
    X = np.asarray(X, dtype=float)
    P = scale * X
    slack = 1.0 - np.einsum("ij,ij->i", P, P)
    if slack.min() < -1e-9:
        raise ValueError("scale leaves some points outside the unit ball")
    last = np.sqrt(np.maximum(slack, 0.0))
    return np.ascontiguousarray(np.hstack([P, last[:, None]]))


def transform_query(q):
    """Lift a query direction; only its direction matters after the lift."""
    q = np.asarray(q, dtype=float)
    nrm = np.linalg.norm(q)
    if nrm == 0.0:
        raise ValueError("zero query vector")
    return np.concatenate([q / nrm, [0.0]])


class HashIndex:
    """U tables of 2^k sign-bit buckets over lifted data points.

    Deterministic given the rng; immutable after construction, so concurrent
    queries are safe.
    """

    def __init__(self, points, k, U, rng):
        points = np.ascontiguousarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("points must be a nonempty 2-d array")
        if k < 0 or U < 1:
            raise ValueError("need k >= 0 and U >= 1")
        self.points = points
        self.k = int(k)
        self.U = int(U)
        max_norm = float(np.linalg.norm(points, axis=1).max())
        self.scale = 1.0 / max_norm if max_norm > 0 else 1.0
        self._lifted = transform_points(points, self.scale)
        dim = self._lifted.shape[1]
        self.projections = rng.standard_normal((self.U, max(self.k, 1), dim))
        if self.k == 0:
            # degenerate: a single bucket holding everything
            self.projections = self.projections[:, :0, :]
        self._pows = (1 << np.arange(self.k)).astype(np.int64)
        self.tables = []
        n = points.shape[0]
        for u in range(self.U):
            if self.k == 0:
                keys = np.zeros(n, dtype=np.int64)
            else:
                bits = (self._lifted @ self.projections[u].T) >= 0.0
                keys = bits @ self._pows
            order = np.argsort(keys, kind="stable")
            uniq, starts = np.unique(keys[order], return_index=True)
            table = {}
            for i, key in enumerate(uniq.tolist()):
                hi = starts[i + 1] if i + 1 < len(starts) else n
                table[key] = order[starts[i]:hi]
            self.tables.append(table)

    def __len__(self):
        return self.points.shape[0]

    def table_dots(self, v, table, dot_mode="exact", m=64, rng=None):
        """Projection inner products against a lifted vector, one per bit."""
        if self.k == 0:
            return np.empty(0)
        proj = self.projections[table]
        if dot_mode == "exact":
            return proj @ v
        if dot_mode == "l1_sampled":
            if rng is None:
                raise ValueError("sampled mode needs an rng")
            scheme = SamplingScheme("l1", v)
            return scheme.sampled_dots(proj, m, rng)
        raise ValueError(f"unknown dot_mode {dot_mode!r}")


def key_from_bits(dots, pows):
    return int(((np.asarray(dots) >= 0.0) @ pows)) if len(pows) else 0


def hash_key(index, v, table, dot_mode="exact", m=64, rng=None):
    """k-bit bucket key of a lifted vector v in the given table."""
    dots = index.table_dots(np.asarray(v, dtype=float), table,
                            dot_mode=dot_mode, m=m, rng=rng)
    return key_from_bits(dots, index._pows)


def query(index, q, probes=0, dot_mode="exact", m=64, rng=None, scorer=None,
          exhaustive=False):
    """Retrieve the best-scoring candidate for a query in the original space.

    Each table contributes its primary bucket; tables whose primary bucket is
    empty additionally probe up to ``probes`` single-bit-flip buckets,
    nearest sign boundary first. Candidates are deduplicated and rescored
    exactly -- via ``scorer(indices)`` when given (e.g. structured quadratic
    scoring), else by the raw inner product with ``q``.

    Returns (best_index, candidates_examined); best_index is None when every
    probed bucket is empty (callers fall back to an exact scan).
    """
    if dot_mode not in ("exact", "l1_sampled"):
        raise ValueError(f"unknown dot_mode {dot_mode!r}")
    if dot_mode == "l1_sampled" and rng is None:
        raise ValueError("sampled mode needs an rng")
    n = len(index)
    if exhaustive:
        mask = np.ones(n, dtype=bool)
    else:
        lifted_q = transform_query(q)
        if dot_mode == "l1_sampled":
            scheme = SamplingScheme("l1", lifted_q)
        mask = np.zeros(n, dtype=bool)
        for u in range(index.U):
            if index.k == 0:
                dots = np.empty(0)
            elif dot_mode == "exact":
                dots = index.projections[u] @ lifted_q
            else:
                dots = scheme.sampled_dots(index.projections[u], m, rng)
            key = key_from_bits(dots, index._pows)
            bucket = index.tables[u].get(key)
            if bucket is not None:
                mask[bucket] = True
                continue
            # primary bucket empty: rescue with nearest-boundary bit flips
            for bit in np.argsort(np.abs(dots))[: max(probes, 0)]:
                bucket = index.tables[u].get(key ^ (1 << int(bit)))
                if bucket is not None:
                    mask[bucket] = True
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None, 0
    scores = scorer(idx) if scorer is not None else index.points[idx] @ q
    return int(idx[int(np.argmax(scores))]), int(idx.size)


def series_depth(c_h, m_min, m_max):
    """Number of thresholded levels needed to cover [m_min, m_max]."""
    if not 0.0 < c_h < 1.0:
        raise ValueError("c_h must be in (0,1)")
    if not 0.0 < m_min <= m_max:
        raise ValueError("need 0 < m_min <= m_max")
    j = math.ceil(math.log(m_max / m_min) / math.log(1.0 / math.sqrt(c_h)))
    return max(1, j)


def qgloc_score_bounds(d, S, beta_bar, T, lam, c0, r):
    """(m_min, m_max) bracketing the quadratic rule's optimal score."""
    m_max = math.sqrt(d) * S + beta_bar**0.25 * math.sqrt(T + lam) / (4.0 * c0 * r * lam)
    return 0.5, float(m_max)


class MipsSeries:
    """Family of hash indexes with geometrically decreasing score thresholds.

    Level j (1-based) accepts a retrieved candidate whose exact score clears
    c_h^{(j+1)/2} * m_max. A binary search for the smallest accepting level
    returns a candidate whose score is at least c_h times the true maximum
    whenever each level honors its contract; if no level accepts, an exact
    scan is the fallback.
    """

    def __init__(self, points, c_h, m_min, m_max, k, U, rng):
        self.c_h = float(c_h)
        self.m_min = float(m_min)
        self.m_max = float(m_max)
        self.J = series_depth(c_h, m_min, m_max)
        self.levels = [HashIndex(points, k, U, r) for r in rng.spawn(self.J)]
        self.thresholds = np.array(
            [c_h ** ((j + 2) / 2.0) * m_max for j in range(self.J)]
        )
        self.points = self.levels[0].points

    def query(self, q, probes=0, dot_mode="exact", m=64, rng=None, scorer=None,
              exhaustive=False):
        """Binary search for the smallest accepting level; exact-scan fallback."""
        lo, hi = 0, self.J - 1
        best = None
        while lo <= hi:
            mid = (lo + hi) // 2
            cand, _ = query(self.levels[mid], q, probes=probes,
                            dot_mode=dot_mode, m=m, rng=rng, scorer=scorer,
                            exhaustive=exhaustive)
            if cand is not None:
                score = (scorer(np.array([cand]))[0] if scorer is not None
                         else float(self.points[cand] @ q))
                if score >= self.thresholds[mid]:
                    best = cand
                    hi = mid - 1
                    continue
            lo = mid + 1
        if best is None:
            scores = (scorer(np.arange(len(self.points))) if scorer is not None
                      else self.points @ q)
            best = int(np.argmax(scores))
        return int(best)
