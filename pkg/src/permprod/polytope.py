"""Smooth parametrisation of a bounded polytope by sequential fractions.

For {y : G y <= h}, Fourier-Motzkin elimination gives, for each coordinate
k, the interval [L_k(y_<k), U_k(y_<k)] of values compatible with the earlier
coordinates.  An unconstrained vector theta maps to the polytope interior by
y_k = L_k + sigmoid(theta_k) (U_k - L_k).  Uniform fractions give a sampler.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit, logit

_ZERO = 1e-13
THETA_CLIP = 36.0


class EmptyPolytopeError(ValueError):
    pass


def _normalise(G: np.ndarray, h: np.ndarray):
    scale = np.abs(G).max(axis=1)
    keep = scale > _ZERO
    if np.any(h[~keep] < -1e-12):
        raise EmptyPolytopeError("constant constraint 0 <= h violated")
    G, h, scale = G[keep], h[keep], scale[keep]
    G = G / scale[:, None]
    h = h / scale
    # deduplicate, keeping the tightest right-hand side
    keys, first, inverse = np.unique(np.round(G, 10), axis=0, return_index=True,
                                     return_inverse=True)
    tight = np.full(len(keys), np.inf)
    np.minimum.at(tight, inverse.reshape(-1), h)
    return G[first], tight


def _drop_redundant(G: np.ndarray, h: np.ndarray):
    if G.shape[1] == 0:
        return G, h
    keep = np.ones(len(h), dtype=bool)
    for i in range(len(h)):
        others = keep.copy()
        others[i] = False
        if not others.any():
            continue
        res = linprog(-G[i], A_ub=G[others], b_ub=h[others], bounds=[(None, None)] * G.shape[1],
                      method="highs")
        # any non-optimal status (unbounded, or HiGHS's "infeasible or
        # unbounded" once a row is gone) means the row is needed
        if res.status == 0 and -res.fun <= h[i] + 1e-11:
            keep[i] = False
    return G[keep], h[keep]


class SequentialPolytope:
    """Sequential-fraction coordinates on {y : G y <= h}.

    Each level stores the lower and upper bound rows for one coordinate as
    (alpha, beta) with bound = alpha + beta . y_<k.
    """

    def __init__(self, G, h):
        G = np.asarray(G, dtype=float)
        h = np.asarray(h, dtype=float)
        self.dim = G.shape[1]
        res = linprog(np.zeros(self.dim), A_ub=G, b_ub=h, bounds=[(None, None)] * self.dim,
                      method="highs")
        if res.status != 0:
            raise EmptyPolytopeError("polytope is empty")
        self.levels: list = [None] * self.dim
        G, h = _normalise(G, h)
        for k in range(self.dim - 1, -1, -1):
            gk = G[:, k]
            up, lo, rest = gk > _ZERO, gk < -_ZERO, np.abs(gk) <= _ZERO
            if not up.any() or not lo.any():
                raise ValueError(f"polytope unbounded in coordinate {k}")
            self.levels[k] = (
                (h[lo] / gk[lo], -G[lo, :k] / gk[lo, None]),
                (h[up] / gk[up], -G[up, :k] / gk[up, None]),
            )
            # eliminate y_k: pair every upper row with every lower row
            pu = G[up] / gk[up, None]
            hu = h[up] / gk[up]
            pl = G[lo] / -gk[lo, None]
            hl = h[lo] / -gk[lo]
            comb_G = (pu[:, None, :] + pl[None, :, :]).reshape(-1, G.shape[1])
            comb_h = (hu[:, None] + hl[None, :]).reshape(-1)
            G = np.vstack([G[rest], comb_G])[:, :k]
            h = np.concatenate([h[rest], comb_h])
            if k > 0:
                G, h = _normalise(G, h)
                G, h = _drop_redundant(G, h)

    def bounds(self, k: int, prefix: np.ndarray):
        (la, lb), (ua, ub) = self.levels[k]
        lows = la + lb @ prefix
        ups = ua + ub @ prefix
        i, j = int(np.argmax(lows)), int(np.argmin(ups))
        return lows[i], ups[j], lb[i], ub[j]

    def to_point(self, theta, jacobian: bool = False):
        """Map theta in R^dim into the polytope; optionally also dy/dtheta."""
        theta = np.clip(np.asarray(theta, dtype=float), -THETA_CLIP, THETA_CLIP)
        sig = expit(theta)
        y = np.zeros(self.dim)
        J = np.zeros((self.dim, self.dim))
        for k in range(self.dim):
            L, U, dL, dU = self.bounds(k, y[:k])
            width = max(U - L, 0.0)
            y[k] = L + sig[k] * width
            if jacobian:
                if U > L:
                    J[k] = (1 - sig[k]) * (dL @ J[:k]) + sig[k] * (dU @ J[:k])
                else:
                    J[k] = dL @ J[:k]
                J[k, k] += sig[k] * (1 - sig[k]) * width
        return (y, J) if jacobian else y

    def to_theta(self, y) -> np.ndarray:
        """Inverse of :meth:`to_point` for interior points."""
        y = np.asarray(y, dtype=float)
        theta = np.zeros(self.dim)
        for k in range(self.dim):
            L, U, _, _ = self.bounds(k, y[:k])
            if U - L <= 0:
                continue
            frac = np.clip((y[k] - L) / (U - L), expit(-THETA_CLIP), expit(THETA_CLIP))
            theta[k] = logit(frac)
        return theta

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Points from uniform sequential fractions (not uniform in volume)."""
        u = rng.random((count, self.dim))
        return np.array([self.to_point(logit(np.clip(row, 1e-15, 1 - 1e-15))) for row in u])
