"""Brute-force ground truth on the complete bipartite graph K_{n,n}.

Everything here works by exhaustive enumeration of matchings, so it is only
practical for small n.  It exists to check the profile decomposition in
:mod:`permprod.exact` and the closed forms in :mod:`permprod.rate`.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import comb, factorial
from typing import Iterator, NamedTuple

import numpy as np

from .exact import Profile, probability

PAIR_ENUMERATION_CAP = 5
SAMPLING_CAP = 12


@dataclass(frozen=True)
class Matching:
    """A set of vertex-disjoint edges ``(black, white)`` of K_{n,n}."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        blacks = [b for b, _ in self.edges]
        whites = [w for _, w in self.edges]
        if len(set(blacks)) != len(blacks):
            raise ValueError("two edges share a black vertex")
        if len(set(whites)) != len(whites):
            raise ValueError("two edges share a white vertex")
        for v in blacks + whites:
            if not 0 <= v < self.n:
                raise ValueError(f"vertex index {v} outside [0, {self.n})")

    def __len__(self) -> int:
        return len(self.edges)


def enumerate_matchings(n: int, m: int) -> Iterator[Matching]:
    """Yield every m-matching of K_{n,n} once, in lexicographic order.

    Black vertex subsets are taken in lexicographic order and, for each,
    every injection into the white vertices.
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    for blacks in combinations(range(n), m):
        for whites in permutations(range(n), m):
            yield Matching(n, tuple(zip(blacks, whites)))


@lru_cache(maxsize=None)
def _matching_list(n: int, m: int) -> tuple[frozenset[int], ...]:
    # edges encoded as b * n + w for fast set intersection
    return tuple(frozenset(b * n + w for b, w in mt.edges) for mt in enumerate_matchings(n, m))


def classify_pair(m1: Matching, m2: Matching) -> Profile:
    """Return the overlap profile of an m-matching ``m1`` and m'-matching ``m2``."""
    if m1.n != m2.n:
        raise ValueError(f"matchings live on different graphs (n={m1.n} vs n={m2.n})")
    f = dict(m1.edges)
    g = dict(m2.edges)
    common_white = set(f.values()) & set(g.values())
    common_black = f.keys() & g.keys()
    Q = Z = W = X = E = 0
    for v in common_black:
        fv, gv = f[v], g[v]
        if fv == gv:
            Q += 1
        elif fv in common_white and gv in common_white:
            Z += 1
        elif fv in common_white:
            W += 1
        elif gv in common_white:
            X += 1
        else:
            E += 1
    m, mp = len(m1), len(m2)
    C, D = len(common_black), len(common_white)
    return Profile(
        A=m - C, B=mp - C, C=C, D=D, Abar=m - D, Bbar=mp - D,
        Q=Q, Z=Z, W=W, X=X, E=E, m=m, m_prime=mp, n=m1.n,
    )


def _warn_cost(n: int, cap: int, what: str) -> None:
    if n > cap:
        warnings.warn(f"{what} with n={n} exceeds the guideline cap {cap}; this may be slow",
                      RuntimeWarning, stacklevel=3)


def profile_counts(n: int, m: int, m_prime: int) -> Counter:
    """Count matching pairs per overlap profile by exhaustive classification."""
    _warn_cost(n, PAIR_ENUMERATION_CAP, "pair enumeration")
    first = list(enumerate_matchings(n, m))
    second = first if m == m_prime else list(enumerate_matchings(n, m_prime))
    counts: Counter = Counter()
    for m1 in first:
        for m2 in second:
            counts[classify_pair(m1, m2)] += 1
    return counts


@lru_cache(maxsize=None)
def shared_edge_histogram(n: int, m: int, m_prime: int) -> dict[int, int]:
    """Map Q (number of shared edges) to the number of pairs with that overlap."""
    _warn_cost(n, PAIR_ENUMERATION_CAP, "pair enumeration")
    first = _matching_list(n, m)
    second = first if m == m_prime else _matching_list(n, m_prime)
    hist: Counter = Counter()
    for e1 in first:
        for e2 in second:
            hist[len(e1 & e2)] += 1
    return dict(hist)


def brute_single(n: int, m: int, r: int) -> Fraction:
    """Exact E perm_m by linearity: each m-matching is present with probability p^m."""
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    count = sum(1 for _ in enumerate_matchings(n, m))
    return count * probability(n, r) ** m


def brute_product(n: int, m: int, m_prime: int, r: int) -> Fraction:
    """Exact E(perm_m perm_m') as a sum over all pairs of p^|M1 union M2|."""
    if not (0 <= m <= n and 0 <= m_prime <= n):
        raise ValueError(f"need 0 <= m, m' <= n, got m={m}, m'={m_prime}, n={n}")
    p = probability(n, r)
    hist = shared_edge_histogram(n, m, m_prime)
    return sum((count * p ** (m + m_prime - q) for q, count in hist.items()), Fraction(0))


def perm_m(matrix, m: int) -> int:
    """Number of m-matchings supported on the ones of a square 0-1 matrix.

    Rows are scanned in order while tracking which columns are used; a row is
    either skipped or matched to a free column holding a one.  Column sets
    that already hold m edges are not extended.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.isin(a, (0, 1)).all():
        raise ValueError("matrix entries must be 0 or 1")
    n = a.shape[0]
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    rows = [[j for j in range(n) if a[i, j]] for i in range(n)]
    states: dict[int, int] = {0: 1}
    for i, cols in enumerate(rows):
        rows_left = n - i - 1
        nxt: Counter = Counter()
        for mask, ways in states.items():
            used = mask.bit_count()
            # can the remaining rows still reach m edges?
            if used + rows_left >= m:
                nxt[mask] += ways
            if used < m:
                for j in cols:
                    if not mask >> j & 1:
                        nxt[mask | 1 << j] += ways
        states = nxt
    return sum(ways for mask, ways in states.items() if mask.bit_count() == m)


class MCEstimate(NamedTuple):
    mean: float
    stderr: float


def mc_estimate_single(n: int, m: int, r: int, samples: int, seed: int,
                       block_size: int = 4096) -> MCEstimate:
    """Monte Carlo estimate of E perm_m over Bernoulli(r/n) matrices.

    Samples are drawn in fixed-size blocks, block ``k`` seeded from
    ``(seed, k)``, so the result depends only on ``seed`` and ``samples``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if m == 0:
        return MCEstimate(1.0, 0.0)
    _warn_cost(n, SAMPLING_CAP, "sampling")
    p = float(probability(n, r))
    matchings = _matching_index_arrays(n, m)
    total = 0.0
    total_sq = 0.0
    for k, start in enumerate(range(0, samples, block_size)):
        size = min(block_size, samples - start)
        rng = np.random.default_rng([seed, k])
        mats = rng.random((size, n, n)) < p
        values = _perm_m_batch(mats, m, matchings).astype(float)
        total += values.sum()
        total_sq += (values ** 2).sum()
    mean = total / samples
    if samples == 1:
        return MCEstimate(mean, float("inf"))
    var = max(total_sq / samples - mean ** 2, 0.0) * samples / (samples - 1)
    return MCEstimate(mean, float(np.sqrt(var / samples)))


_BATCH_MATCHING_LIMIT = 20000


def _matching_index_arrays(n: int, m: int):
    if comb(n, m) ** 2 * factorial(m) > _BATCH_MATCHING_LIMIT:
        return None  # too many matchings to vectorise; use the DP per matrix
    edges = [mt.edges for mt in enumerate_matchings(n, m)]
    arr = np.array(edges, dtype=np.intp)  # (K, m, 2)
    return arr[:, :, 0], arr[:, :, 1]


def _perm_m_batch(mats: np.ndarray, m: int, matchings) -> np.ndarray:
    if matchings is None:
        return np.array([perm_m(a.astype(np.int8), m) for a in mats], dtype=np.int64)
    rows, cols = matchings
    present = mats[:, rows, cols]  # (S, K, m)
    return present.all(axis=2).sum(axis=1)
