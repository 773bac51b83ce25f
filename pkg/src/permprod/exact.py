"""Exact finite-n expectations via overlap-profile enumeration.

A pair (M1, M2) of an m-matching and an m'-matching on K_{n,n} is classified
by an overlap :class:`Profile`.  For each profile the number of pairs times the
probability that all their edges are present factors as a product of
falling factorials and multinomials; summing that product over all feasible
profiles gives E(perm_m perm_m') exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import math
from math import comb
from typing import Iterator


class ProfileError(ValueError):
    """Raised when a profile violates one of its feasibility constraints."""


factorial = lru_cache(maxsize=4096)(math.factorial)


def binomial(n: int, k: int) -> int:
    """C(n, k), zero outside 0 <= k <= n."""
    if k < 0 or k > n:
        return 0
    return comb(n, k)


def falling(n: int, k: int) -> int:
    """Falling factorial n!/(n-k)!, the number of injections of a k-set into an n-set."""
    if k < 0 or k > n:
        raise ProfileError(f"falling factorial needs 0 <= k <= n, got n={n}, k={k}")
    out = 1
    for i in range(n - k + 1, n + 1):
        out *= i
    return out


def t6_exact(Z: int, M: int) -> int:
    """Ordered pairs (f, g) of injections of a Z-set into an M-set with f(v) != g(v) everywhere.

    f is free (M!/(M-Z)! ways); for fixed f, inclusion-exclusion over the set
    of points where g agrees with f counts the admissible g.
    """
    if Z < 0 or Z > M:
        raise ProfileError(f"t6 needs 0 <= Z <= M, got Z={Z}, M={M}")
    avoiding = sum((-1) ** k * comb(Z, k) * falling(M - k, Z - k) for k in range(Z + 1))
    return falling(M, Z) * avoiding


def probability(n: int, r: int) -> Fraction:
    """Entry probability r/n.  The empty matrix (n = 0) is given p = 1 by convention."""
    if n == 0:
        return Fraction(1)
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")
    return Fraction(r, n)


@dataclass(frozen=True)
class EnsembleParams:
    """Bernoulli ensemble of n x n 0-1 matrices with entry probability r/n."""

    n: int
    r: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not 1 <= self.r <= self.n:
            raise ValueError(f"need 1 <= r <= n, got r={self.r}, n={self.n}")

    @property
    def p(self) -> Fraction:
        return Fraction(self.r, self.n)


@dataclass(frozen=True, order=True)
class Profile:
    """Overlap counts of an m-matching and an m'-matching.

    Black vertices split into A (first matching only), B (second only) and
    C (both); white vertices into Abar, Bbar and D likewise.  Each common black
    vertex is one of: Q (both edges identical), Z (distinct edges, both whites
    in D), W (first edge into D, second out), X (second into D, first out),
    E (both out of D).
    """

    A: int
    B: int
    C: int
    D: int
    Abar: int
    Bbar: int
    Q: int
    Z: int
    W: int
    X: int
    E: int
    m: int
    m_prime: int
    n: int

    def violations(self) -> list[str]:
        """Names of every violated constraint; empty for a feasible profile."""
        A, B, C, D = self.A, self.B, self.C, self.D
        Ab, Bb, Q, Z, W, X, E = self.Abar, self.Bbar, self.Q, self.Z, self.W, self.X, self.E
        checks = [
            ("nonnegative counts", min(A, B, C, D, Ab, Bb, Q, Z, W, X, E) >= 0),
            ("A + C = m", A + C == self.m),
            ("B + C = m'", B + C == self.m_prime),
            ("Abar + D = m", Ab + D == self.m),
            ("Bbar + D = m'", Bb + D == self.m_prime),
            ("Q + Z + W + X + E = C", Q + Z + W + X + E == C),
            ("Q <= D", Q <= D),
            ("D - Q - Z >= 0", D - Q - Z >= 0),
            ("D - Q - Z - W >= 0", D - Q - Z - W >= 0),
            ("D - Q - Z - X >= 0", D - Q - Z - X >= 0),
            ("Bbar - W - E >= 0", Bb - W - E >= 0),
            ("Abar - X - E >= 0", Ab - X - E >= 0),
            ("A + B + C <= n", A + B + C <= self.n),
            ("Abar + D + Bbar <= n", Ab + D + Bb <= self.n),
        ]
        bad = [name for name, ok in checks if not ok]
        if not bad and A != (D - Q - Z - W) + (Ab - X - E):
            bad.append("A = (D - Q - Z - W) + (Abar - X - E)")
        return bad

    def check(self) -> None:
        bad = self.violations()
        if bad:
            raise ProfileError(f"infeasible profile {self}: violates {', '.join(bad)}")

    def swapped(self) -> "Profile":
        """Profile of the pair with the two matchings exchanged."""
        return Profile(A=self.B, B=self.A, C=self.C, D=self.D, Abar=self.Bbar, Bbar=self.Abar,
                       Q=self.Q, Z=self.Z, W=self.X, X=self.W, E=self.E,
                       m=self.m_prime, m_prime=self.m, n=self.n)

    def as_dict(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def pair_count(profile: Profile, approximate_t6: bool = False) -> int:
    """Number of matching pairs with this profile (all factors except the probability)."""
    profile.check()
    n, A, B, C, D = profile.n, profile.A, profile.B, profile.C, profile.D
    Ab, Bb, Q, Z, W, X, E = (profile.Abar, profile.Bbar, profile.Q, profile.Z,
                             profile.W, profile.X, profile.E)
    f = factorial
    # black vertex sets A_s, C_s, B_s and white sets Abar_s, D_s, Bbar_s
    t2 = f(n) // (f(A) * f(C) * f(B) * f(n - A - B - C))
    t3 = f(n) // (f(Ab) * f(D) * f(Bb) * f(n - Ab - D - Bb))
    t4 = f(C) // (f(Q) * f(Z) * f(W) * f(X) * f(E))
    t5 = falling(D, Q)
    t6 = falling(D - Q, Z) ** 2 if approximate_t6 else t6_exact(Z, D - Q)
    t7 = falling(D - Q - Z, W)
    t8 = falling(D - Q - Z, X)
    t9 = falling(Bb, W + E) * falling(Ab, X + E)
    return t2 * t3 * t4 * t5 * t6 * t7 * t8 * t9 * f(A) * f(B)


def term_product(profile: Profile, params: EnsembleParams, approximate_t6: bool = False) -> Fraction:
    """Contribution of one overlap profile to E(perm_m perm_m').

    The probability factor p^(m + m' - Q) times :func:`pair_count`.  Raises
    :class:`ProfileError` naming the violated constraint if the profile is
    infeasible; nothing is skipped silently.
    """
    if profile.n != params.n:
        raise ProfileError(f"profile is for n={profile.n}, ensemble has n={params.n}")
    count = pair_count(profile, approximate_t6)
    return count * params.p ** (profile.m + profile.m_prime - profile.Q)


def enumerate_profiles(n: int, m: int, m_prime: int) -> Iterator[Profile]:
    """Yield every feasible profile once, lexicographically in (C, D, Q, Z, W, X).

    No ordering among C, D, m, m' is assumed; the finite sum needs the full range.
    """
    if not (0 <= m <= n and 0 <= m_prime <= n):
        raise ValueError(f"need 0 <= m, m' <= n, got m={m}, m'={m_prime}, n={n}")
    lo = min(m, m_prime)
    for C in range(lo + 1):
        A, B = m - C, m_prime - C
        if A + B + C > n:
            continue
        for D in range(lo + 1):
            Ab, Bb = m - D, m_prime - D
            if Ab + D + Bb > n:
                continue
            for Q in range(min(C, D) + 1):
                for Z in range(min(C - Q, D - Q) + 1):
                    pool = D - Q - Z
                    for W in range(min(C - Q - Z, pool, Bb) + 1):
                        for X in range(min(C - Q - Z - W, pool, Ab) + 1):
                            E = C - Q - Z - W - X
                            if Bb - W - E < 0 or Ab - X - E < 0:
                                continue
                            yield Profile(A=A, B=B, C=C, D=D, Abar=Ab, Bbar=Bb,
                                          Q=Q, Z=Z, W=W, X=X, E=E,
                                          m=m, m_prime=m_prime, n=n)


def exact_single(n: int, m: int, r: int) -> Fraction:
    """E perm_m = C(n, m)^2 m! p^m."""
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    return binomial(n, m) ** 2 * factorial(m) * probability(n, r) ** m


def exact_product(n: int, m: int, m_prime: int, r: int, approximate_t6: bool = False) -> Fraction:
    """E(perm_m perm_m') summed exactly over all overlap profiles."""
    if n == 0:
        return Fraction(1) if m == m_prime == 0 else Fraction(0)
    params = EnsembleParams(n, r)
    total = Fraction(0)
    for profile in enumerate_profiles(n, m, m_prime):
        total += term_product(profile, params, approximate_t6)
    return total
