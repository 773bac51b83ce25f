"""Large-n rate functions: the Stirling limit of (1/n) ln of the expectations.

With m = s n, m' = t n and every profile count scaled by n (lower-case
densities), ln F! ~ n (phi ln n + eta(phi)) for F = n phi, where
eta(x) = x ln x - x.  The ln n contributions of all factorials cancel against
the probability factor (r/n)^(m + m' - Q), leaving a function of the densities
only.  The free coordinates are (c, d, q, z, w, x); everything else follows
from the linear identities between the counts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

FREE = ("c", "d", "q", "z", "w", "x")

FEAS_TOL = 1e-12


def eta(x: float) -> float:
    """x ln x - x, with eta(0) = 0."""
    if x < 0:
        raise ValueError(f"eta needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    return x * math.log(x) - x


def _eta_vec(x: np.ndarray) -> np.ndarray:
    pos = x > 0
    out = np.zeros_like(x, dtype=float)
    out[pos] = x[pos] * np.log(x[pos]) - x[pos]
    return out


class InfeasibleProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ScaledProfile:
    """Profile densities for matchings of density s and t, ensemble parameter r."""

    a: float
    b: float
    c: float
    d: float
    abar: float
    bbar: float
    q: float
    z: float
    w: float
    x: float
    e: float
    s: float
    t: float
    r: float

    @classmethod
    def from_free(cls, free, s: float, t: float, r: float) -> "ScaledProfile":
        c, d, q, z, w, x = (float(v) for v in free)
        return cls(a=s - c, b=t - c, c=c, d=d, abar=s - d, bbar=t - d,
                   q=q, z=z, w=w, x=x, e=c - q - z - w - x, s=s, t=t, r=r)

    def free(self) -> np.ndarray:
        return np.array([self.c, self.d, self.q, self.z, self.w, self.x])

    def swapped(self) -> "ScaledProfile":
        """Exchange the roles of the two matchings."""
        return ScaledProfile(a=self.b, b=self.a, c=self.c, d=self.d, abar=self.bbar, bbar=self.abar,
                             q=self.q, z=self.z, w=self.x, x=self.w, e=self.e,
                             s=self.t, t=self.s, r=self.r)

    def slacks(self) -> dict[str, float]:
        """Every quantity that must be non-negative, by name."""
        return {
            "a": self.a, "b": self.b, "c": self.c, "d": self.d,
            "abar": self.abar, "bbar": self.bbar,
            "q": self.q, "z": self.z, "w": self.w, "x": self.x, "e": self.e,
            "d-q": self.d - self.q,
            "d-q-z-w": self.d - self.q - self.z - self.w,
            "d-q-z-x": self.d - self.q - self.z - self.x,
            "bbar-w-e": self.bbar - self.w - self.e,
            "abar-x-e": self.abar - self.x - self.e,
            "1-a-b-c": 1 - self.a - self.b - self.c,
            "1-abar-d-bbar": 1 - self.abar - self.d - self.bbar,
        }

    def violations(self, tol: float = FEAS_TOL) -> list[str]:
        bad = [f"{name} >= 0" for name, v in self.slacks().items() if v < -tol]
        for name, lhs, rhs in (("a + c = s", self.a + self.c, self.s),
                               ("b + c = t", self.b + self.c, self.t),
                               ("abar + d = s", self.abar + self.d, self.s),
                               ("bbar + d = t", self.bbar + self.d, self.t),
                               ("q + z + w + x + e = c",
                                self.q + self.z + self.w + self.x + self.e, self.c)):
            if abs(lhs - rhs) > tol:
                bad.append(name)
        return bad

    def check(self, tol: float = FEAS_TOL) -> None:
        bad = self.violations(tol)
        if bad:
            raise InfeasibleProfileError(f"infeasible scaled profile: violates {', '.join(bad)}")

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def _clip(v: float) -> float:
    # tolerate round-off just outside the polytope
    return v if v > 0 else 0.0


def objective_F(sp: ScaledProfile) -> float:
    """Limit of (1/n) ln of the profile term product at the densities ``sp``."""
    sp.check()
    s, t, q = sp.s, sp.t, sp.q
    k = sp.slacks()
    negative = ("1-a-b-c", "1-abar-d-bbar", "q", "z", "w", "x", "e",
                "d-q-z-w", "d-q-z-x", "bbar-w-e", "abar-x-e")
    value = (s + t - q) * math.log(sp.r) - 2.0 + eta(_clip(k["d-q"]))
    for name in negative:
        value -= eta(_clip(k[name]))
    return value


def stirling_terms(counts: dict[str, float], n: float = 1.0) -> list[tuple[int, float, str]]:
    """Every factorial in the pair count, as (sign, argument, source).

    ``counts`` holds A, B, C, D, Abar, Bbar, Q, Z, W, X, E (or their densities
    with n = 1).  The distinct-edge requirement in the Z pool is dropped, which
    changes nothing at exponential scale.
    """
    A, B, C, D = counts["A"], counts["B"], counts["C"], counts["D"]
    Ab, Bb = counts["Abar"], counts["Bbar"]
    Q, Z, W, X, E = counts["Q"], counts["Z"], counts["W"], counts["X"], counts["E"]
    return [
        (+1, n, "T2"), (-1, A, "T2"), (-1, C, "T2"), (-1, B, "T2"), (-1, n - A - B - C, "T2"),
        (+1, n, "T3"), (-1, Ab, "T3"), (-1, D, "T3"), (-1, Bb, "T3"), (-1, n - Ab - D - Bb, "T3"),
        (+1, C, "T4"), (-1, Q, "T4"), (-1, Z, "T4"), (-1, W, "T4"), (-1, X, "T4"), (-1, E, "T4"),
        (+1, D, "T5"), (-1, D - Q, "T5"),
        (+2, D - Q, "T6"), (-2, D - Q - Z, "T6"),
        (+1, D - Q - Z, "T7"), (-1, D - Q - Z - W, "T7"),
        (+1, D - Q - Z, "T8"), (-1, D - Q - Z - X, "T8"),
        (+1, Bb, "T9"), (-1, Bb - W - E, "T9"), (+1, Ab, "T9"), (-1, Ab - X - E, "T9"),
        (+1, A, "T10"),
        (+1, B, "T11"),
    ]


def _scaled_counts(sp: ScaledProfile) -> dict[str, float]:
    return {"A": sp.a, "B": sp.b, "C": sp.c, "D": sp.d, "Abar": sp.abar, "Bbar": sp.bbar,
            "Q": sp.q, "Z": sp.z, "W": sp.w, "X": sp.x, "E": sp.e}


def log_n_coefficient(sp: ScaledProfile) -> float:
    """Net coefficient of ln n in (1/n) ln of the term product; zero identically."""
    factorial_part = sum(sign * arg for sign, arg, _ in stirling_terms(_scaled_counts(sp)))
    return factorial_part - (sp.s + sp.t - sp.q)


def objective_from_terms(sp: ScaledProfile) -> float:
    """Unsimplified route to :func:`objective_F`: eta applied factor by factor."""
    total = (sp.s + sp.t - sp.q) * math.log(sp.r)
    for sign, arg, _ in stirling_terms(_scaled_counts(sp)):
        total += sign * eta(_clip(arg))
    return total


def log_term_lgamma(counts: dict[str, int], n: int, r: float, m: int, m_prime: int) -> float:
    """ln of the term product at integer counts, every factorial by log-gamma."""
    total = (m + m_prime - counts["Q"]) * math.log(r / n)
    for sign, arg, _ in stirling_terms(counts, n):
        total += sign * math.lgamma(arg + 1)
    return total


class Objective:
    """The rate objective as an affine function plus signed eta of affine forms.

    F(y) = (s + t - q) ln r - 2 + sum_k sign_k eta(M_k . y + k0_k)
    for y = (c, d, q, z, w, x).  ``constraints`` lists every non-negativity
    condition of the polytope in the same affine form.
    """

    TERMS = ("1-a-b-c", "1-abar-d-bbar", "q", "z", "w", "x", "e",
             "d-q", "d-q-z-w", "d-q-z-x", "bbar-w-e", "abar-x-e")
    EXTRA = ("a", "b", "abar", "bbar")

    def __init__(self, s: float, t: float, r: float, skip: Iterable[str] = ()):
        if r <= 0:
            raise ValueError(f"r must be positive, got {r}")
        self.s, self.t, self.r = float(s), float(t), float(r)
        forms = _affine_forms(self.s, self.t)
        self.skip = frozenset(skip)
        names = [k for k in self.TERMS if k not in self.skip]
        self.names = tuple(names)
        self.M = np.array([forms[k][0] for k in names])
        self.k0 = np.array([forms[k][1] for k in names])
        self.sign = np.array([1.0 if k == "d-q" else -1.0 for k in names])
        self.lin = np.zeros(6)
        self.lin[2] = -math.log(self.r)
        self.const = (self.s + self.t) * math.log(self.r) - 2.0
        cons = self.TERMS + self.EXTRA
        self.constraint_names = cons
        self.CM = np.array([forms[k][0] for k in cons])
        self.ck0 = np.array([forms[k][1] for k in cons])

    def args(self, y: np.ndarray) -> np.ndarray:
        return self.M @ y + self.k0

    def slacks(self, y: np.ndarray) -> np.ndarray:
        return self.CM @ y + self.ck0

    def value(self, y: np.ndarray) -> float:
        return float(self.const + self.lin @ y + self.sign @ _eta_vec(self.args(y)))

    def grad(self, y: np.ndarray) -> np.ndarray:
        u = np.maximum(self.args(y), 1e-300)
        return self.lin + self.M.T @ (self.sign * np.log(u))

    def hess(self, y: np.ndarray) -> np.ndarray:
        u = np.maximum(self.args(y), 1e-300)
        return (self.M.T * (self.sign / u)) @ self.M


def _affine_forms(s: float, t: float) -> dict[str, tuple[list[float], float]]:
    #            c   d   q   z   w   x
    return {
        "1-a-b-c": ([1, 0, 0, 0, 0, 0], 1 - s - t),
        "1-abar-d-bbar": ([0, 1, 0, 0, 0, 0], 1 - s - t),
        "q": ([0, 0, 1, 0, 0, 0], 0.0),
        "z": ([0, 0, 0, 1, 0, 0], 0.0),
        "w": ([0, 0, 0, 0, 1, 0], 0.0),
        "x": ([0, 0, 0, 0, 0, 1], 0.0),
        "e": ([1, 0, -1, -1, -1, -1], 0.0),
        "d-q": ([0, 1, -1, 0, 0, 0], 0.0),
        "d-q-z-w": ([0, 1, -1, -1, -1, 0], 0.0),
        "d-q-z-x": ([0, 1, -1, -1, 0, -1], 0.0),
        "bbar-w-e": ([-1, -1, 1, 1, 0, 1], t),
        "abar-x-e": ([-1, -1, 1, 1, 1, 0], s),
        "a": ([-1, 0, 0, 0, 0, 0], s),
        "b": ([-1, 0, 0, 0, 0, 0], t),
        "abar": ([0, -1, 0, 0, 0, 0], s),
        "bbar": ([0, -1, 0, 0, 0, 0], t),
    }


def grad_F(sp: ScaledProfile) -> np.ndarray:
    """Gradient of :func:`objective_F` in (c, d, q, z, w, x); interior points only."""
    sp.check()
    obj = Objective(sp.s, sp.t, sp.r)
    y = sp.free()
    args = obj.args(y)
    if np.any(args <= 0):
        bad = [n for n, v in zip(obj.names, args) if v <= 0]
        raise InfeasibleProfileError(f"gradient undefined on the boundary: {', '.join(bad)} <= 0")
    return obj.grad(y)


def rate_single(s: float, r: float) -> float:
    """lim (1/n) ln E perm_{sn} = -s ln s - 2(1-s) ln(1-s) - s + s ln r."""
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    one_minus = 1.0 - s
    tail = 2 * one_minus * math.log(one_minus) if one_minus > 0 else 0.0
    return -s * math.log(s) - tail - s + s * math.log(r)


def log_single_lgamma(n: int, m: int, r: float) -> float:
    """ln [C(n, m)^2 m! (r/n)^m] evaluated with log-gamma."""
    log_binom = math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)
    return 2 * log_binom + math.lgamma(m + 1) + m * math.log(r / n)
