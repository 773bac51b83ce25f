from fractions import Fraction
from math import comb, factorial

import numpy as np
import pytest

from permprod.brute import (
    Matching, brute_product, brute_single, classify_pair, enumerate_matchings,
    mc_estimate_single, perm_m, profile_counts,
)
from permprod.exact import exact_single


@pytest.mark.parametrize("n, m, count", [(2, 1, 4), (3, 2, 18), (4, 0, 1), (0, 0, 1)])
def test_enumerate_matchings_count(n, m, count):
    ms = list(enumerate_matchings(n, m))
    assert len(ms) == count
    assert len({frozenset(mt.edges) for mt in ms}) == count


def test_enumerate_matchings_all_sizes():
    for n in range(5):
        for m in range(n + 1):
            assert len(list(enumerate_matchings(n, m))) == comb(n, m) ** 2 * factorial(m)


def test_matching_rejects_shared_vertices():
    with pytest.raises(ValueError):
        Matching(2, ((0, 0), (0, 1)))
    with pytest.raises(ValueError):
        Matching(2, ((0, 1), (1, 1)))
    with pytest.raises(ValueError):
        Matching(2, ((0, 2),))


def test_classify_identical():
    for mt in enumerate_matchings(3, 2):
        p = classify_pair(mt, mt)
        assert (p.C, p.D, p.Q, p.Z, p.W, p.X, p.E, p.A, p.B) == (2, 2, 2, 0, 0, 0, 0, 0, 0)


def test_classify_hand_examples():
    p = classify_pair(Matching(2, ((0, 0),)), Matching(2, ((0, 1),)))
    assert (p.C, p.D, p.Q, p.E, p.Abar, p.Bbar) == (1, 0, 0, 1, 1, 1)
    p = classify_pair(Matching(2, ((0, 0), (1, 1))), Matching(2, ((0, 1), (1, 0))))
    assert (p.C, p.D, p.Q, p.Z) == (2, 2, 0, 2)


def test_classify_mismatched_n():
    with pytest.raises(ValueError):
        classify_pair(Matching(2, ()), Matching(3, ()))


def test_classify_swap_relation():
    for m1 in enumerate_matchings(3, 1):
        for m2 in enumerate_matchings(3, 2):
            assert classify_pair(m2, m1) == classify_pair(m1, m2).swapped()


@pytest.mark.parametrize("n", range(1, 5))
def test_classified_profiles_feasible(n):
    for m in range(n + 1):
        for mp in range(n + 1):
            counts = profile_counts(n, m, mp)
            assert sum(counts.values()) == (comb(n, m) ** 2 * factorial(m)
                                            * comb(n, mp) ** 2 * factorial(mp))
            for prof in counts:
                assert prof.violations() == []


def test_perm_m_examples():
    assert perm_m(np.eye(2, dtype=int), 1) == 2
    assert perm_m(np.ones((3, 3), dtype=int), 2) == 18
    assert perm_m(np.ones((4, 4), dtype=int), 0) == 1
    assert perm_m(np.eye(3, dtype=int), 3) == 1
    assert perm_m(np.zeros((3, 3), dtype=int), 1) == 0


def test_perm_m_against_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        a = (rng.random((n, n)) < 0.6).astype(int)
        for m in range(n + 1):
            direct = sum(all(a[b, w] for b, w in mt.edges) for mt in enumerate_matchings(n, m))
            assert perm_m(a, m) == direct


def test_perm_m_all_ones_identity():
    for n in range(1, 6):
        for m in range(n + 1):
            assert perm_m(np.ones((n, n), dtype=int), m) == comb(n, m) ** 2 * factorial(m)


def test_perm_m_rejects_non_binary():
    with pytest.raises(ValueError):
        perm_m(np.array([[2, 0], [0, 1]]), 1)


def test_brute_single_examples():
    assert brute_single(2, 1, 1) == 2
    assert brute_single(3, 2, 1) == 2
    assert brute_single(4, 2, 4) == comb(4, 2) ** 2 * 2


def test_brute_product_examples():
    assert brute_product(2, 1, 1, 1) == 5
    assert brute_product(3, 0, 0, 2) == 1
    assert brute_product(3, 1, 1, 3) == 81
    # E((sum A_ij)^2) with 4 Bernoulli(1/2) entries: 4p + 12p^2
    p = Fraction(1, 2)
    assert brute_product(2, 1, 1, 1) == 4 * p + 12 * p ** 2


def test_brute_product_frozen():
    # exhaustive pair sum, pinned before the profile decomposition existed
    assert brute_product(3, 2, 2, 2) == Fraction(712, 9)


def test_mc_estimate_examples():
    est = mc_estimate_single(2, 1, 1, 100_000, seed=11)
    assert abs(est.mean - 2) < 4 * est.stderr
    est = mc_estimate_single(3, 2, 1, 100_000, seed=12)
    assert abs(est.mean - float(exact_single(3, 2, 1))) < 4 * est.stderr
    assert mc_estimate_single(4, 0, 2, 10, seed=0) == (1.0, 0.0)


def test_mc_estimate_deterministic():
    a = mc_estimate_single(3, 1, 2, 5000, seed=5)
    b = mc_estimate_single(3, 1, 2, 5000, seed=5)
    assert a == b
    assert mc_estimate_single(3, 1, 2, 5000, seed=6) != a


def test_mc_estimate_dp_path_matches_exact():
    # n = 7, m = 4 has too many matchings for the vectorised path
    est = mc_estimate_single(7, 4, 3, 3000, seed=1)
    assert abs(est.mean - float(exact_single(7, 4, 3))) < 4 * est.stderr
