import math

import numpy as np
import pytest

from rotres import lattice


def test_norm_sq_examples():
    assert lattice.norm_sq((1, 1, -4)) == 18
    assert lattice.norm_sq((0, 0, 0)) == 0
    assert lattice.norm_sq((-3, 0, -3)) == 18


def test_norm_sq_range_guard():
    with pytest.raises(Exception):
        lattice.norm_sq((2**42, 0, 0))
    with pytest.raises(ValueError):
        lattice.square_free_decompose(10**15)  # beyond the trial-division range


def test_square_free_examples():
    assert lattice.square_free_decompose(18) == (3, 2)
    assert lattice.square_free_decompose(1) == (1, 1)
    assert lattice.square_free_decompose(49) == (7, 1)
    with pytest.raises(ValueError):
        lattice.square_free_decompose(0)


def test_square_free_roundtrip_random():
    rng = np.random.default_rng(101)
    qs = rng.integers(1, 10**9, size=10_000)
    for q in qs:
        nu, d = lattice.square_free_decompose(int(q))
        assert nu * nu * d == q


def _is_square_free(d: int) -> bool:
    p = 2
    while p * p <= d:
        if d % (p * p) == 0:
            return False
        p += 1
    return True


def test_square_free_part_is_square_free():
    rng = np.random.default_rng(55)
    for q in rng.integers(1, 10**9, size=300):
        _, d = lattice.square_free_decompose(int(q))
        assert _is_square_free(int(d))


def _divisor_scan(n: int) -> int:
    return sum(1 for d in range(1, n + 1) if n % d == 0)


def test_divisor_count_examples():
    assert lattice.divisor_count(1) == 1
    assert lattice.divisor_count(12) == _divisor_scan(12) == 6
    assert lattice.divisor_count(2310) == _divisor_scan(2310) == 32
    with pytest.raises(ValueError):
        lattice.divisor_count(0)


def test_divisor_count_primes():
    for p in (2, 3, 5, 7, 11, 13, 101, 997, 7919):
        assert lattice.divisor_count(p) == 2


def test_two_square_examples():
    assert lattice.two_square_count(25) == 12
    assert lattice.two_square_count(3) == 0
    assert lattice.two_square_count(2) == 4


def test_two_square_against_double_loop_oracle():
    limit = 10_000
    counts = np.zeros(limit + 1, dtype=np.int64)
    r = math.isqrt(limit)
    for x in range(-r, r + 1):
        for y in range(-r, r + 1):
            s = x * x + y * y
            if 1 <= s <= limit:
                counts[s] += 1
    for n in range(1, limit + 1):
        assert lattice.two_square_count(n) == counts[n]


def test_weighted_form_against_double_loop_oracle():
    for b1, b2 in ((1, 2), (2, 3), (5, 1)):
        limit = 500
        counts = np.zeros(limit + 1, dtype=np.int64)
        for x in range(-25, 26):
            for y in range(-25, 26):
                s = b1 * x * x + b2 * y * y
                if 1 <= s <= limit:
                    counts[s] += 1
        for n in range(1, limit + 1):
            assert lattice.two_square_count(n, b1, b2) == counts[n]


def test_squarefree_tables_match_scalar():
    nu_t, d_t = lattice.squarefree_tables(5000)
    rng = np.random.default_rng(7)
    for q in rng.integers(1, 5001, size=400):
        nu, d = lattice.square_free_decompose(int(q))
        assert nu_t[q] == nu and d_t[q] == d


def test_divisor_bound_audit_reported():
    # the constant in d(n) <= C n^eps is non-constructive: report, don't pin
    ratio, arg = lattice.divisor_bound_audit(10**6, exponent=0.5)
    assert math.isfinite(ratio) and ratio > 0
    assert 1 <= arg <= 10**6
    print(f"max d(n)/sqrt(n) for n <= 1e6: {ratio:.4f} at n = {arg}")
