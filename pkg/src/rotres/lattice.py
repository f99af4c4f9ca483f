"""Exact integer arithmetic on Fourier lattice modes.

All quantities here are plain Python/NumPy integers: squared norms,
square-free decompositions |n|^2 = nu^2 * d, divisor counts, and counts of
representations by the quadratic forms b1*x^2 + b2*y^2.  These primitives
back the exact resonance certificates, so nothing in this module is allowed
to round.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import InvalidModeError

# Scalar operations are exact Python integers, validated against this bound
# (generous enough for the explicit resonant family up to index 20); the
# vectorised enumeration machinery has its own much smaller bound that keeps
# every intermediate inside int64.
MAX_COMPONENT = 2**41


class FreqVec(NamedTuple):
    """Integer Fourier mode index on Z^3."""

    n1: int
    n2: int
    n3: int


class SquareFreeDecomp(NamedTuple):
    """Unique factorisation q = nu**2 * d with d square-free."""

    nu: int
    d: int


def as_freq(v) -> FreqVec:
    """Coerce a length-3 integer sequence to a FreqVec, validating the range."""
    n1, n2, n3 = (int(c) for c in v)
    if max(abs(n1), abs(n2), abs(n3)) > MAX_COMPONENT:
        raise InvalidModeError(f"mode component exceeds |c| <= {MAX_COMPONENT}: {(n1, n2, n3)}")
    return FreqVec(n1, n2, n3)


def norm_sq(n) -> int:
    """Squared Euclidean norm n1^2 + n2^2 + n3^2, exactly."""
    n = as_freq(n)
    return n.n1 * n.n1 + n.n2 * n.n2 + n.n3 * n.n3


_prime_cache: list[int] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31]


def _primes_upto(limit: int) -> list[int]:
    """Primes <= limit, growing a module-level cache as needed."""
    global _prime_cache
    if _prime_cache[-1] < limit:
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, math.isqrt(limit) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        _prime_cache = [int(p) for p in np.flatnonzero(sieve)]
    return _prime_cache


# trial division stays fast up to this input size; beyond it callers must
# use structure (e.g. perfect-square products) instead of decompositions
TRIAL_DIVISION_LIMIT = 10**14


def square_free_decompose(q: int) -> SquareFreeDecomp:
    """Return the unique (nu, d) with q = nu^2 * d and d square-free.

    Factors by trial division up to sqrt(q); bounded by
    TRIAL_DIVISION_LIMIT (general factorisation is out of scope).
    """
    q = int(q)
    if q < 1:
        raise ValueError(f"square_free_decompose requires q >= 1, got {q}")
    if q > TRIAL_DIVISION_LIMIT:
        raise ValueError(f"square_free_decompose input {q} exceeds the trial-division range")
    nu, d, rem = 1, 1, q
    for p in _primes_upto(math.isqrt(q) + 1):
        if p * p > rem:
            break
        if rem % p:
            continue
        e = 0
        while rem % p == 0:
            rem //= p
            e += 1
        nu *= p ** (e // 2)
        if e % 2:
            d *= p
    # rem is now 1 or a single prime factor
    d *= rem
    return SquareFreeDecomp(nu, d)


def divisor_count(n: int) -> int:
    """Exact number of positive divisors of n."""
    n = int(n)
    if n < 1:
        raise ValueError(f"divisor_count requires n >= 1, got {n}")
    count, rem = 1, n
    for p in _primes_upto(math.isqrt(n) + 1):
        if p * p > rem:
            break
        if rem % p:
            continue
        e = 0
        while rem % p == 0:
            rem //= p
            e += 1
        count *= e + 1
    if rem > 1:
        count *= 2
    return count


def two_square_count(n: int, b1: int = 1, b2: int = 1) -> int:
    """Number of integer pairs (x, y) with b1*x^2 + b2*y^2 = n.

    Counted by a bounded scan over |x| <= sqrt(n / b1) with an exact
    integer square-root test for the matching y.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"two_square_count requires n >= 1, got {n}")
    if b1 < 1 or b2 < 1:
        raise ValueError(f"form coefficients must be positive, got ({b1}, {b2})")
    count = 0
    for x in range(math.isqrt(n // b1) + 1):
        r = n - b1 * x * x
        if r % b2:
            continue
        s = r // b2
        y = math.isqrt(s)
        if y * y != s:
            continue
        per_x = 1 if x == 0 else 2
        per_y = 1 if y == 0 else 2
        count += per_x * per_y
    return count


@lru_cache(maxsize=8)
def squarefree_tables(maxq: int) -> tuple[np.ndarray, np.ndarray]:
    """Sieved lookup tables (nu, d) for all q in [0, maxq].

    nu[q] is the largest integer whose square divides q and d[q] = q / nu^2
    is the square-free part.  Index 0 holds the sentinel (1, 0) and must not
    be used as a valid input.
    """
    nu = np.ones(maxq + 1, dtype=np.int64)
    for v in range(2, math.isqrt(maxq) + 1):
        nu[v * v :: v * v] = v  # ascending v, so the last write wins
    q = np.arange(maxq + 1, dtype=np.int64)
    d = q // (nu * nu)
    return nu, d


def divisor_count_table(maxn: int) -> np.ndarray:
    """d(n) for all n in [0, maxn] by a harmonic sieve (d[0] = 0)."""
    table = np.zeros(maxn + 1, dtype=np.int32)
    for i in range(1, maxn + 1):
        table[i::i] += 1
    return table


def divisor_bound_audit(maxn: int, exponent: float = 0.5) -> tuple[float, int]:
    """Empirical supremum of d(n) / n^exponent over 1 <= n <= maxn.

    The true bound d(n) <= C(eps) n^eps has a non-constructive constant, so
    this reports the observed ratio and its argmax instead of asserting one.
    """
    table = divisor_count_table(maxn)
    n = np.arange(maxn + 1, dtype=np.float64)
    n[0] = 1.0
    ratio = table / n**exponent
    arg = int(np.argmax(ratio))
    return float(ratio[arg]), arg
