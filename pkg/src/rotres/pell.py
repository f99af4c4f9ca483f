"""The explicit infinite family of nontrivial resonant triads on the cubic torus.

The integer sequence a_0 = 0, a_1 = 1, a_{j+2} = -4 a_{j+1} - a_j generates
triads

    k_j = (a_j, 1, a_{j+1}),  m_j = (a_{j+1}, -1, a_j),  n_j = k_j + m_j,

whose consecutive pairs (x, y) = (a_j, a_{j+1}) solve x^2 + 4xy + y^2 = 1;
equivalently (X, y) = (x + 2y, y) solves the Pell equation X^2 - 3y^2 = 1.
Every triad is exactly resonant on the unit torus, its resonance curve is
irreducible (nonvanishing minor product), and the invariant sets
{a_{j+1}^-2, a_j^-2, 0} distinguish the curves pairwise.  All arithmetic is
exact (Python integers / Fractions).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import RotresError
from .lattice import FreqVec
from .resonance import ALL_SIGNS, SignTriple, omega_is_zero_exact, resonance_polynomial


def pell_sequence(count: int) -> list[int]:
    """a_0 .. a_count of the recurrence a_{j+2} + 4 a_{j+1} + a_j = 0."""
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    seq = [0, 1]
    while len(seq) <= count:
        seq.append(-4 * seq[-1] - seq[-2])
    return seq[: count + 1]


@dataclass(frozen=True)
class PellTriadRecord:
    j: int
    a_j: int
    a_next: int
    k: FreqVec
    m: FreqVec
    n: FreqVec
    sigma: SignTriple  # a sign triple certifying exact resonance
    certificate: int  # always 0
    discriminant: int  # minor product; nonzero <=> irreducible curve
    invariants_first: frozenset[Fraction]  # {k1^2/k3^2, m1^2/m3^2, n1^2/n3^2}
    invariants_second: frozenset[Fraction]  # {k2^2/k3^2, m2^2/m3^2, n2^2/n3^2}


def irreducibility_discriminant(k, m) -> int:
    """Product of the three 2x2 minors of (k, m); zero iff k and m are collinear."""
    k1, k2, k3 = (int(c) for c in k)
    m1, m2, m3 = (int(c) for c in m)
    return (k3 * m2 - k2 * m3) * (k1 * m3 - k3 * m1) * (k1 * m2 - k2 * m1)


def pell_triad(j: int) -> PellTriadRecord:
    """The j-th triad of the family (j >= 1; j = 0 would have a vanishing leg)."""
    j = int(j)
    if j < 1:
        raise ValueError("triad index must be >= 1 (the index-0 triad degenerates)")
    seq = pell_sequence(j + 1)
    x, y = seq[j], seq[j + 1]
    if x * x + 4 * x * y + y * y != 1:
        raise RotresError(f"recurrence invariant failed at j={j}")  # unreachable
    k = FreqVec(x, 1, y)
    m = FreqVec(y, -1, x)
    n = FreqVec(x + y, 0, x + y)
    sigma = None
    for cand in ALL_SIGNS:
        res = omega_is_zero_exact(n, k, m, cand)
        if res.zero:
            sigma = cand
            break
    if sigma is None:
        raise RotresError(f"no sign triple certifies the triad at j={j}")  # unreachable

    def ratio_set(idx: int) -> frozenset[Fraction]:
        return frozenset(Fraction(v[idx] ** 2, v.n3**2) for v in (k, m, n))

    return PellTriadRecord(
        j=j, a_j=x, a_next=y, k=k, m=m, n=n, sigma=sigma, certificate=0,
        discriminant=irreducibility_discriminant(k, m),
        invariants_first=ratio_set(0), invariants_second=ratio_set(1),
    )


def pell_triads(count: int) -> list[PellTriadRecord]:
    return [pell_triad(j) for j in range(1, int(count) + 1)]


def curve_invariants_distinct(records: Sequence[PellTriadRecord]) -> bool:
    """True iff the exact invariant-set pairs are pairwise distinct."""
    seen = set()
    for rec in records:
        key = (rec.invariants_first, rec.invariants_second)
        if key in seen:
            return False
        seen.add(key)
    return True


def verify_record(rec: PellTriadRecord) -> dict[str, bool]:
    """All exact checks for one record (used by the verification CLI)."""
    x, y = rec.a_j, rec.a_next
    big_x = x + 2 * y
    checks = {
        "quadratic_one": x * x + 4 * x * y + y * y == 1,
        "pell_equation": big_x * big_x - 3 * y * y == 1,
        "convolution": tuple(a + b for a, b in zip(rec.k, rec.m)) == tuple(rec.n),
        "nonzero_vertical": rec.k.n3 * rec.m.n3 * rec.n.n3 != 0,
        "resonant": omega_is_zero_exact(rec.n, rec.k, rec.m, rec.sigma)
        == (True, 0),
        "on_unit_torus_curve": resonance_polynomial(rec.k, rec.m, rec.n, 1, 1) == 0,
        "irreducible": rec.discriminant != 0,
        "discriminant_closed_form": rec.discriminant == (x + y) ** 3 * (x - y),
    }
    return checks


def records_to_csv(records: Sequence[PellTriadRecord], path) -> None:
    header = ("j,a_j,a_next,k1,k2,k3,m1,m2,m3,n1,n2,n3,s1,s2,s3,"
              "certificate,discriminant,invariants_second\n")
    with open(path, "w", newline="") as fh:
        fh.write(header)
        for r in records:
            inv = "|".join(str(f) for f in sorted(r.invariants_second))
            row = [r.j, r.a_j, r.a_next, *r.k, *r.m, *r.n, *r.sigma,
                   r.certificate, r.discriminant]
            fh.write(",".join(str(c) for c in row) + f",{inv}\n")
