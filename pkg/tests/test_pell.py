from fractions import Fraction

import pytest

from rotres import pell
from rotres.resonance import omega, omega_is_zero_exact, resonance_polynomial


def test_sequence_values():
    assert pell.pell_sequence(5) == [0, 1, -4, 15, -56, 209]
    assert pell.pell_sequence(1) == [0, 1]
    with pytest.raises(ValueError):
        pell.pell_sequence(0)


def test_sequence_recurrence_and_growth():
    seq = pell.pell_sequence(20)
    for j in range(len(seq) - 2):
        assert seq[j + 2] + 4 * seq[j + 1] + seq[j] == 0
    for j in range(len(seq) - 1):
        assert abs(seq[j + 1]) >= 3 * abs(seq[j]) + 1
    assert len({abs(a) for a in seq}) == len(seq)  # |a_j| pairwise distinct


def test_triad_values_j1_j2():
    r1 = pell.pell_triad(1)
    assert tuple(r1.k) == (1, 1, -4)
    assert tuple(r1.m) == (-4, -1, 1)
    assert tuple(r1.n) == (-3, 0, -3)
    assert 1 + 4 * 1 * (-4) + 16 == 1  # (x, y) = (1, -4) on the unit quadratic
    assert (1 + 2 * (-4)) ** 2 - 3 * 16 == 1  # (X, y) = (-7, -4) on the Pell conic
    r2 = pell.pell_triad(2)
    assert tuple(r2.k) == (-4, 1, 15)
    assert tuple(r2.m) == (15, -1, -4)
    assert tuple(r2.n) == (11, 0, 11)


def test_triad_index_zero_rejected():
    with pytest.raises(ValueError):
        pell.pell_triad(0)


def test_discriminant_closed_form_vs_minors():
    # two routes: direct 2x2 minors vs (a_j + a_{j+1})^3 (a_j - a_{j+1})
    seq = pell.pell_sequence(13)
    for j in range(1, 13):
        rec = pell.pell_triad(j)
        direct = pell.irreducibility_discriminant(rec.k, rec.m)
        assert direct == (seq[j] + seq[j + 1]) ** 3 * (seq[j] - seq[j + 1])
        assert direct != 0
    assert pell.pell_triad(1).discriminant == -135
    assert pell.pell_triad(2).discriminant == 11**3 * (-19) == -25289


def test_discriminant_collinear_is_zero():
    assert pell.irreducibility_discriminant((2, 4, 6), (1, 2, 3)) == 0


def test_every_triad_exactly_resonant():
    for j in range(1, 21):
        rec = pell.pell_triad(j)
        res = omega_is_zero_exact(rec.n, rec.k, rec.m, rec.sigma)
        assert res.zero and res.certificate == 0
        assert abs(omega(rec.n, rec.k, rec.m, rec.sigma)) <= 1e-12
        assert resonance_polynomial(rec.k, rec.m, rec.n, 1, 1) == 0
        # the certifying triple is a global sign choice on (+, +, +)
        assert rec.sigma in ((1, 1, 1), (-1, -1, -1))


def test_invariant_sets():
    r1 = pell.pell_triad(1)
    assert r1.invariants_second == frozenset((Fraction(1, 16), Fraction(1), Fraction(0)))
    records = pell.pell_triads(10)
    assert pell.curve_invariants_distinct(records)
    assert not pell.curve_invariants_distinct(records + [records[3]])


def test_records_csv(tmp_path):
    records = pell.pell_triads(3)
    path = tmp_path / "pell.csv"
    pell.records_to_csv(records, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert lines[1].startswith("1,1,-4,1,1,-4,-4,-1,1,-3,0,-3,")


def test_verify_record_all_checks():
    for j in (1, 5, 12):
        checks = pell.verify_record(pell.pell_triad(j))
        assert all(checks.values()), checks
