"""Helical spectral linear algebra.

Each nonzero mode n carries an orthonormal complex pair e+(n), e-(n)
spanning the divergence-free plane {a : n . a = 0}:

    e+-(n) = (n1 n3 +- i n2 |n|, n2 n3 -+ i n1 |n|, -|nh|^2) / (sqrt2 |n| |nh|)

for nh = (n1, n2) != 0, and e+-(n) = (1, -+ i sgn(n3), 0) / sqrt2 on the
vertical axis.  They satisfy n x e+-(n) = +- i |n| e+-(n).  The rotation
propagator is diagonal here: amplitudes pick up phases exp(-+ i theta n3/|n|).

Conjugation identity (derived from the formulas above and regression-tested):
e^s(-n) = e^{-s}(n) = conj(e^s(n)) for every n != 0, hence the helical
amplitudes of a real-valued field satisfy c^s(-n) = conj(c^s(n)).

Inner products: (a|b) = sum_j a_j conj(b_j) (sesquilinear), a.b = sum_j a_j b_j.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InvalidModeError
from .fields import SpectralField, abs_grid, mode_grids

SQRT2 = np.sqrt(2.0)


def leray_project(n, v) -> np.ndarray:
    """Project a complex 3-vector onto the plane orthogonal to the mode n."""
    n = np.asarray(n, dtype=np.float64)
    nsq = float(n @ n)
    if nsq == 0.0:
        raise InvalidModeError("Leray projection undefined at the zero mode")
    v = np.asarray(v, dtype=np.complex128)
    return v - n * ((n @ v) / nsq)


def helical_basis(n) -> tuple[np.ndarray, np.ndarray]:
    """The orthonormal pair (e+, e-) at a single nonzero mode n."""
    n1, n2, n3 = (int(c) for c in n)
    if n1 == 0 and n2 == 0:
        if n3 == 0:
            raise InvalidModeError("helical basis undefined at the zero mode")
        s = 1.0 if n3 > 0 else -1.0
        ep = np.array([1.0, -1j * s, 0.0]) / SQRT2
        em = np.array([1.0, +1j * s, 0.0]) / SQRT2
        return ep, em
    absn = np.sqrt(float(n1 * n1 + n2 * n2 + n3 * n3))
    nh_sq = float(n1 * n1 + n2 * n2)
    denom = SQRT2 * absn * np.sqrt(nh_sq)
    real = np.array([n1 * n3, n2 * n3, -nh_sq], dtype=np.float64)
    imag = np.array([n2 * absn, -n1 * absn, 0.0], dtype=np.float64)
    ep = (real + 1j * imag) / denom
    em = (real - 1j * imag) / denom
    return ep, em


@lru_cache(maxsize=16)
def basis_arrays(trunc: int) -> tuple[np.ndarray, np.ndarray]:
    """(Ep, Em) of shape (3, K, K, K); zero vectors at the zero mode."""
    n1, n2, n3 = (g.astype(np.float64) for g in mode_grids(trunc))
    absn = abs_grid(trunc)
    nh_sq = n1 * n1 + n2 * n2
    nh = np.sqrt(nh_sq)
    generic = nh_sq > 0
    denom = np.where(generic, SQRT2 * absn * np.where(generic, nh, 1.0), 1.0)

    ep = np.zeros((3,) + absn.shape, dtype=np.complex128)
    ep[0] = np.where(generic, (n1 * n3 + 1j * n2 * absn) / denom, 0.0)
    ep[1] = np.where(generic, (n2 * n3 - 1j * n1 * absn) / denom, 0.0)
    ep[2] = np.where(generic, -nh_sq / denom, 0.0)

    axis = (~generic) & (n3 != 0)
    sgn = np.sign(n3)
    ep[0][axis] = 1.0 / SQRT2
    ep[1][axis] = (-1j * sgn / SQRT2)[axis]
    em = ep.conj()  # e^-(n) = conj(e^+(n)) holds in both branches
    return ep, em


@lru_cache(maxsize=16)
def vertical_phase_ratio(trunc: int) -> np.ndarray:
    """n3 / |n| on the mode cube (0 at the zero mode)."""
    _, _, n3 = mode_grids(trunc)
    ratio = n3 / abs_grid(trunc)
    ratio[trunc, trunc, trunc] = 0.0
    return ratio


class HelicalField:
    """Per-mode helical amplitude pair c+ = (uhat|e+), c- = (uhat|e-)."""

    __slots__ = ("trunc", "plus", "minus")

    def __init__(self, trunc: int, plus: np.ndarray, minus: np.ndarray):
        self.trunc = int(trunc)
        self.plus = plus
        self.minus = minus

    def copy(self) -> "HelicalField":
        return HelicalField(self.trunc, self.plus.copy(), self.minus.copy())


def helical_decompose(field: SpectralField, *, check: bool = True) -> HelicalField:
    """Amplitudes (c+, c-) of a divergence-free mean-zero field.

    With check=True the divergence-free contract is enforced; recomposition
    then reproduces the input to roundoff.
    """
    if check:
        field.require_divergence_free()
    ep, em = basis_arrays(field.trunc)
    plus = np.einsum("jabc,jabc->abc", field.coeffs, ep.conj())
    minus = np.einsum("jabc,jabc->abc", field.coeffs, em.conj())
    return HelicalField(field.trunc, plus, minus)


def helical_recompose(h: HelicalField) -> SpectralField:
    """Rebuild the coefficient array sum_s c^s(n) e^s(n)."""
    ep, em = basis_arrays(h.trunc)
    return SpectralField(h.trunc, h.plus[np.newaxis] * ep + h.minus[np.newaxis] * em)


def poincare_propagate(field: SpectralField, theta: float, *, check: bool = True) -> SpectralField:
    """Rotation propagator: multiply c^s(n) by exp(-s i theta n3 / |n|)."""
    h = helical_decompose(field, check=check)
    phase = np.exp(-1j * theta * vertical_phase_ratio(field.trunc))
    h.plus *= phase
    h.minus *= phase.conj()
    return helical_recompose(h)


def poincare_propagate_alt(field: SpectralField, theta: float) -> SpectralField:
    """Equivalent mode-wise rotation form.

    uhat(n) -> cos(theta n3/|n|) uhat(n) - sin(theta n3/|n|) (n/|n|) x uhat(n),
    valid on divergence-free mean-zero fields; agrees with poincare_propagate.
    """
    trunc = field.trunc
    ratio = vertical_phase_ratio(trunc)
    absn = abs_grid(trunc)
    n1, n2, n3 = (g.astype(np.float64) for g in mode_grids(trunc))
    u1, u2, u3 = field.coeffs
    cross = np.stack([
        (n2 * u3 - n3 * u2) / absn,
        (n3 * u1 - n1 * u3) / absn,
        (n1 * u2 - n2 * u1) / absn,
    ])
    c = np.cos(theta * ratio)[np.newaxis]
    s = np.sin(theta * ratio)[np.newaxis]
    out = SpectralField(trunc, c * field.coeffs - s * cross)
    out.zero_mean()
    return out


def mean_frame_shift(u0_mean, omega: float, t: float) -> np.ndarray:
    """Closed-form drift of the spatial mean under rotation.

    Solves f' + omega J f = 0, f(0) = u0_mean, with J the generator of
    horizontal rotation; the vertical component is invariant.
    """
    m1, m2, m3 = (float(c) for c in u0_mean)
    c, s = np.cos(omega * t), np.sin(omega * t)
    return np.array([m1 * c + m2 * s, -m1 * s + m2 * c, m3])


def beltrami_field(trunc: int, n0, amplitude: float = 1.0, sign: int = 1) -> SpectralField:
    """Real single-shell curl eigenfield: one helicity on modes +-n0.

    Its advective nonlinearity is a pure gradient, so every bilinear
    operator in this package annihilates it; under any of the solved
    systems it decays by the exact dissipation factor.
    """
    f = SpectralField(trunc)
    ep, em = helical_basis(n0)
    vec = amplitude * (ep if sign > 0 else em)
    f.set_mode(n0, vec)
    f.set_mode(tuple(-c for c in n0), np.conj(vec))
    return f


def random_divfree_field(trunc: int, seed: int, *, decay: float = 2.0,
                         target_h1: float | None = None, real: bool = True) -> SpectralField:
    """Seeded random divergence-free mean-zero field.

    Helical amplitudes |c^s(n)| = |n|^-decay with uniform random phases,
    conjugate-symmetrised when a real-valued field is requested, then
    rescaled so that the H^1 norm equals target_h1 (when given).
    """
    rng = np.random.default_rng(seed)
    k = 2 * trunc + 1
    envelope = abs_grid(trunc) ** (-decay)
    envelope[trunc, trunc, trunc] = 0.0

    amps = []
    for _ in range(2):
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(k, k, k))
        c = envelope * np.exp(1j * phase)
        if real:
            # overwrite the lower lexicographic half with the mirror conjugate
            flat = c.reshape(-1)
            rev = c[::-1, ::-1, ::-1].reshape(-1)
            half = np.arange(flat.size) > flat.size // 2
            flat[half] = np.conj(rev[half])
            c = flat.reshape(k, k, k)
        c[trunc, trunc, trunc] = 0.0
        amps.append(c)
    field = helical_recompose(HelicalField(trunc, amps[0], amps[1]))

    if target_h1 is not None:
        nsq = (abs_grid(trunc) ** 2)
        nsq[trunc, trunc, trunc] = 0.0
        h1 = np.sqrt(float(np.sum(nsq * np.abs(field.coeffs) ** 2).real))
        if h1 > 0:
            field = field * (target_h1 / h1)
    return field
