"""Bilinear operators in the rotating frame and their verification harness.

The full operator conjugates the advective nonlinearity with the rotation
propagator,

    B(theta; a, b) = L(-theta) P (L(theta) a . grad) L(theta) b,

evaluated by propagate -> dealiased physical product -> Leray projection ->
propagate back.  Mode by mode this equals the triad sum

    i sum_sigma sum_{k+m=n} e^{-i theta omega} (ahat^{s1}(k).m)
                   (bhat^{s2}(m)|e^{s3}(n)) e^{s3}(n),

so the resonant part is the same sum restricted to exactly-resonant triads;
it is evaluated by direct summation over a certified triad table, never by
transforms.  Sobolev pairings are homogeneous, sesquilinear in the second
argument, and exclude the zero mode (all fields are mean-zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ContractViolationError, TruncationMismatchError
from .fields import SpectralField, abs_grid, mode_grids, norm_sq_grid
from .helical import (HelicalField, basis_arrays, helical_decompose,
                      helical_recompose, poincare_propagate)
from .resonance import ResonantSet


# ---------------------------------------------------------------------------
# Sobolev pairings


@lru_cache(maxsize=64)
def _hs_weight(trunc: int, s: float) -> np.ndarray:
    """Homogeneous weight |n|^(2s) with the zero mode masked out."""
    w = abs_grid(trunc) ** (2.0 * s)
    w[trunc, trunc, trunc] = 0.0
    return w


def hs_inner(f: SpectralField, g: SpectralField, s: float) -> complex:
    """sum_n |n|^(2s) (fhat(n) | ghat(n)); real when f = g."""
    f.check_same_trunc(g)
    w = _hs_weight(f.trunc, float(s))
    return complex(np.einsum("abc,jabc,jabc->", w, f.coeffs, g.coeffs.conj()))


def hs_norm(f: SpectralField, s: float) -> float:
    w = _hs_weight(f.trunc, float(s))
    return float(np.sqrt(np.einsum("abc,jabc->", w, np.abs(f.coeffs) ** 2).real))


# ---------------------------------------------------------------------------
# padded transforms (2/3-style dealiasing by zero padding)


@lru_cache(maxsize=64)
def _good_fft_size(n: int) -> int:
    """Smallest 5-smooth integer >= n."""
    while True:
        m = n
        for p in (2, 3, 5):
            while m % p == 0:
                m //= p
        if m == 1:
            return n
        n += 1


def _pad_size(trunc: int, dealias: bool) -> int:
    # products of two fields supported on |n|_inf <= N are alias-free on
    # the retained box when the grid has at least 3N+1 points per direction
    return _good_fft_size(3 * trunc + 1) if dealias else _good_fft_size(2 * trunc + 1)


@lru_cache(maxsize=64)
def _wrap_index(trunc: int, grid: int) -> np.ndarray:
    return np.arange(-trunc, trunc + 1) % grid


def spectral_to_physical(coeffs: np.ndarray, trunc: int, grid: int) -> np.ndarray:
    """Evaluate sum_n chat(n) e^{i n.x} on the uniform grid (leading axes kept)."""
    idx = _wrap_index(trunc, grid)
    pad = np.zeros(coeffs.shape[:-3] + (grid, grid, grid), dtype=np.complex128)
    pad[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]] = coeffs
    axes = (-3, -2, -1)
    return np.fft.ifftn(pad, axes=axes) * grid**3


def physical_to_spectral(values: np.ndarray, trunc: int) -> np.ndarray:
    """Inverse of spectral_to_physical, truncated back to the mode cube."""
    grid = values.shape[-1]
    hat = np.fft.fftn(values, axes=(-3, -2, -1)) / grid**3
    idx = _wrap_index(trunc, grid)
    return hat[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]]


def leray_project_field(coeffs: np.ndarray, trunc: int) -> np.ndarray:
    """Mode-wise projection onto the plane orthogonal to n (zero mode untouched)."""
    n1, n2, n3 = (g.astype(np.float64) for g in mode_grids(trunc))
    nsq = norm_sq_grid(trunc).astype(np.float64)
    nsq[trunc, trunc, trunc] = 1.0
    dot = (n1 * coeffs[0] + n2 * coeffs[1] + n3 * coeffs[2]) / nsq
    out = coeffs.copy()
    out[0] -= n1 * dot
    out[1] -= n2 * dot
    out[2] -= n3 * dot
    return out


def advect(a: SpectralField, b: SpectralField, *, dealias: bool = True) -> SpectralField:
    """Galerkin-truncated P (a . grad) b with the mean mode removed."""
    a.check_same_trunc(b)
    trunc = a.trunc
    grid = _pad_size(trunc, dealias)
    n1, n2, n3 = mode_grids(trunc)
    grads = np.empty((3, 3) + b.coeffs.shape[1:], dtype=np.complex128)
    for j, nj in enumerate((n1, n2, n3)):
        grads[j] = 1j * nj * b.coeffs
    a_phys = spectral_to_physical(a.coeffs, trunc, grid)
    g_phys = spectral_to_physical(grads.reshape((9,) + b.coeffs.shape[1:]), trunc, grid)
    g_phys = g_phys.reshape((3, 3, grid, grid, grid))
    adv_phys = np.einsum("jxyz,jixyz->ixyz", a_phys, g_phys)
    adv = physical_to_spectral(adv_phys, trunc)
    adv = leray_project_field(adv, trunc)
    out = SpectralField(trunc, adv)
    out.zero_mean()
    return out


def bilinear_full(theta: float, a: SpectralField, b: SpectralField, *,
                  dealias: bool = True, check: bool = True) -> SpectralField:
    """B(theta; a, b) via the propagate-multiply-project-propagate pipeline."""
    a.check_same_trunc(b)
    if theta != 0.0:
        a = poincare_propagate(a, theta, check=check)
        b = poincare_propagate(b, theta, check=check)
    elif check:
        a.require_divergence_free()
        b.require_divergence_free()
    out = advect(a, b, dealias=dealias)
    if theta != 0.0:
        out = poincare_propagate(out, -theta, check=False)
    return out


# ---------------------------------------------------------------------------
# resonant part by triad summation


class ResonantOperator:
    """Precomputed triad summation for the resonant bilinear operator.

    Rows are restricted to triads whose three legs all fit inside the field
    truncation box; per row the scalar factor
    i (e^{s1}(k) . m) (e^{s2}(m) | e^{s3}(n)) is stored, so an application is
    two gathers, one multiply, and a deterministic scatter-add per output
    helicity.
    """

    def __init__(self, rset: ResonantSet, trunc: int):
        if rset.mode != "all":
            raise ValueError("resonant operator needs a set enumerated in all-omega-zero mode")
        if rset.bound < trunc:
            raise TruncationMismatchError(
                f"triad table bound {rset.bound} is smaller than field truncation {trunc}")
        self.trunc = int(trunc)
        k = 2 * trunc + 1
        inside = (np.max(np.abs(rset.k), axis=1) <= trunc) \
            & (np.max(np.abs(rset.m), axis=1) <= trunc) \
            & (np.max(np.abs(rset.n), axis=1) <= trunc)
        kv, mv, nv = rset.k[inside], rset.m[inside], rset.n[inside]
        sig = rset.sigma[inside]

        def flat(v):
            off = v + trunc
            return (off[:, 0] * k + off[:, 1]) * k + off[:, 2]

        self.kidx, self.midx, self.nidx = flat(kv), flat(mv), flat(nv)
        self.s1 = sig[:, 0] > 0
        self.s2 = sig[:, 1] > 0
        self.s3 = sig[:, 2] > 0
        ep, em = basis_arrays(trunc)
        epf, emf = ep.reshape(3, -1), em.reshape(3, -1)
        ek = np.where(self.s1[None, :], epf[:, self.kidx], emf[:, self.kidx])
        e_m = np.where(self.s2[None, :], epf[:, self.midx], emf[:, self.midx])
        e_n = np.where(self.s3[None, :], epf[:, self.nidx], emf[:, self.nidx])
        k_dot_m = np.einsum("jr,rj->r", ek, mv.astype(np.float64))
        pair = np.einsum("jr,jr->r", e_m, e_n.conj())
        self.factor = 1j * k_dot_m * pair
        self.rows = int(self.factor.shape[0])

    def apply_helical(self, ha: HelicalField, hb: HelicalField) -> SpectralField:
        ca = np.where(self.s1, ha.plus.reshape(-1)[self.kidx],
                      ha.minus.reshape(-1)[self.kidx])
        cb = np.where(self.s2, hb.plus.reshape(-1)[self.midx],
                      hb.minus.reshape(-1)[self.midx])
        w = self.factor * ca * cb
        size = (2 * self.trunc + 1) ** 3
        out_p = np.zeros(size, dtype=np.complex128)
        out_m = np.zeros(size, dtype=np.complex128)
        for mask, out in ((self.s3, out_p), (~self.s3, out_m)):
            idx = self.nidx[mask]
            vals = w[mask]
            out += np.bincount(idx, weights=vals.real, minlength=size)
            out += 1j * np.bincount(idx, weights=vals.imag, minlength=size)
        kk = 2 * self.trunc + 1
        h = HelicalField(self.trunc, out_p.reshape(kk, kk, kk), out_m.reshape(kk, kk, kk))
        return helical_recompose(h)

    def apply(self, a: SpectralField, b: SpectralField, *, check: bool = True) -> SpectralField:
        return self.apply_helical(helical_decompose(a, check=check),
                                  helical_decompose(b, check=check))


def _operator_for(rset: ResonantSet, trunc: int) -> ResonantOperator:
    cache = getattr(rset, "_operator_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(rset, "_operator_cache", cache)
    if trunc not in cache:
        cache[trunc] = ResonantOperator(rset, trunc)
    return cache[trunc]


def bilinear_resonant(a: SpectralField, b: SpectralField,
                      rset: ResonantSet | ResonantOperator, *,
                      check: bool = True) -> SpectralField:
    """Resonant part B_R(a, b) by certified triad summation."""
    a.check_same_trunc(b)
    op = rset if isinstance(rset, ResonantOperator) else _operator_for(rset, a.trunc)
    if op.trunc != a.trunc:
        raise TruncationMismatchError("operator truncation differs from field truncation")
    return op.apply(a, b, check=check)


def bilinear_nonresonant(theta: float, a: SpectralField, b: SpectralField,
                         rset: ResonantSet | ResonantOperator, *,
                         dealias: bool = True, check: bool = True) -> SpectralField:
    """Non-resonant remainder B(theta; a, b) - B_R(a, b)."""
    full = bilinear_full(theta, a, b, dealias=dealias, check=check)
    return full - bilinear_resonant(a, b, rset, check=False)


def bilinear_time_average(a: SpectralField, b: SpectralField, span: float,
                          step: float = 0.25, *, dealias: bool = True) -> SpectralField:
    """Trapezoid average (1/T) int_0^T B(theta; a, b) dtheta.

    The integrand is a trig polynomial in theta with frequencies at most 3,
    so a step of 0.25 resolves it far beyond the accuracy of interest; the
    residual against the resonant part is dominated by the true 1/(T omega)
    averaging tails, which is what this average is used to measure.
    """
    a.require_divergence_free()
    b.require_divergence_free()
    nodes = int(round(span / step))
    thetas = np.linspace(0.0, span, nodes + 1)
    acc = np.zeros_like(a.coeffs)
    for i, th in enumerate(thetas):
        weight = 0.5 if i in (0, nodes) else 1.0
        acc += weight * bilinear_full(float(th), a, b, dealias=dealias, check=False).coeffs
    return SpectralField(a.trunc, acc / nodes)


# ---------------------------------------------------------------------------
# vertical-average / oscillation splitting


@dataclass
class SplitField:
    """Vertical average (2D-3C) and zero-vertical-mean remainder of a field."""

    trunc: int
    bar_h: np.ndarray  # (2, K, K) complex, horizontal components at n3 = 0
    bar3: np.ndarray  # (K, K) complex, vertical component at n3 = 0
    osc: SpectralField

    def copy(self) -> "SplitField":
        return SplitField(self.trunc, self.bar_h.copy(), self.bar3.copy(), self.osc.copy())


def split_bar_osc(f: SpectralField) -> SplitField:
    """Exact partition by n3 = 0 versus n3 != 0."""
    t = f.trunc
    bar_h = f.coeffs[:2, :, :, t].copy()
    bar3 = f.coeffs[2, :, :, t].copy()
    osc = f.copy()
    osc.coeffs[:, :, :, t] = 0.0
    return SplitField(t, bar_h, bar3, osc)


def reassemble(sf: SplitField) -> SpectralField:
    out = sf.osc.copy()
    t = sf.trunc
    out.coeffs[0, :, :, t] += sf.bar_h[0]
    out.coeffs[1, :, :, t] += sf.bar_h[1]
    out.coeffs[2, :, :, t] += sf.bar3
    return out


def bar_field(f: SpectralField) -> SpectralField:
    """The vertical average embedded as a 3D field (modes with n3 = 0 only)."""
    t = f.trunc
    out = SpectralField(t)
    out.coeffs[:, :, :, t] = f.coeffs[:, :, :, t]
    return out


def osc_field(f: SpectralField) -> SpectralField:
    t = f.trunc
    out = f.copy()
    out.coeffs[:, :, :, t] = 0.0
    return out


# ---------------------------------------------------------------------------
# 2D dealiased products (used by the split-system solver)


def spectral_to_physical_2d(coeffs: np.ndarray, trunc: int, grid: int) -> np.ndarray:
    idx = _wrap_index(trunc, grid)
    pad = np.zeros(coeffs.shape[:-2] + (grid, grid), dtype=np.complex128)
    pad[..., idx[:, None], idx[None, :]] = coeffs
    return np.fft.ifftn(pad, axes=(-2, -1)) * grid**2


def physical_to_spectral_2d(values: np.ndarray, trunc: int) -> np.ndarray:
    grid = values.shape[-1]
    hat = np.fft.fftn(values, axes=(-2, -1)) / grid**2
    idx = _wrap_index(trunc, grid)
    return hat[..., idx[:, None], idx[None, :]]


def advect_scalar_2d(vel: np.ndarray, scal: np.ndarray, trunc: int, *,
                     dealias: bool = True) -> np.ndarray:
    """(v . grad_h) s for a 2D velocity (2, K, K) and scalar (K, K)."""
    grid = _pad_size(trunc, dealias)
    r = np.arange(-trunc, trunc + 1, dtype=np.float64)
    n1 = r[:, None]
    n2 = r[None, :]
    gx = 1j * n1 * scal
    gy = 1j * n2 * scal
    v_phys = spectral_to_physical_2d(vel, trunc, grid)
    g_phys = spectral_to_physical_2d(np.stack([gx, gy]), trunc, grid)
    prod = v_phys[0] * g_phys[0] + v_phys[1] * g_phys[1]
    return physical_to_spectral_2d(prod, trunc)


# ---------------------------------------------------------------------------
# lemma verification harness


@dataclass
class CancellationReport:
    s: float
    applicable: bool  # second field real-valued (hypothesis of the pairings)
    values: dict[str, float]
    scales: dict[str, float]
    tolerance_factor: float
    passed: bool

    def as_dict(self) -> dict:
        return {"s": self.s, "applicable": self.applicable, "values": self.values,
                "scales": self.scales, "tolerance_factor": self.tolerance_factor,
                "passed": self.passed}


def verify_cancellations(a: SpectralField, b: SpectralField, s: float,
                         rset: ResonantSet | ResonantOperator, *,
                         tolerance_factor: float = 1e-11) -> CancellationReport:
    """Numerical check of the four structural cancellations of the resonant part.

    Checks, for divergence-free mean-zero a and real-valued b:
      bar(B_R(a_osc, a_osc)) = 0,
      <B_R(bar a, b_osc), b_osc>_{H^s} = 0,
      <B_R(b_osc, bar b), b_osc>_{H^s} = 0,
      <B_R(a_osc, b_osc), b_osc>_{L^2} = 0.
    Each value is compared against tolerance_factor times an input-norm
    scale, so the report is amplitude-invariant.  (Output-based scales would
    be meaningless here: on small boxes the whole of B_R(a_osc, a_osc) can
    cancel, not just its vertical average.)
    """
    a.check_same_trunc(b)
    applicable = b.is_real_valued()
    a_bar, a_osc = bar_field(a), osc_field(a)
    b_bar, b_osc = bar_field(b), osc_field(b)

    values: dict[str, float] = {}
    scales: dict[str, float] = {}

    br_aosc = bilinear_resonant(a_osc, a_osc, rset)
    values["bar_of_BR_osc_osc"] = hs_norm(bar_field(br_aosc), 0.0)
    scales["bar_of_BR_osc_osc"] = hs_norm(a_osc, 0.0) * hs_norm(a_osc, 1.0)

    def pairing(name: str, x: SpectralField, y: SpectralField, z: SpectralField,
                order: float) -> None:
        field = bilinear_resonant(x, y, rset)
        values[name] = abs(hs_inner(field, z, order))
        scales[name] = hs_norm(x, order) * hs_norm(y, order + 1.0) * hs_norm(z, order)

    pairing("bar_a_advects_b_osc", a_bar, b_osc, b_osc, s)
    pairing("b_osc_advects_bar_b", b_osc, b_bar, b_osc, s)
    pairing("osc_osc_l2", a_osc, b_osc, b_osc, 0.0)

    passed = all(values[k] <= tolerance_factor * scales[k] for k in values)
    return CancellationReport(s=float(s), applicable=applicable, values=values,
                              scales=scales, tolerance_factor=tolerance_factor,
                              passed=passed)


def trilinear_ratio(a: SpectralField, eps: float,
                    rset: ResonantSet | ResonantOperator) -> float | None:
    """|<B_R(a_osc, a_osc), a_osc>_{H^1}| / (|a_osc|_{H^1}^2 |a_osc|_{H^{3/2+eps}}).

    Scale-invariant by homogeneity; None when the oscillating part vanishes
    (undefined 0/0 ratio).
    """
    if not a.is_real_valued():
        raise ContractViolationError("trilinear ratio requires a real-valued field")
    a_osc = osc_field(a)
    denom = hs_norm(a_osc, 1.0) ** 2 * hs_norm(a_osc, 1.5 + eps)
    if denom == 0.0:
        return None
    num = abs(hs_inner(bilinear_resonant(a_osc, a_osc, rset), a_osc, 1.0))
    return num / denom
