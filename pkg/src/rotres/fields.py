"""Truncated spectral velocity fields on the unit torus.

Convention: u(x) = sum_n uhat(n) exp(i n.x) with n on the cube
max(|n1|,|n2|,|n3|) <= N.  Coefficients are stored as a complex array of
shape (3, K, K, K) with K = 2N + 1 and array index i = n + N, so the zero
mode sits at the centre.  Real-valued fields satisfy uhat(-n) = conj(uhat(n)).

The binary checkpoint format (magic "ROTRES01") serialises the header
{N, flags, nu, alpha, omega, t} followed by the (2N+1)^3 modes in
lexicographic n order, three complex components per mode.
"""

from __future__ import annotations

import struct
from functools import lru_cache

import numpy as np

from .errors import ContractViolationError, TruncationMismatchError

CHECKPOINT_MAGIC = b"ROTRES01"
FLAG_REAL = 1
FLAG_DIVFREE = 2
FLAG_MEANZERO = 4

_HEADER = struct.Struct("<8sII4d")


@lru_cache(maxsize=16)
def mode_grids(trunc: int):
    """Integer component grids (n1, n2, n3), each of shape (K, K, K)."""
    r = np.arange(-trunc, trunc + 1, dtype=np.int64)
    return np.meshgrid(r, r, r, indexing="ij")


@lru_cache(maxsize=16)
def norm_sq_grid(trunc: int) -> np.ndarray:
    n1, n2, n3 = mode_grids(trunc)
    return n1 * n1 + n2 * n2 + n3 * n3


@lru_cache(maxsize=16)
def abs_grid(trunc: int) -> np.ndarray:
    """|n| as float, with the zero mode replaced by 1 to keep divisions safe."""
    a = np.sqrt(norm_sq_grid(trunc).astype(np.float64))
    a[trunc, trunc, trunc] = 1.0
    return a


class SpectralField:
    """Complex Fourier coefficients of a 3-component field on the mode cube."""

    __slots__ = ("trunc", "coeffs")

    def __init__(self, trunc: int, coeffs: np.ndarray | None = None):
        trunc = int(trunc)
        if trunc < 1:
            raise ValueError(f"truncation must be >= 1, got {trunc}")
        k = 2 * trunc + 1
        if coeffs is None:
            coeffs = np.zeros((3, k, k, k), dtype=np.complex128)
        else:
            coeffs = np.asarray(coeffs, dtype=np.complex128)
            if coeffs.shape != (3, k, k, k):
                raise ValueError(f"expected coeffs shape {(3, k, k, k)}, got {coeffs.shape}")
        self.trunc = trunc
        self.coeffs = coeffs

    @property
    def k(self) -> int:
        return 2 * self.trunc + 1

    def copy(self) -> "SpectralField":
        return SpectralField(self.trunc, self.coeffs.copy())

    def _index(self, n) -> tuple[int, int, int]:
        i = tuple(int(c) + self.trunc for c in n)
        if not all(0 <= c < self.k for c in i):
            raise IndexError(f"mode {tuple(n)} outside truncation {self.trunc}")
        return i

    def mode(self, n) -> np.ndarray:
        """The complex 3-vector coefficient at mode n."""
        i1, i2, i3 = self._index(n)
        return self.coeffs[:, i1, i2, i3].copy()

    def set_mode(self, n, value) -> None:
        i1, i2, i3 = self._index(n)
        self.coeffs[:, i1, i2, i3] = np.asarray(value, dtype=np.complex128)

    # -- algebra used by the time steppers -------------------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self.check_same_trunc(other)
        return SpectralField(self.trunc, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self.check_same_trunc(other)
        return SpectralField(self.trunc, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.trunc, self.coeffs * scalar)

    __rmul__ = __mul__

    def check_same_trunc(self, other: "SpectralField") -> None:
        if self.trunc != other.trunc:
            raise TruncationMismatchError(f"truncations differ: {self.trunc} vs {other.trunc}")

    # -- structural diagnostics ------------------------------------------

    def mean_mode(self) -> np.ndarray:
        c = self.trunc
        return self.coeffs[:, c, c, c].copy()

    def zero_mean(self) -> None:
        c = self.trunc
        self.coeffs[:, c, c, c] = 0.0

    def hermitian_defect(self) -> float:
        """Max |uhat(-n) - conj(uhat(n))| relative to the largest coefficient."""
        flipped = np.conj(self.coeffs[:, ::-1, ::-1, ::-1])
        scale = float(np.max(np.abs(self.coeffs)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.coeffs - flipped))) / scale

    def divergence_defect(self) -> float:
        """Max |n . uhat(n)| relative to max |n| |uhat(n)|."""
        n1, n2, n3 = mode_grids(self.trunc)
        div = n1 * self.coeffs[0] + n2 * self.coeffs[1] + n3 * self.coeffs[2]
        scale = float(np.max(abs_grid(self.trunc) * np.max(np.abs(self.coeffs), axis=0)))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(div))) / scale

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        return self.hermitian_defect() <= tol

    def is_divergence_free(self, tol: float = 1e-13) -> bool:
        return self.divergence_defect() <= tol

    def is_mean_zero(self, tol: float = 1e-13) -> bool:
        scale = max(float(np.max(np.abs(self.coeffs))), 1e-300)
        return float(np.max(np.abs(self.mean_mode()))) / scale <= tol

    def require_divergence_free(self, tol: float = 1e-12) -> None:
        defect = self.divergence_defect()
        if defect > tol:
            raise ContractViolationError(f"field is not divergence-free (defect {defect:.3e})")

    def flags(self) -> int:
        f = 0
        if self.is_real_valued():
            f |= FLAG_REAL
        if self.is_divergence_free(1e-12):
            f |= FLAG_DIVFREE
        if self.is_mean_zero():
            f |= FLAG_MEANZERO
        return f


def write_checkpoint(path, field: SpectralField, *, nu: float, alpha: float,
                     omega: float, t: float, flags: int | None = None) -> None:
    """Serialise a field in the ROTRES01 little-endian binary format."""
    if flags is None:
        flags = field.flags()
    header = _HEADER.pack(CHECKPOINT_MAGIC, field.trunc, flags,
                          float(nu), float(alpha), float(omega), float(t))
    # (c, i1, i2, i3) -> modes lexicographic in n, components innermost
    payload = np.ascontiguousarray(field.coeffs.transpose(1, 2, 3, 0)).tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_checkpoint(path) -> tuple[SpectralField, dict]:
    """Read a ROTRES01 checkpoint; returns the field and its header dict."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, trunc, flags, nu, alpha, omega, t = _HEADER.unpack(raw)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"bad checkpoint magic {magic!r}")
        k = 2 * trunc + 1
        data = np.frombuffer(fh.read(k**3 * 3 * 16), dtype=np.complex128)
    coeffs = data.reshape(k, k, k, 3).transpose(3, 0, 1, 2)
    header = {"trunc": int(trunc), "flags": int(flags), "nu": nu,
              "alpha": alpha, "omega": omega, "t": t}
    return SpectralField(trunc, coeffs.copy()), header
