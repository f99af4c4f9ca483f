"""Exact detection, enumeration and audits of resonant wave triads.

A triad is a triple (n, k, m) of nonzero lattice modes with k + m = n.  Its
interaction phase for a sign triple sigma is

    omega = s1 k3/|k| + s2 m3/|m| - s3 n3/|n|.

Writing |k| = kappa sqrt(d_k) with d_k square-free (and likewise for m, n),
a sum of nonzero rational multiples of square roots of distinct square-free
integers never vanishes, so omega = 0 is decidable in integers: the
square-free parts of the participating (nonzero-third-component) modes must
coincide, and then

    certificate = s1 k3 mu nu + s2 m3 kappa nu - s3 n3 kappa mu

vanishes exactly iff omega does.  Every enumerated triad carries this
integer certificate.

The nontrivial set keeps only triads with k3 m3 n3 != 0; the "all" mode also
enumerates the three |shell| = |shell| families with one vanishing third
component and the purely 2D interactions, which together feed the resonant
bilinear operator.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidModeError, InvalidTriadError, NumericalIdentityError
from .lattice import (TRIAL_DIVISION_LIMIT, as_freq, norm_sq,
                      square_free_decompose, squarefree_tables)

SignTriple = tuple[int, int, int]

ALL_SIGNS: tuple[SignTriple, ...] = tuple(
    (s1, s2, s3) for s1 in (1, -1) for s2 in (1, -1) for s3 in (1, -1)
)
# one representative per {sigma, -sigma} pair
HALF_SIGNS: tuple[SignTriple, ...] = tuple(s for s in ALL_SIGNS if s[0] == 1)

MAX_ENUM_BOUND = 10_000  # keeps every squared norm within the sieve / exact-float range


class ExactResonance(NamedTuple):
    zero: bool
    certificate: int | None


def _require_nonzero(v, name: str):
    f = as_freq(v)
    if f == (0, 0, 0):
        raise InvalidModeError(f"mode {name} must be nonzero")
    return f


def _require_sigma(sigma) -> SignTriple:
    s = tuple(int(c) for c in sigma)
    if len(s) != 3 or any(c not in (-1, 1) for c in s):
        raise ValueError(f"sign triple must have components +-1, got {sigma}")
    return s  # type: ignore[return-value]


def omega(n, k, m, sigma) -> float:
    """Floating interaction phase s1 k3/|k| + s2 m3/|m| - s3 n3/|n|."""
    n = _require_nonzero(n, "n")
    k = _require_nonzero(k, "k")
    m = _require_nonzero(m, "m")
    s1, s2, s3 = _require_sigma(sigma)
    return (s1 * k.n3 / math.sqrt(norm_sq(k))
            + s2 * m.n3 / math.sqrt(norm_sq(m))
            - s3 * n.n3 / math.sqrt(norm_sq(n)))


def _is_square_product(qa: int, qb: int) -> tuple[bool, int]:
    """qa * qb is a perfect square exactly when the square-free parts agree."""
    root = math.isqrt(qa * qb)
    return root * root == qa * qb, root


def _exact_zero_large(n, k, m, s1: int, s2: int, s3: int) -> ExactResonance:
    """Exact test for components beyond the trial-division range.

    Works from perfect-square products of the squared norms (no
    factorisation): for three contributing legs the certificate equals the
    common square-free part times the decomposition-based one; vanishing is
    unaffected by the scaling.
    """
    qn, qk, qm = norm_sq(n), norm_sq(k), norm_sq(m)
    terms = []  # (signed third component, squared norm) of contributing legs
    if k.n3 != 0:
        terms.append((s1 * k.n3, qk))
    if m.n3 != 0:
        terms.append((s2 * m.n3, qm))
    if n.n3 != 0:
        terms.append((-s3 * n.n3, qn))
    if not terms:
        return ExactResonance(True, 0)
    if len(terms) == 1:
        return ExactResonance(False, terms[0][0])
    if len(terms) == 2:
        (u, qu), (v, qv) = terms
        ok, _ = _is_square_product(qu, qv)
        if not ok:
            return ExactResonance(False, None)
        # sign-aware squares: zero iff u sqrt(qv) = -v sqrt(qu)
        cert = (1 if u > 0 else -1) * u * u * qv + (1 if v > 0 else -1) * v * v * qu
        return ExactResonance(cert == 0, cert)
    ok_a, a = _is_square_product(qm, qn)
    ok_b, b = _is_square_product(qk, qn)
    ok_c, c = _is_square_product(qk, qm)
    if not (ok_a and ok_b and ok_c):
        return ExactResonance(False, None)
    cert = s1 * k.n3 * a + s2 * m.n3 * b - s3 * n.n3 * c
    return ExactResonance(cert == 0, cert)


def omega_is_zero_exact(n, k, m, sigma) -> ExactResonance:
    """Decide omega == 0 in exact integer arithmetic.

    The square-free screening applies to the modes that actually contribute
    (nonzero third component); terms with a vanishing third component drop
    out of the phase regardless of their norm class.  When the screening
    fails the phase cannot vanish and no certificate exists.  Components too
    large for trial division take an equivalent perfect-square route whose
    certificate is scaled by the common square-free part.
    """
    n = _require_nonzero(n, "n")
    k = _require_nonzero(k, "k")
    m = _require_nonzero(m, "m")
    s1, s2, s3 = _require_sigma(sigma)
    if max(norm_sq(n), norm_sq(k), norm_sq(m)) > TRIAL_DIVISION_LIMIT:
        return _exact_zero_large(n, k, m, s1, s2, s3)
    nu_n, d_n = square_free_decompose(norm_sq(n))
    kap, d_k = square_free_decompose(norm_sq(k))
    mu, d_m = square_free_decompose(norm_sq(m))
    act_k, act_m, act_n = k.n3 != 0, m.n3 != 0, n.n3 != 0
    if act_k and act_m and d_k != d_m:
        return ExactResonance(False, None)
    if act_k and act_n and d_k != d_n:
        return ExactResonance(False, None)
    if act_m and act_n and d_m != d_n:
        return ExactResonance(False, None)
    cert = s1 * k.n3 * mu * nu_n + s2 * m.n3 * kap * nu_n - s3 * n.n3 * kap * mu
    return ExactResonance(cert == 0, cert)


def in_nontrivial_resonant_set(n, k, m) -> list[SignTriple]:
    """All sign triples certifying (n, k, m) as a nontrivial resonance.

    Empty when k3 m3 n3 = 0 (excluded by definition) or when no sign triple
    makes the phase vanish.  Requires the convolution constraint k + m = n.
    """
    n, k, m = as_freq(n), as_freq(k), as_freq(m)
    if tuple(a + b for a, b in zip(k, m)) != tuple(n):
        raise InvalidTriadError(f"k + m != n for k={tuple(k)}, m={tuple(m)}, n={tuple(n)}")
    if k.n3 * m.n3 * n.n3 == 0:
        return []
    return [s for s in ALL_SIGNS if omega_is_zero_exact(n, k, m, s).zero]


# ---------------------------------------------------------------------------
# enumeration


def _modes_within(bound: int, norm: str) -> np.ndarray:
    """All nonzero integer modes with |v| <= bound (euclidean) or |v|_inf <= bound."""
    r = np.arange(-bound, bound + 1, dtype=np.int64)
    g1, g2, g3 = np.meshgrid(r, r, r, indexing="ij")
    vecs = np.stack([g1.ravel(), g2.ravel(), g3.ravel()], axis=1)
    q = np.einsum("ij,ij->i", vecs, vecs)
    keep = q > 0
    if norm == "euclidean":
        keep &= q <= bound * bound
    order = np.lexsort((vecs[:, 2], vecs[:, 1], vecs[:, 0]))
    vecs = vecs[order][keep[order]]
    return vecs


@dataclass
class ResonantSet:
    """Certified resonant triads, one row per (n, k, m, sigma)."""

    bound: int
    norm: str  # "euclidean" | "box"
    mode: str  # "nontrivial" | "all"
    n: np.ndarray  # (R, 3) int64
    k: np.ndarray
    m: np.ndarray
    sigma: np.ndarray  # (R, 3) int8
    cert: np.ndarray  # (R,) int64

    def __len__(self) -> int:
        return self.n.shape[0]

    def canonical_sort(self) -> None:
        keys = (self.sigma[:, 2], self.sigma[:, 1], self.sigma[:, 0],
                self.k[:, 2], self.k[:, 1], self.k[:, 0],
                self.n[:, 2], self.n[:, 1], self.n[:, 0])
        order = np.lexsort(keys)
        for name in ("n", "k", "m", "sigma", "cert"):
            setattr(self, name, getattr(self, name)[order])

    def _pair_span(self) -> int:
        return 2 * self.bound if self.norm == "euclidean" else 2 * self.bound

    def unique_triples(self) -> np.ndarray:
        """Indices of the first row of each distinct (n, k) pair."""
        span = self._pair_span()
        base = 2 * span + 1
        idn = _pack3(self.n, span, base)
        idk = _pack3(self.k, span, base)
        packed = idn * base**3 + idk
        _, first = np.unique(packed, return_index=True)
        return np.sort(first)

    def per_output_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct (k, m) pair count for each output mode n."""
        rows = self.unique_triples()
        span = self._pair_span()
        idn = _pack3(self.n[rows], span, 2 * span + 1)
        uniq, counts = np.unique(idn, return_counts=True)
        return _unpack3(uniq, span, 2 * span + 1), counts

    def to_csv(self, path) -> None:
        cols = np.concatenate(
            [self.n, self.k, self.m, self.sigma.astype(np.int64), self.cert[:, None]], axis=1
        )
        with open(path, "w", newline="") as fh:
            fh.write("n1,n2,n3,k1,k2,k3,m1,m2,m3,s1,s2,s3,certificate\n")
            for row in cols:
                fh.write(",".join(str(int(c)) for c in row) + "\n")

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps({"bound": self.bound, "norm": self.norm, "mode": self.mode,
                             "rows": len(self)}).encode())
        for name in ("n", "k", "m", "sigma", "cert"):
            h.update(np.ascontiguousarray(getattr(self, name)).tobytes())
        return h.hexdigest()

    def save(self, path) -> None:
        np.savez_compressed(path, bound=self.bound, norm=self.norm, mode=self.mode,
                            n=self.n, k=self.k, m=self.m, sigma=self.sigma, cert=self.cert)

    @classmethod
    def load(cls, path) -> "ResonantSet":
        z = np.load(path, allow_pickle=False)
        return cls(bound=int(z["bound"]), norm=str(z["norm"]), mode=str(z["mode"]),
                   n=z["n"], k=z["k"], m=z["m"], sigma=z["sigma"], cert=z["cert"])


def _pack3(vecs: np.ndarray, span: int, base: int) -> np.ndarray:
    off = vecs + span
    return (off[:, 0] * base + off[:, 1]) * base + off[:, 2]


def _unpack3(ids: np.ndarray, span: int, base: int) -> np.ndarray:
    c3 = ids % base
    rest = ids // base
    c2 = rest % base
    c1 = rest // base
    return np.stack([c1 - span, c2 - span, c3 - span], axis=1)


class _RowCollector:
    def __init__(self):
        self.k: list[np.ndarray] = []
        self.m: list[np.ndarray] = []
        self.sigma: list[np.ndarray] = []
        self.cert: list[np.ndarray] = []

    def emit(self, kk: np.ndarray, mm: np.ndarray, sigma: SignTriple, cert: np.ndarray) -> None:
        if kk.shape[0] == 0:
            return
        self.k.append(kk)
        self.m.append(mm)
        self.sigma.append(np.tile(np.array(sigma, dtype=np.int8), (kk.shape[0], 1)))
        self.cert.append(cert.astype(np.int64))

    def build(self, bound: int, norm: str, mode: str) -> ResonantSet:
        if self.k:
            k = np.concatenate(self.k)
            m = np.concatenate(self.m)
            sigma = np.concatenate(self.sigma)
            cert = np.concatenate(self.cert)
        else:
            k = np.zeros((0, 3), np.int64)
            m = np.zeros((0, 3), np.int64)
            sigma = np.zeros((0, 3), np.int8)
            cert = np.zeros((0,), np.int64)
        rs = ResonantSet(bound=bound, norm=norm, mode=mode, n=k + m, k=k, m=m,
                         sigma=sigma, cert=cert)
        rs.canonical_sort()
        return rs


def _chunk_ranges(n: int, size: int):
    for start in range(0, n, size):
        yield start, min(n, start + size)


def _shard_mask(modes: np.ndarray, shards: int, shard: int) -> np.ndarray:
    if shards <= 1:
        return np.ones(modes.shape[0], dtype=bool)
    return (modes[:, 2] % shards) == (shard % shards)


def _emit_pairs_2d(out: _RowCollector, plane_k: np.ndarray, plane_m: np.ndarray,
                   chunk: int = 512) -> None:
    """k3 = m3 = 0: the phase vanishes identically for every sign triple."""
    for a, b in _chunk_ranges(plane_k.shape[0], chunk):
        kk = plane_k[a:b]
        n = kk[:, None, :] + plane_m[None, :, :]
        ok = np.any(n != 0, axis=2)
        ki, mi = np.nonzero(ok)
        kk_rows, mm_rows = kk[ki], plane_m[mi]
        zeros = np.zeros(kk_rows.shape[0], dtype=np.int64)
        for sigma in ALL_SIGNS:
            out.emit(kk_rows, mm_rows, sigma, zeros)


def _emit_pairs_one_plane(out: _RowCollector, plane: np.ndarray, osc: np.ndarray,
                          osc_q: np.ndarray, plane_side: str, chunk: int = 256) -> None:
    """Exactly one of k3, m3 is zero; resonance forces |n| = |osc leg|.

    plane_side = "k": k3 = 0 and certifying triples have s2 = s3;
    plane_side = "m": m3 = 0 and certifying triples have s1 = s3.
    """
    for a, b in _chunk_ranges(plane.shape[0], chunk):
        pp = plane[a:b]
        n = pp[:, None, :] + osc[None, :, :]
        qn = np.einsum("abj,abj->ab", n, n)
        ok = qn == osc_q[None, :]
        pi, oi = np.nonzero(ok)
        pp_rows, oo_rows = pp[pi], osc[oi]
        zeros = np.zeros(pp_rows.shape[0], dtype=np.int64)
        for s_free in (1, -1):
            for s_tied in (1, -1):
                if plane_side == "k":
                    sigma = (s_free, s_tied, s_tied)
                    out.emit(pp_rows, oo_rows, sigma, zeros)
                else:
                    sigma = (s_tied, s_free, s_tied)
                    out.emit(oo_rows, pp_rows, sigma, zeros)


def _emit_pairs_opposite(out: _RowCollector, osc: np.ndarray, osc_q: np.ndarray,
                         chunk: int = 256) -> None:
    """n3 = 0 with k3 = -m3 != 0; resonance forces |k| = |m| and s1 = s2."""
    order = np.lexsort((osc[:, 1], osc[:, 0], osc_q, osc[:, 2]))
    s_modes, s_q = osc[order], osc_q[order]
    # group by (k3, |k|^2) and pair with the (-k3, same |k|^2) group
    key = np.stack([s_modes[:, 2], s_q], axis=1)
    starts = np.concatenate([[0], 1 + np.nonzero(np.any(np.diff(key, axis=0) != 0, axis=1))[0],
                             [s_modes.shape[0]]])
    groups: dict[tuple[int, int], np.ndarray] = {}
    for gi in range(len(starts) - 1):
        a, b = starts[gi], starts[gi + 1]
        groups[(int(s_modes[a, 2]), int(s_q[a]))] = s_modes[a:b]
    for (h, q), kk in groups.items():
        mm_all = groups.get((-h, q))
        if mm_all is None or h <= 0:  # visit each (h, -h) family once, from h > 0
            continue
        for a, b in _chunk_ranges(kk.shape[0], chunk):
            kc = kk[a:b]
            n = kc[:, None, :] + mm_all[None, :, :]
            ok = np.any(n != 0, axis=2)
            ki, mi = np.nonzero(ok)
            k_rows, m_rows = kc[ki], mm_all[mi]
            zeros = np.zeros(k_rows.shape[0], dtype=np.int64)
            for s_pair in (1, -1):
                for s3 in (1, -1):
                    out.emit(k_rows, m_rows, (s_pair, s_pair, s3), zeros)
                    out.emit(m_rows, k_rows, (s_pair, s_pair, s3), zeros)


def _certify_and_emit(out: _RowCollector, k_rows, m_rows, kap, mu, nu_n, n3,
                      mirror: bool) -> None:
    """Emit every certifying sign triple for already-screened candidate pairs.

    The certificate obeys cert(k, m, (s1,s2,s3)) = cert(m, k, (s2,s1,s3)), so
    with mirror=True each unordered pair also yields its swapped row.
    """
    term_k = k_rows[:, 2].astype(np.int64) * mu * nu_n
    term_m = m_rows[:, 2].astype(np.int64) * kap * nu_n
    term_n = n3.astype(np.int64) * kap * mu
    for s1, s2, s3 in HALF_SIGNS:
        hit = s1 * term_k + s2 * term_m - s3 * term_n == 0
        if not hit.any():
            continue
        kk, mm = k_rows[hit], m_rows[hit]
        zeros = np.zeros(kk.shape[0], dtype=np.int64)
        out.emit(kk, mm, (s1, s2, s3), zeros)
        out.emit(kk, mm, (-s1, -s2, -s3), zeros)
        if mirror:
            out.emit(mm, kk, (s2, s1, s3), zeros)
            out.emit(mm, kk, (-s2, -s1, -s3), zeros)


def _emit_pairs_nontrivial(out: _RowCollector, modes: np.ndarray, q: np.ndarray,
                           nu_t: np.ndarray, d_t: np.ndarray,
                           k_select: np.ndarray | None,
                           chunk_elems: int = 4_000_000) -> None:
    """k3 m3 n3 != 0: equal square-free parts and a vanishing certificate.

    Pairs are scanned class-by-class (equal square-free part of the squared
    norm is necessary here).  With k_select=None each unordered pair is
    visited once and mirrored; otherwise k_select restricts the k side (the
    sharded path) and ordered pairs are scanned directly.  The diagonal
    k = m can never certify (the phase is (s1+s2-s3) k3/|k| != 0).
    """
    osc = modes[:, 2] != 0
    d_all = d_t[q]
    nu_all = nu_t[q]
    for d0 in np.unique(d_all[osc]):
        cls = osc & (d_all == d0)
        mm_all = modes[cls].astype(np.int32)
        mu_all = nu_all[cls].astype(np.int32)
        if k_select is None:
            kk_all, kap_all = mm_all, mu_all
        else:
            sel = cls & k_select
            if not sel.any():
                continue
            kk_all = modes[sel].astype(np.int32)
            kap_all = nu_all[sel].astype(np.int32)
        g = mm_all.shape[0]
        chunk = max(1, chunk_elems // max(1, g))
        for a, b in _chunk_ranges(kk_all.shape[0], chunk):
            mm = mm_all[a + 1 :] if k_select is None else mm_all
            if mm.shape[0] == 0:
                continue
            kk = kk_all[a:b]
            n = kk[:, None, :] + mm[None, :, :]
            n3 = n[:, :, 2]
            qn = (n[:, :, 0].astype(np.int32) ** 2 + n[:, :, 1].astype(np.int32) ** 2
                  + n3.astype(np.int32) ** 2)
            valid = (n3 != 0) & (qn > 0) & (d_t[qn] == d0)
            if k_select is None:
                # strict upper triangle: global column index exceeds row index
                cols = np.arange(a + 1, a + 1 + mm.shape[0])[None, :]
                rows = np.arange(a, b)[:, None]
                valid &= cols > rows
            if not valid.any():
                continue
            ki, mi = np.nonzero(valid)
            _certify_and_emit(out, kk[ki].astype(np.int64), mm[mi].astype(np.int64),
                              kap_all[a:b][ki].astype(np.int64),
                              mu_all[a + 1 :][mi].astype(np.int64) if k_select is None
                              else mu_all[mi].astype(np.int64),
                              nu_t[qn[ki, mi]], n3[ki, mi],
                              mirror=k_select is None)


def _normalize_mode(mode: str) -> str:
    aliases = {"nontrivial": "nontrivial", "nontrivial-only": "nontrivial",
               "all": "all", "all-omega-zero": "all"}
    if mode not in aliases:
        raise ValueError(f"unknown enumeration mode {mode!r}")
    return aliases[mode]


def enumerate_resonant_triads(bound: int, mode: str = "nontrivial", *,
                              norm: str = "euclidean", shards: int = 1) -> ResonantSet:
    """Complete certified list of resonant triads with both legs inside the bound.

    norm="euclidean" bounds |k|, |m| <= bound (the counting-lemma convention);
    norm="box" bounds the max-norm (the solver truncation convention).  The
    output mode n = k + m is not constrained.  Rows are in canonical
    (n, k, sigma) order, so the result is independent of the shard count.
    """
    bound = int(bound)
    if bound < 1:
        raise ValueError("bound must be >= 1")
    if bound > MAX_ENUM_BOUND:
        raise ValueError(f"bound {bound} exceeds the supported range {MAX_ENUM_BOUND}")
    if norm not in ("euclidean", "box"):
        raise ValueError(f"unknown norm {norm!r}")
    mode = _normalize_mode(mode)
    shards = max(1, int(shards))

    maxq = (2 * bound) ** 2 if norm == "euclidean" else 3 * (2 * bound) ** 2
    nu_t, d_t = squarefree_tables(maxq)
    modes = _modes_within(bound, norm)
    q = np.einsum("ij,ij->i", modes, modes)

    out = _RowCollector()
    if shards == 1:
        _emit_pairs_nontrivial(out, modes, q, nu_t, d_t, None)
    for shard in range(shards):
        k_sel = _shard_mask(modes, shards, shard)
        if shards > 1:
            _emit_pairs_nontrivial(out, modes, q, nu_t, d_t, k_sel)
        if mode == "all":
            plane = modes[(modes[:, 2] == 0) & k_sel]
            plane_m = modes[modes[:, 2] == 0]
            osc_sel = (modes[:, 2] != 0) & k_sel
            osc_all = modes[modes[:, 2] != 0]
            q_osc_all = q[modes[:, 2] != 0]
            _emit_pairs_2d(out, plane, plane_m)
            _emit_pairs_one_plane(out, plane, osc_all, q_osc_all, "k")
            # m-plane family: osc k side restricted by the shard
            _emit_pairs_one_plane(out, modes[(modes[:, 2] == 0)], modes[osc_sel],
                                  q[osc_sel], "m")
            if shard == 0:
                # |k| = |m|, k3 = -m3 pairs are emitted in both orders at once
                _emit_pairs_opposite(out, osc_all, q_osc_all)
    return out.build(bound, norm, mode)


# ---------------------------------------------------------------------------
# counting census


@dataclass
class CensusRow:
    bound: int
    sup_count: int
    argmax_n: tuple[int, int, int] | None
    total: int
    slope: float | None
    degree8_bound: int
    bound_ok: bool


def counting_census(bounds: Sequence[int], *, norm: str = "euclidean",
                    base_set: ResonantSet | None = None) -> list[CensusRow]:
    """Per-output-mode counts of nontrivial triads for each bound.

    For each L: the supremum over n of #{(k, m) : |k|, |m| <= L}, the
    (lexicographically smallest) attaining n, the total triad count, and the
    fitted log-log slope against the previous L.  Counts are checked against
    the trivial algebraic bound 8 (2L+1)^2 coming from the degree-8 resonance
    polynomial in k3.
    """
    bounds = sorted(int(b) for b in bounds)
    if not bounds:
        raise ValueError("at least one bound is required")
    if base_set is None:
        base_set = enumerate_resonant_triads(bounds[-1], "nontrivial", norm=norm)
    rows_idx = base_set.unique_triples()
    n_arr = base_set.n[rows_idx]
    k_arr = base_set.k[rows_idx]
    m_arr = base_set.m[rows_idx]
    if norm == "euclidean":
        qk = np.einsum("ij,ij->i", k_arr, k_arr)
        qm = np.einsum("ij,ij->i", m_arr, m_arr)
    else:
        qk = np.max(np.abs(k_arr), axis=1) ** 2
        qm = np.max(np.abs(m_arr), axis=1) ** 2

    span = 2 * base_set.bound
    base = 2 * span + 1
    out: list[CensusRow] = []
    prev: tuple[int, int] | None = None
    for L in bounds:
        mask = (qk <= L * L) & (qm <= L * L)
        total = int(mask.sum())
        if total == 0:
            sup, arg = 0, None
        else:
            ids = _pack3(n_arr[mask], span, base)
            uniq, counts = np.unique(ids, return_counts=True)
            sup = int(counts.max())
            champs = _unpack3(uniq[counts == sup], span, base)
            order = np.lexsort((champs[:, 2], champs[:, 1], champs[:, 0]))
            arg = tuple(int(c) for c in champs[order[0]])
        slope = None
        if prev is not None and prev[1] > 0 and sup > 0:
            slope = (math.log(sup) - math.log(prev[1])) / (math.log(L) - math.log(prev[0]))
        d8 = 8 * (2 * L + 1) ** 2
        out.append(CensusRow(bound=L, sup_count=sup, argmax_n=arg, total=total,
                             slope=slope, degree8_bound=d8, bound_ok=sup <= d8))
        prev = (L, sup)
    return out


def census_overall_slope(rows: Sequence[CensusRow]) -> float | None:
    """Least-squares slope of log sup_count against log L over the census."""
    pts = [(math.log(r.bound), math.log(r.sup_count)) for r in rows if r.sup_count > 0]
    if len(pts) < 2:
        return None
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    return float(np.polyfit(xs, ys, 1)[0])


# ---------------------------------------------------------------------------
# resonance polynomial on rational tori


def _as_rational(x, name: str) -> Fraction:
    if isinstance(x, float):
        raise TypeError(f"{name} must be an exact rational, not float")
    return Fraction(x)


def resonance_polynomial(k, m, n, theta2, theta3) -> Fraction:
    """Exact rational resonance polynomial for torus shape (theta2, theta3).

    With |v|^2_theta = v1^2 + theta2 v2^2 + theta3 v3^2, returns

        (k3^2 Qm Qn + m3^2 Qk Qn - n3^2 Qk Qm)^2 - 4 k3^2 m3^2 Qk Qm Qn^2.

    Zero iff (theta2, theta3) lies on the resonance curve of the triad.
    Homogeneous of degree 12 under (k, m, n) -> (lam k, lam m, lam n).
    """
    k, m, n = as_freq(k), as_freq(m), as_freq(n)
    if tuple(a + b for a, b in zip(k, m)) != tuple(n):
        raise InvalidTriadError("resonance polynomial requires k + m = n")
    t2 = _as_rational(theta2, "theta2")
    t3 = _as_rational(theta3, "theta3")
    if t2 <= 0 or t3 <= 0:
        raise ValueError("torus parameters must be positive")

    def wq(v) -> Fraction:
        return v.n1 * v.n1 + t2 * v.n2 * v.n2 + t3 * v.n3 * v.n3

    qk, qm, qn = wq(k), wq(m), wq(n)
    head = k.n3**2 * qm * qn + m.n3**2 * qk * qn - n.n3**2 * qk * qm
    return head * head - 4 * k.n3**2 * m.n3**2 * qk * qm * qn * qn


# ---------------------------------------------------------------------------
# small-divisor audits


@dataclass
class SmallDivisorAudit:
    bound: int
    min_omega: float
    lower_bound: float
    passed: bool
    argmin: tuple | None


def _vector_zero_mask(k3, m3, n3, dk, dm, dn, kap, mu, nuv, s1: int, s2: int, s3: int):
    """Vectorised exact-zero test; mirrors omega_is_zero_exact."""
    cert = s1 * k3 * mu * nuv + s2 * m3 * kap * nuv - s3 * n3 * kap * mu
    ok = np.ones(cert.shape, dtype=bool)
    ok &= np.where((k3 != 0) & (m3 != 0), dk == dm, True)
    ok &= np.where((k3 != 0) & (n3 != 0), dk == dn, True)
    ok &= np.where((m3 != 0) & (n3 != 0), dm == dn, True)
    return ok & (cert == 0)


def min_omega_audit(bound: int, *, chunk: int = 128) -> SmallDivisorAudit:
    """Minimum |omega| over all exactly-nonresonant triads in the ball.

    Scans every (k, m) with |k|, |m| <= bound, n = k + m != 0, and every sign
    triple; exact resonances are excluded from the minimum.  The reported
    lower bound is 3^-3 2^-4 bound^-12, from the integrality of the product
    of the four phases sharing s3.
    """
    bound = int(bound)
    modes = _modes_within(bound, "euclidean")
    q = np.einsum("ij,ij->i", modes, modes)
    nu_t, d_t = squarefree_tables((2 * bound) ** 2)
    absm = np.sqrt(q.astype(np.float64))
    d_m_all, mu_all = d_t[q], nu_t[q]

    best = math.inf
    best_at: tuple | None = None
    for a, b in _chunk_ranges(modes.shape[0], chunk):
        kk = modes[a:b]
        qk = q[a:b]
        n = kk[:, None, :] + modes[None, :, :]
        qn = np.einsum("abj,abj->ab", n, n)
        valid = qn > 0
        qn_safe = np.where(valid, qn, 1)
        k3 = kk[:, 2][:, None]
        m3 = modes[None, :, 2]
        n3 = n[:, :, 2]
        rk = k3 / np.sqrt(qk.astype(np.float64))[:, None]
        rm = m3 / absm[None, :]
        rn = n3 / np.sqrt(qn_safe.astype(np.float64))
        dk = d_t[qk][:, None]
        kap = nu_t[qk][:, None]
        dm, mu = d_m_all[None, :], mu_all[None, :]
        dn, nuv = d_t[qn_safe], nu_t[qn_safe]
        for s1, s2, s3 in HALF_SIGNS:
            w = np.abs(s1 * rk + s2 * rm - s3 * rn)
            zero = _vector_zero_mask(k3, m3, n3, dk, dm, dn, kap, mu, nuv, s1, s2, s3)
            w = np.where(valid & ~zero, w, math.inf)
            i = np.unravel_index(np.argmin(w), w.shape)
            if w[i] < best:
                best = float(w[i])
                best_at = (tuple(int(c) for c in n[i]), tuple(int(c) for c in kk[i[0]]),
                           tuple(int(c) for c in modes[i[1]]), (s1, s2, s3))
    lower = 1.0 / (27.0 * 16.0 * float(bound) ** 12)
    return SmallDivisorAudit(bound=bound, min_omega=best, lower_bound=lower,
                             passed=best >= lower, argmin=best_at)


def omega_product_float(n, k, m) -> float:
    """Float evaluation of the four-phase product times |k|^4 |m|^4 |n|^4.

    prod_{s1,s2} (s1 k3/|k| + s2 m3/|m| + n3/|n|) scaled by the norms is an
    integer; this returns the raw floating value, whose distance to the
    nearest integer measures the accumulated rounding.
    """
    n = _require_nonzero(n, "n")
    k = _require_nonzero(k, "k")
    m = _require_nonzero(m, "m")
    if tuple(a + b for a, b in zip(k, m)) != tuple(n):
        raise InvalidTriadError("omega_product_identity requires k + m = n")
    qk, qm, qn = norm_sq(k), norm_sq(m), norm_sq(n)
    a = k.n3 / math.sqrt(qk)
    b = m.n3 / math.sqrt(qm)
    c = n.n3 / math.sqrt(qn)
    prod = (a + b + c) * (a - b + c) * (-a + b + c) * (-a - b + c)
    return prod * float(qk) ** 2 * float(qm) ** 2 * float(qn) ** 2


def omega_product_identity(n, k, m) -> int:
    """Integer numerator of the product of the four phases sharing s3 = -1.

    The float evaluation must land within 1e-6 of an integer, which it does
    for desk-scale triads (the rounding error grows with |k|^4 |m|^4 |n|^4).
    """
    value = omega_product_float(n, k, m)
    nearest = round(value)
    if abs(value - nearest) > 1e-6:
        raise NumericalIdentityError(
            f"product numerator {value!r} is not within 1e-6 of an integer")
    return int(nearest)


# ---------------------------------------------------------------------------
# cached box-mode sets for the solver


def default_cache_dir() -> Path:
    env = os.environ.get("ROTRES_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "rotres"


def resonant_set_for_box(trunc: int, mode: str = "all",
                         cache_dir=None) -> ResonantSet:
    """Box-mode resonant set at a solver truncation, cached on disk."""
    mode = _normalize_mode(mode)
    cache = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    cache.mkdir(parents=True, exist_ok=True)
    path = cache / f"triads_box_N{int(trunc)}_{mode}_v1.npz"
    if path.exists():
        try:
            rs = ResonantSet.load(path)
            if rs.bound == int(trunc) and rs.mode == mode and rs.norm == "box":
                return rs
        except Exception:
            pass  # fall through and rebuild
    rs = enumerate_resonant_triads(int(trunc), mode, norm="box")
    rs.save(path)
    return rs
