"""Time integration of the rotating, rotated-frame, resonant-limit and split systems.

All schemes are integrating-factor schemes: the linear flow (fractional
dissipation, and for the lab-frame system also the exact rotation
propagator) is applied through its exact per-mode multiplier, so stiffness
from nu |n|^(2 alpha) and from the rotation rate never enters the explicit
part.  "if-rk2" is Heun's method on the integrating-factor-transformed
variable; "if-euler" the explicit Euler analogue.  Steps are fixed and the
step count is derived deterministically from (T, dt), so runs are exactly
reproducible.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import BlowupError, ConfigError, StabilityError
from .fields import SpectralField, abs_grid, norm_sq_grid
from .helical import poincare_propagate
from .operators import (SplitField, advect, advect_scalar_2d, bilinear_full,
                        bilinear_resonant, hs_norm, osc_field, reassemble,
                        split_bar_osc)
from .resonance import ResonantSet, resonant_set_for_box

SYSTEMS = ("original", "rotated", "limit", "split")
SCHEMES = ("if-rk2", "if-euler")


@dataclass
class SolverConfig:
    system: str = "rotated"
    nu: float = 1.0
    alpha: float = 1.0
    omega: float = 0.0
    trunc: int = 8
    dt: float = 1e-3
    t_final: float = 1.0
    scheme: str = "if-rk2"
    dealias: bool = True
    seed: int = 0
    # oscillatory systems need dt <= cap / |Omega| to resolve the phases
    rotation_dt_cap: float = 0.1
    enforce_rotation_dt: bool = True
    # reject a step when ||u||_H1 * dt exceeds this explicit-advection guard
    stability_limit: float = 0.5
    log_every: int = 1

    def validate(self) -> None:
        if self.system not in SYSTEMS:
            raise ConfigError(f"system: must be one of {SYSTEMS}, got {self.system!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme: must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.nu > 0:
            raise ConfigError(f"nu: viscosity must be positive, got {self.nu}")
        if not (0.75 < self.alpha <= 1.0):
            raise ConfigError(f"alpha: dissipation exponent must lie in (3/4, 1], got {self.alpha}")
        if self.trunc < 1:
            raise ConfigError(f"N: truncation must be >= 1, got {self.trunc}")
        if not self.dt > 0:
            raise ConfigError(f"dt: time step must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ConfigError(f"T: final time must be >= 0, got {self.t_final}")
        if self.t_final > 0 and self.dt > self.t_final * (1 + 1e-12):
            raise ConfigError(f"dt: step {self.dt} exceeds final time {self.t_final}")

    def effective_dt(self) -> float:
        dt = self.dt
        if (self.system in ("original", "rotated") and self.omega != 0.0
                and self.enforce_rotation_dt):
            dt = min(dt, self.rotation_dt_cap / max(1.0, abs(self.omega)))
        return dt

    def step_count(self) -> int:
        if self.t_final == 0:
            return 0
        return max(1, int(round(self.t_final / self.effective_dt())))


@lru_cache(maxsize=32)
def _dissipation_multiplier(trunc: int, nu: float, alpha: float, dt: float) -> np.ndarray:
    lam = norm_sq_grid(trunc).astype(np.float64) ** alpha
    return np.exp(-nu * dt * lam)


@lru_cache(maxsize=32)
def _dissipation_multiplier_2d(trunc: int, nu: float, alpha: float, dt: float) -> np.ndarray:
    r = np.arange(-trunc, trunc + 1, dtype=np.float64)
    lam = (r[:, None] ** 2 + r[None, :] ** 2) ** alpha
    return np.exp(-nu * dt * lam)


def _guard_step(state: SpectralField, cfg: SolverConfig, dt: float) -> None:
    h1 = hs_norm(state, 1.0)
    if not np.isfinite(h1):
        raise BlowupError("non-finite state")
    if h1 * dt > cfg.stability_limit:
        raise StabilityError(
            f"step rejected: ||u||_H1 * dt = {h1 * dt:.3e} exceeds {cfg.stability_limit}")


def _dissipate(state: SpectralField, mult: np.ndarray) -> SpectralField:
    return SpectralField(state.trunc, state.coeffs * mult[np.newaxis])


def step_rotated(state: SpectralField, t: float, cfg: SolverConfig,
                 dt: float | None = None) -> SpectralField:
    """One integrating-factor step of the rotated-frame system."""
    dt = cfg.effective_dt() if dt is None else dt
    _guard_step(state, cfg, dt)
    mult = _dissipation_multiplier(state.trunc, cfg.nu, cfg.alpha, dt)

    def rhs(v: SpectralField, tau: float) -> SpectralField:
        return -1.0 * bilinear_full(cfg.omega * tau, v, v, dealias=cfg.dealias, check=False)

    k1 = rhs(state, t)
    if cfg.scheme == "if-euler":
        return _dissipate(state + dt * k1, mult)
    pred = _dissipate(state + dt * k1, mult)
    k2 = rhs(pred, t + dt)
    return _dissipate(state + (dt / 2) * k1, mult) + (dt / 2) * k2


def step_original(state: SpectralField, t: float, cfg: SolverConfig,
                  dt: float | None = None) -> SpectralField:
    """One step of the lab-frame system with the exact rotation semigroup."""
    dt = cfg.effective_dt() if dt is None else dt
    _guard_step(state, cfg, dt)
    mult = _dissipation_multiplier(state.trunc, cfg.nu, cfg.alpha, dt)

    def semigroup(u: SpectralField) -> SpectralField:
        return _dissipate(poincare_propagate(u, cfg.omega * dt, check=False), mult)

    def rhs(u: SpectralField) -> SpectralField:
        return -1.0 * advect(u, u, dealias=cfg.dealias)

    k1 = rhs(state)
    if cfg.scheme == "if-euler":
        return semigroup(state + dt * k1)
    pred = semigroup(state + dt * k1)
    k2 = rhs(pred)
    return semigroup(state + (dt / 2) * k1) + (dt / 2) * k2


def step_limit(state: SpectralField, cfg: SolverConfig, rop,
               dt: float | None = None) -> SpectralField:
    """One step of the autonomous resonant-limit system."""
    if rop is None:
        raise ConfigError("resonant set: the limit system needs a precomputed triad table")
    dt = cfg.dt if dt is None else dt
    _guard_step(state, cfg, dt)
    mult = _dissipation_multiplier(state.trunc, cfg.nu, cfg.alpha, dt)

    def rhs(u: SpectralField) -> SpectralField:
        return -1.0 * bilinear_resonant(u, u, rop, check=False)

    k1 = rhs(state)
    if cfg.scheme == "if-euler":
        return _dissipate(state + dt * k1, mult)
    pred = _dissipate(state + dt * k1, mult)
    k2 = rhs(pred)
    return _dissipate(state + (dt / 2) * k1, mult) + (dt / 2) * k2


# ---------------------------------------------------------------------------
# split formulation: 2D vorticity + advected vertical scalar + oscillations


def _curl_2d(bar_h: np.ndarray, trunc: int) -> np.ndarray:
    r = np.arange(-trunc, trunc + 1, dtype=np.float64)
    n1, n2 = r[:, None], r[None, :]
    return 1j * (n1 * bar_h[1] - n2 * bar_h[0])


def _biot_savart_2d(zeta: np.ndarray, trunc: int) -> np.ndarray:
    r = np.arange(-trunc, trunc + 1, dtype=np.float64)
    n1, n2 = r[:, None], r[None, :]
    nh_sq = n1 * n1 + n2 * n2
    nh_sq[trunc, trunc] = 1.0
    u1 = 1j * n2 * zeta / nh_sq
    u2 = -1j * n1 * zeta / nh_sq
    u1[trunc, trunc] = 0.0
    u2[trunc, trunc] = 0.0
    return np.stack([u1, u2])


@dataclass
class _SplitState:
    zeta: np.ndarray  # 2D vorticity of the vertical average
    bar3: np.ndarray
    osc: SpectralField


def _split_rhs(s: _SplitState, cfg: SolverConfig, rop) -> _SplitState:
    trunc = s.osc.trunc
    vel = _biot_savart_2d(s.zeta, trunc)
    dzeta = -advect_scalar_2d(vel, s.zeta, trunc, dealias=cfg.dealias)
    dbar3 = -advect_scalar_2d(vel, s.bar3, trunc, dealias=cfg.dealias)
    bar3d = SpectralField(trunc)
    bar3d.coeffs[0, :, :, trunc] = vel[0]
    bar3d.coeffs[1, :, :, trunc] = vel[1]
    bar3d.coeffs[2, :, :, trunc] = s.bar3
    coupling = (bilinear_resonant(bar3d, s.osc, rop, check=False)
                + bilinear_resonant(s.osc, bar3d, rop, check=False)
                + bilinear_resonant(s.osc, s.osc, rop, check=False))
    dosc = -1.0 * osc_field(coupling)  # couplings are purely oscillatory up to roundoff
    return _SplitState(dzeta, dbar3, dosc)


def _split_dissipate(s: _SplitState, m2: np.ndarray, m3: np.ndarray) -> _SplitState:
    return _SplitState(s.zeta * m2, s.bar3 * m2,
                       SpectralField(s.osc.trunc, s.osc.coeffs * m3[np.newaxis]))


def _split_axpy(s: _SplitState, a: float, d: _SplitState) -> _SplitState:
    return _SplitState(s.zeta + a * d.zeta, s.bar3 + a * d.bar3, s.osc + a * d.osc)


def step_split(state: SplitField, cfg: SolverConfig, rop,
               dt: float | None = None) -> SplitField:
    """One step of the split system, 2D part advanced in vorticity form."""
    if rop is None:
        raise ConfigError("resonant set: the split system needs a precomputed triad table")
    dt = cfg.dt if dt is None else dt
    trunc = state.trunc
    _guard_step(reassemble(state), cfg, dt)
    m2 = _dissipation_multiplier_2d(trunc, cfg.nu, cfg.alpha, dt)
    m3 = _dissipation_multiplier(trunc, cfg.nu, cfg.alpha, dt)

    s0 = _SplitState(_curl_2d(state.bar_h, trunc), state.bar3.copy(), state.osc)
    k1 = _split_rhs(s0, cfg, rop)
    if cfg.scheme == "if-euler":
        s1 = _split_dissipate(_split_axpy(s0, dt, k1), m2, m3)
    else:
        pred = _split_dissipate(_split_axpy(s0, dt, k1), m2, m3)
        k2 = _split_rhs(pred, cfg, rop)
        s1 = _split_axpy(_split_dissipate(_split_axpy(s0, dt / 2, k1), m2, m3), dt / 2, k2)
    vel = _biot_savart_2d(s1.zeta, trunc)
    return SplitField(trunc, vel, s1.bar3, s1.osc)


# ---------------------------------------------------------------------------
# trajectory driver


@dataclass
class EnergyLog:
    """Time series of Sobolev diagnostics along a trajectory."""

    alpha: float
    times: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    h1: list[float] = field(default_factory=list)
    h1a: list[float] = field(default_factory=list)
    bar_h_h1: list[float] = field(default_factory=list)
    bar3_h1: list[float] = field(default_factory=list)
    osc_h1: list[float] = field(default_factory=list)
    diss_acc: list[float] = field(default_factory=list)

    COLUMNS = ("t", "l2", "h1", "h1a", "bar_h_h1", "bar3_h1", "osc_h1", "diss_acc")

    def append(self, t: float, u: SpectralField, nu: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("log times must be strictly increasing")
        sf = split_bar_osc(u)
        trunc = u.trunc
        r = np.arange(-trunc, trunc + 1, dtype=np.float64)
        wh = r[:, None] ** 2 + r[None, :] ** 2
        h1a_now = hs_norm(u, 1.0 + self.alpha)
        # trapezoid accumulation of nu * int ||u||_{H^{1+alpha}}^2 dt
        if self.times:
            dt = t - self.times[-1]
            acc = self.diss_acc[-1] + nu * dt * 0.5 * (self.h1a[-1] ** 2 + h1a_now**2)
        else:
            acc = 0.0
        self.times.append(t)
        self.l2.append(hs_norm(u, 0.0))
        self.h1.append(hs_norm(u, 1.0))
        self.h1a.append(h1a_now)
        self.bar_h_h1.append(float(np.sqrt(np.sum(wh * np.abs(sf.bar_h) ** 2))))
        self.bar3_h1.append(float(np.sqrt(np.sum(wh * np.abs(sf.bar3) ** 2))))
        self.osc_h1.append(hs_norm(sf.osc, 1.0))
        self.diss_acc.append(acc)

    def rows(self):
        for i in range(len(self.times)):
            yield (self.times[i], self.l2[i], self.h1[i], self.h1a[i],
                   self.bar_h_h1[i], self.bar3_h1[i], self.osc_h1[i], self.diss_acc[i])


@dataclass
class RunResult:
    final: SpectralField
    log: EnergyLog
    samples: list[tuple[float, SpectralField]]
    steps: int
    dt: float


def run(cfg: SolverConfig, u0: SpectralField, *, rop: ResonantSet | None = None,
        sample_every: int = 0, drift_tolerance: float = 1e-10) -> RunResult:
    """Fixed-step integration to T with energy logging and drift monitoring.

    Divergence-free and (for real data) Hermitian-symmetry drift are checked
    at every logging row.  sample_every > 0 additionally collects state
    snapshots every that many steps (plus the final state).
    """
    cfg.validate()
    if not np.isfinite(u0.coeffs).all():
        raise BlowupError("u0: initial field has non-finite coefficients")
    u0.require_divergence_free()
    if not u0.is_mean_zero():
        raise ConfigError("u0: initial field must be mean-zero")
    needs_triads = cfg.system in ("limit", "split")
    if needs_triads and rop is None:
        rop = resonant_set_for_box(cfg.trunc)

    # refine dt downward so that an integer number of steps lands exactly on T
    dt_cap = cfg.effective_dt() if cfg.system in ("original", "rotated") else cfg.dt
    if cfg.t_final == 0:
        steps, dt = 0, dt_cap
    else:
        steps = max(1, int(np.ceil(cfg.t_final / dt_cap - 1e-9)))
        dt = cfg.t_final / steps
    track_real = u0.is_real_valued()

    log = EnergyLog(alpha=cfg.alpha)
    samples: list[tuple[float, SpectralField]] = []
    split_state = split_bar_osc(u0) if cfg.system == "split" else None
    state = u0.copy()

    def assembled() -> SpectralField:
        return reassemble(split_state) if cfg.system == "split" else state

    def monitor(t: float) -> None:
        u = assembled()
        if not np.isfinite(u.coeffs).all():
            raise BlowupError(f"non-finite coefficients at t = {t:.6g}")
        log.append(t, u, cfg.nu)
        if u.divergence_defect() > drift_tolerance:
            raise BlowupError(f"divergence drift {u.divergence_defect():.3e} at t = {t:.6g}")
        if track_real and u.hermitian_defect() > drift_tolerance:
            raise BlowupError(f"Hermitian drift {u.hermitian_defect():.3e} at t = {t:.6g}")

    monitor(0.0)
    if sample_every > 0:
        samples.append((0.0, assembled().copy()))
    for i in range(steps):
        t = i * dt
        if cfg.system == "rotated":
            state = step_rotated(state, t, cfg, dt)
        elif cfg.system == "original":
            state = step_original(state, t, cfg, dt)
        elif cfg.system == "limit":
            state = step_limit(state, cfg, rop, dt)
        else:
            split_state = step_split(split_state, cfg, rop, dt)
        t_next = (i + 1) * dt
        if (i + 1) % max(1, cfg.log_every) == 0 or i + 1 == steps:
            monitor(t_next)
        if sample_every > 0 and ((i + 1) % sample_every == 0 or i + 1 == steps):
            samples.append((t_next, assembled().copy()))
    return RunResult(final=assembled(), log=log, samples=samples, steps=steps, dt=dt)


# ---------------------------------------------------------------------------
# rotation-rate convergence study


@dataclass
class StudyRow:
    omega: float
    sup_h1_diff: float
    dt: float
    wallclock: float


def convergence_study(u0: SpectralField, t_final: float, omega_list,
                      cfg: SolverConfig, *, rop: ResonantSet | None = None,
                      samples: int = 10) -> list[StudyRow]:
    """sup over checkpoint times of ||v - U||_H1 for each rotation rate.

    The resonant-limit solution U is integrated once; for each rate the
    rotated-frame solution v is integrated with a step refined to resolve
    the rotation phases (dt proportional to 1/omega), both sampled on the
    same time grid.
    """
    omega_list = [float(w) for w in omega_list]
    if not omega_list:
        raise ConfigError("omega list: at least one rotation rate is required")
    if rop is None:
        rop = resonant_set_for_box(cfg.trunc)

    def aligned(cfg_sys: SolverConfig) -> tuple[int, int]:
        # step count divisible by the sample count so grids coincide
        dt_eff = cfg_sys.effective_dt()
        n = max(samples, int(np.ceil(t_final / dt_eff - 1e-12)))
        n = int(np.ceil(n / samples)) * samples
        return n, n // samples

    cfg_u = replace(cfg, system="limit", omega=0.0, t_final=t_final)
    n_u, every_u = aligned(cfg_u)
    cfg_u = replace(cfg_u, dt=t_final / n_u)
    res_u = run(cfg_u, u0, rop=rop, sample_every=every_u)
    u_samples = dict((round(t, 12), f) for t, f in res_u.samples)

    rows: list[StudyRow] = []
    for w in omega_list:
        cfg_v = replace(cfg, system="rotated", omega=w, t_final=t_final)
        n_v, every_v = aligned(cfg_v)
        cfg_v = replace(cfg_v, dt=t_final / n_v, enforce_rotation_dt=False)
        start = _time.perf_counter()
        res_v = run(cfg_v, u0, sample_every=every_v)
        elapsed = _time.perf_counter() - start
        sup = 0.0
        for t, v in res_v.samples:
            ut = u_samples.get(round(t, 12))
            if ut is not None:
                sup = max(sup, hs_norm(v - ut, 1.0))
        rows.append(StudyRow(omega=w, sup_h1_diff=sup, dt=cfg_v.dt, wallclock=elapsed))
    return rows
