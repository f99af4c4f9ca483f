import numpy as np
import pytest

from rotres import helical
from rotres.errors import BlowupError, ConfigError, StabilityError
from rotres.fields import SpectralField
from rotres.operators import bar_field, hs_norm, osc_field, split_bar_osc
from rotres.solver import (EnergyLog, SolverConfig, convergence_study, run,
                           step_limit, step_rotated, step_split)


def test_config_validation():
    SolverConfig().validate()
    with pytest.raises(ConfigError):
        SolverConfig(alpha=0.7).validate()
    with pytest.raises(ConfigError):
        SolverConfig(alpha=1.2).validate()
    with pytest.raises(ConfigError):
        SolverConfig(nu=0.0).validate()
    with pytest.raises(ConfigError):
        SolverConfig(dt=0.2, t_final=0.1).validate()
    with pytest.raises(ConfigError):
        SolverConfig(system="weather").validate()
    with pytest.raises(ConfigError):
        SolverConfig(scheme="rk9").validate()


def test_effective_dt_rotation_cap():
    cfg = SolverConfig(system="rotated", omega=200.0, dt=1e-2)
    assert cfg.effective_dt() == pytest.approx(0.1 / 200.0)
    cfg = SolverConfig(system="limit", omega=200.0, dt=1e-2)
    assert cfg.effective_dt() == 1e-2
    cfg = SolverConfig(system="rotated", omega=200.0, dt=1e-2, enforce_rotation_dt=False)
    assert cfg.effective_dt() == 1e-2


def test_zero_field_stays_zero(rset4):
    z = SpectralField(4)
    for system in ("rotated", "original", "limit", "split"):
        cfg = SolverConfig(system=system, nu=1.0, alpha=0.9, omega=2.0, trunc=4,
                           dt=1e-2, t_final=0.05)
        res = run(cfg, z, rop=rset4)
        assert hs_norm(res.final, 1.0) == 0.0


def test_t_zero_returns_initial_state():
    u0 = helical.random_divfree_field(4, seed=1, target_h1=1.0)
    cfg = SolverConfig(system="rotated", trunc=4, dt=1e-3, t_final=0.0)
    res = run(cfg, u0)
    assert res.steps == 0
    assert np.array_equal(res.final.coeffs, u0.coeffs)


def test_beltrami_exact_solution():
    # single-shell curl eigenfield: nonlinearity vanishes, dissipation exact
    for alpha in (0.8, 1.0):
        u0 = helical.beltrami_field(4, (1, 1, 0), amplitude=0.7)
        cfg = SolverConfig(system="rotated", nu=1.0, alpha=alpha, omega=50.0,
                           trunc=4, dt=1e-3, t_final=1.0, enforce_rotation_dt=False)
        res = run(cfg, u0)
        exact = u0 * np.exp(-1.0 * 2.0**alpha)
        rel = hs_norm(res.final - exact, 1.0) / hs_norm(exact, 1.0)
        assert rel <= 1e-8


def test_frame_equivalence():
    # u(t) = L(Omega t) v(t) between the lab-frame and rotated-frame solvers
    u0 = helical.random_divfree_field(4, seed=3, target_h1=0.5)
    kw = dict(nu=0.5, alpha=0.9, omega=2.0, trunc=4, dt=1e-3, t_final=0.5,
              enforce_rotation_dt=False)
    rv = run(SolverConfig(system="rotated", **kw), u0)
    ru = run(SolverConfig(system="original", **kw), u0)
    mapped = helical.poincare_propagate(rv.final, 2.0 * 0.5)
    assert hs_norm(ru.final - mapped, 1.0) <= 1e-6


def test_taylor_green_exact_decay():
    # 2D shell |nh|^2 = 2 embedded in 3D: gradient nonlinearity, exact rate
    u0 = SpectralField(4)
    u0.set_mode((1, 1, 0), (0.25j, -0.25j, 0.0))
    u0.set_mode((-1, -1, 0), (-0.25j, 0.25j, 0.0))
    u0.set_mode((1, -1, 0), (-0.25j, -0.25j, 0.0))
    u0.set_mode((-1, 1, 0), (0.25j, 0.25j, 0.0))
    assert u0.is_divergence_free(1e-14) and u0.is_real_valued(1e-14)
    nu = 1.0
    cfg = SolverConfig(system="original", nu=nu, alpha=1.0, omega=0.0, trunc=4,
                       dt=1e-3, t_final=0.5)
    res = run(cfg, u0)
    exact = u0 * np.exp(-nu * 2.0 * 0.5)
    assert hs_norm(res.final - exact, 1.0) <= 1e-10 * hs_norm(exact, 1.0)


def test_energy_balance_discrete(rset4):
    # d/dt ||u||^2 = -2 nu ||u||_{H^alpha}^2 within scheme order
    u0 = helical.random_divfree_field(4, seed=8, target_h1=0.3)
    nu, alpha, dt = 0.8, 0.9, 5e-4
    cfg = SolverConfig(system="limit", nu=nu, alpha=alpha, trunc=4, dt=dt, t_final=0.02)
    res = run(cfg, u0, rop=rset4)
    l2 = res.log.l2
    times = res.log.times
    mid_alpha = []
    state = u0
    for i in range(len(times) - 1):
        deriv = (l2[i + 1] ** 2 - l2[i] ** 2) / (times[i + 1] - times[i])
        state_mid = state  # left endpoint is enough at this tolerance
        expected = -2 * nu * hs_norm(state_mid, alpha) ** 2
        mid_alpha.append(abs(deriv - expected))
        state = step_limit(state, cfg, rset4)
    assert max(mid_alpha) <= 5e-3 * max(1.0, l2[0] ** 2) / dt * dt  # O(dt) residual


def test_limit_l2_monotone(rset6):
    u0 = helical.random_divfree_field(6, seed=9, target_h1=0.5)
    cfg = SolverConfig(system="limit", nu=1.0, alpha=0.9, trunc=6, dt=1e-3, t_final=0.2)
    res = run(cfg, u0, rop=rset6)
    l2 = res.log.l2
    assert all(l2[i + 1] <= l2[i] + 1e-10 for i in range(len(l2) - 1))


def test_vertical_scalar_l2_nonincreasing(rset4):
    u0 = helical.random_divfree_field(4, seed=11, target_h1=0.5)
    cfg = SolverConfig(system="split", nu=0.6, alpha=0.8, trunc=4, dt=1e-3, t_final=0.1)
    res = run(cfg, split_bar_osc(u0) and u0, rop=rset4)
    state = split_bar_osc(u0)
    prev = float(np.sqrt(np.sum(np.abs(state.bar3) ** 2)))
    for _ in range(40):
        state = step_split(state, SolverConfig(system="split", nu=0.6, alpha=0.8,
                                               trunc=4, dt=1e-3, t_final=0.1), rset4)
        cur = float(np.sqrt(np.sum(np.abs(state.bar3) ** 2)))
        assert cur <= prev + 1e-12
        prev = cur
    assert res.steps > 0


def test_split_matches_unsplit(rset6):
    u0 = helical.random_divfree_field(6, seed=12, target_h1=0.5)
    kw = dict(nu=1.0, alpha=0.9, trunc=6, dt=2e-3, t_final=0.1)
    res_l = run(SolverConfig(system="limit", **kw), u0, rop=rset6)
    res_s = run(SolverConfig(system="split", **kw), u0, rop=rset6)
    assert hs_norm(res_l.final - res_s.final, 1.0) <= 5e-6


def test_pure_2d_data_evolves_as_2d_system(rset4):
    # data with no oscillating part stays vertically averaged in both forms
    u0 = bar_field(helical.random_divfree_field(4, seed=13, target_h1=0.5))
    kw = dict(nu=0.7, alpha=0.9, trunc=4, dt=1e-3, t_final=0.1)
    res_l = run(SolverConfig(system="limit", **kw), u0, rop=rset4)
    res_s = run(SolverConfig(system="split", **kw), u0, rop=rset4)
    assert hs_norm(osc_field(res_l.final), 0.0) <= 1e-13
    assert hs_norm(res_l.final - res_s.final, 1.0) <= 1e-10


def test_split_taylor_green_vorticity_decay(rset4):
    u0 = SpectralField(4)
    u0.set_mode((1, 1, 0), (0.1j, -0.1j, 0.0))
    u0.set_mode((-1, -1, 0), (-0.1j, 0.1j, 0.0))
    u0.set_mode((1, -1, 0), (-0.1j, -0.1j, 0.0))
    u0.set_mode((-1, 1, 0), (0.1j, 0.1j, 0.0))
    nu, alpha, dt = 1.0, 1.0, 1e-3
    cfg = SolverConfig(system="split", nu=nu, alpha=alpha, trunc=4, dt=dt, t_final=0.05)
    res = run(cfg, u0, rop=rset4)
    exact = u0 * np.exp(-nu * 2.0**alpha * 0.05)
    assert hs_norm(res.final - exact, 1.0) <= 1e-9


def test_small_data_exponential_decay():
    nu = 1.0
    u0 = helical.random_divfree_field(4, seed=12, target_h1=0.01 * nu)
    cfg = SolverConfig(system="original", nu=nu, alpha=0.8, omega=3.0, trunc=4,
                       dt=0.01, t_final=5.0, enforce_rotation_dt=False)
    res = run(cfg, u0)
    for t, h1 in zip(res.log.times, res.log.h1):
        assert h1 <= 1.05 * np.exp(-nu * t / 2) * 0.01 * nu + 1e-15


def test_rk2_self_convergence_order(rset4):
    u0 = helical.random_divfree_field(4, seed=5, target_h1=0.8)
    T = 0.25
    kw = dict(system="limit", nu=0.4, alpha=0.9, trunc=4, t_final=T)
    ref = run(SolverConfig(dt=T / 256, **kw), u0, rop=rset4).final
    errs = [hs_norm(run(SolverConfig(dt=T / n, **kw), u0, rop=rset4).final - ref, 1.0)
            for n in (16, 32)]
    order = np.log2(errs[0] / errs[1])
    assert order >= 1.9


def test_stability_guard_and_blowup_detection():
    big = helical.random_divfree_field(4, seed=6, target_h1=100.0)
    cfg = SolverConfig(system="rotated", nu=0.1, alpha=1.0, trunc=4, dt=0.05,
                       t_final=0.1)
    with pytest.raises(StabilityError):
        step_rotated(big, 0.0, cfg)
    bad = helical.random_divfree_field(4, seed=7, target_h1=0.1)
    bad.coeffs[0, 0, 0, 0] = np.nan
    with pytest.raises(BlowupError):
        run(SolverConfig(system="rotated", trunc=4, dt=1e-3, t_final=0.01), bad)


def test_run_monitors_and_samples(rset4):
    u0 = helical.random_divfree_field(4, seed=14, target_h1=0.4)
    cfg = SolverConfig(system="limit", nu=1.0, alpha=1.0, trunc=4, dt=1e-3,
                       t_final=0.02, log_every=5)
    res = run(cfg, u0, rop=rset4, sample_every=10)
    assert res.steps == 20
    assert [round(t, 9) for t, _ in res.samples] == [0.0, 0.01, 0.02]
    log_t = res.log.times
    assert log_t[0] == 0.0 and log_t[-1] == pytest.approx(0.02)
    assert all(log_t[i] < log_t[i + 1] for i in range(len(log_t) - 1))
    assert all(np.diff(res.log.diss_acc) >= 0)


def test_energy_log_rejects_nonincreasing_time():
    log = EnergyLog(alpha=0.9)
    f = helical.random_divfree_field(3, seed=1, target_h1=1.0)
    log.append(0.0, f, 1.0)
    with pytest.raises(ValueError):
        log.append(0.0, f, 1.0)


def test_convergence_study_structure(rset4):
    u0 = helical.random_divfree_field(4, seed=15, target_h1=0.8)
    cfg = SolverConfig(nu=0.5, alpha=0.9, trunc=4, dt=2e-3, t_final=0.1)
    rows = convergence_study(u0, 0.1, [5.0, 50.0], cfg, rop=rset4)
    assert [r.omega for r in rows] == [5.0, 50.0]
    for r in rows:
        assert np.isfinite(r.sup_h1_diff) and r.sup_h1_diff > 0
        assert r.dt <= 2e-3 + 1e-15
        assert r.wallclock > 0
    # faster rotation tracks the limit more closely on this data
    assert rows[1].sup_h1_diff < rows[0].sup_h1_diff
    with pytest.raises(ConfigError):
        convergence_study(u0, 0.1, [], cfg, rop=rset4)
