"""Command-line entry points tying the toolkit together.

Commands: simulate, triads, pell, verify, converge.  Configuration is a
plain key-value text file (one `key = value` per line, `#` comments); all
randomness flows from the single seed it contains.  Every command writes a
manifest.json listing its artifacts with content hashes, and exit code 0
means every assertion of the command passed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import reports
from .errors import ConfigError, RotresError
from .fields import read_checkpoint, write_checkpoint
from .helical import poincare_propagate, poincare_propagate_alt, random_divfree_field
from .operators import (bilinear_resonant, bilinear_time_average, hs_norm,
                        trilinear_ratio, verify_cancellations)
from .pell import curve_invariants_distinct, pell_triads, records_to_csv, verify_record
from .resonance import (census_overall_slope, counting_census,
                        enumerate_resonant_triads, min_omega_audit,
                        omega_product_float, resonant_set_for_box)
from .solver import SolverConfig, convergence_study, run

CONFIG_TYPES = {
    "system": str,
    "nu": float,
    "alpha": float,
    "omega": float,
    "N": int,
    "dt": float,
    "T": float,
    "seed": int,
    "out_dir": str,
    "scheme": str,
    "dealias": bool,
    "u0_h1": float,
    "u0_decay": float,
    "u0_checkpoint": str,
    "checkpoint_interval": float,
    "log_every": int,
    "plots": bool,
    "cache_dir": str,
}
CONFIG_REQUIRED = ("system", "nu", "alpha", "omega", "N", "dt", "T", "seed", "out_dir")
CONFIG_DEFAULTS = {
    "scheme": "if-rk2",
    "dealias": True,
    "u0_h1": 1.0,
    "u0_decay": 2.0,
    "u0_checkpoint": "",
    "checkpoint_interval": 0.0,
    "log_every": 1,
    "plots": True,
    "cache_dir": "",
}


def _parse_bool(raw: str, key: str) -> bool:
    lower = raw.strip().lower()
    if lower in ("true", "yes", "1", "on"):
        return True
    if lower in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def parse_config(path) -> dict:
    """Parse and type-check a key-value configuration file."""
    values: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config file: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in CONFIG_TYPES:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        if key in values:
            raise ConfigError(f"duplicate config key {key!r} (line {lineno})")
        typ = CONFIG_TYPES[key]
        try:
            values[key] = _parse_bool(raw, key) if typ is bool else typ(raw)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{key}: invalid value {raw!r} ({exc})") from exc
    for key in CONFIG_REQUIRED:
        if key not in values:
            raise ConfigError(f"missing config key {key!r}")
    for key, default in CONFIG_DEFAULTS.items():
        values.setdefault(key, default)
    return values


def _solver_config(conf: dict) -> SolverConfig:
    cfg = SolverConfig(system=conf["system"], nu=conf["nu"], alpha=conf["alpha"],
                       omega=conf["omega"], trunc=conf["N"], dt=conf["dt"],
                       t_final=conf["T"], scheme=conf["scheme"], dealias=conf["dealias"],
                       seed=conf["seed"], log_every=conf["log_every"])
    cfg.validate()
    return cfg


def _initial_field(conf: dict):
    if conf["u0_checkpoint"]:
        field, _header = read_checkpoint(conf["u0_checkpoint"])
        if field.trunc != conf["N"]:
            raise ConfigError(
                f"u0_checkpoint: truncation {field.trunc} does not match N = {conf['N']}")
        return field
    return random_divfree_field(conf["N"], conf["seed"], decay=conf["u0_decay"],
                                target_h1=conf["u0_h1"])


def _cache_dir(conf: dict):
    return conf["cache_dir"] or None


def _out_dir(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    conf = parse_config(args.config)
    if args.out:
        conf["out_dir"] = args.out
    cfg = _solver_config(conf)
    out = _out_dir(conf["out_dir"])
    u0 = _initial_field(conf)

    rop = None
    if cfg.system in ("limit", "split"):
        rop = resonant_set_for_box(cfg.trunc, cache_dir=_cache_dir(conf))

    outputs = []
    if cfg.t_final == 0:
        ckpt = out / "final.ckpt"
        write_checkpoint(ckpt, u0, nu=cfg.nu, alpha=cfg.alpha, omega=cfg.omega, t=0.0)
        outputs.append(ckpt)
    else:
        sample_every = 0
        if conf["checkpoint_interval"] > 0:
            sample_every = max(1, int(round(conf["checkpoint_interval"] / cfg.dt)))
        result = run(cfg, u0, rop=rop, sample_every=sample_every)
        energy = out / "energy.csv"
        reports.write_csv(energy, list(result.log.COLUMNS), result.log.rows())
        outputs.append(energy)
        for t, state in result.samples[:-1] if result.samples else []:
            ckpt = out / f"state_t{t:.6f}.ckpt"
            write_checkpoint(ckpt, state, nu=cfg.nu, alpha=cfg.alpha, omega=cfg.omega, t=t)
            outputs.append(ckpt)
        ckpt = out / "final.ckpt"
        write_checkpoint(ckpt, result.final, nu=cfg.nu, alpha=cfg.alpha,
                         omega=cfg.omega, t=cfg.t_final)
        outputs.append(ckpt)
        if conf["plots"]:
            fig = out / "energy.png"
            reports.render_energy_figure(result.log, fig)
            outputs.append(fig)
    reports.write_manifest(out, "simulate", sys.argv[1:], config=conf, seed=conf["seed"],
                           outputs=outputs, wallclock_s=time.perf_counter() - started)
    return 0


# ---------------------------------------------------------------------------
# triads


def cmd_triads(args) -> int:
    started = time.perf_counter()
    bounds = sorted({int(tok) for tok in args.bound.split(",") if tok.strip()})
    if not bounds:
        raise ConfigError("bound: at least one enumeration bound is required")
    out = _out_dir(args.out)
    rset = enumerate_resonant_triads(bounds[-1], args.mode, norm=args.norm,
                                     shards=args.shards)
    census = counting_census(bounds, norm=args.norm, base_set=(
        rset if args.mode in ("nontrivial", "nontrivial-only") else None))
    outputs = []
    triads_csv = out / f"triads_L{bounds[-1]}.csv"
    rset.to_csv(triads_csv)
    outputs.append(triads_csv)
    census_csv = out / "census.csv"
    reports.write_csv(
        census_csv,
        ["L", "sup_count", "argmax_n", "total", "slope"],
        [(r.bound, r.sup_count,
          "" if r.argmax_n is None else ";".join(str(c) for c in r.argmax_n),
          r.total, r.slope) for r in census],
    )
    outputs.append(census_csv)
    if args.plots:
        fig = out / "census.png"
        reports.render_census_figure(census, fig)
        outputs.append(fig)
    passed = all(r.bound_ok for r in census)
    slope = census_overall_slope(census)
    if slope is not None:
        passed = passed and slope <= 2.0
    print(f"rows={len(rset)} hash={rset.content_hash()[:16]} overall_slope={slope}")
    reports.write_manifest(out, "triads", sys.argv[1:], seed=args.seed,
                           outputs=outputs, wallclock_s=time.perf_counter() - started,
                           passed=passed)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# pell


def cmd_pell(args) -> int:
    started = time.perf_counter()
    out = _out_dir(args.out)
    records = pell_triads(args.count)
    checks = [verify_record(r) for r in records]
    distinct = curve_invariants_distinct(records)
    passed = distinct and all(all(c.values()) for c in checks)
    csv_path = out / "pell.csv"
    records_to_csv(records, csv_path)
    report = {
        "count": args.count,
        "all_exact_checks": all(all(c.values()) for c in checks),
        "invariant_sets_distinct": distinct,
        "passed": passed,
    }
    report_path = out / "pell_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    reports.write_manifest(out, "pell", sys.argv[1:], outputs=[csv_path, report_path],
                           wallclock_s=time.perf_counter() - started, passed=passed)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# verify


def _suite_cancellations(seed: int, trials: int, trunc: int, cache_dir) -> list[dict]:
    rset = resonant_set_for_box(trunc, cache_dir=cache_dir)
    worst: dict[str, float] = {}
    for i in range(trials):
        a = random_divfree_field(trunc, seed + 2 * i, target_h1=1.0)
        b = random_divfree_field(trunc, seed + 2 * i + 1, target_h1=1.0)
        rep = verify_cancellations(a, b, 1.0, rset)
        for name, value in rep.values.items():
            rel = value / max(rep.scales[name], 1e-300)
            worst[name] = max(worst.get(name, 0.0), rel)
    return [{"lemma": name, "trials": trials, "max_abs": worst[name],
             "tolerance": 1e-11, "pass": worst[name] <= 1e-11} for name in sorted(worst)]


def _suite_small_divisor(seed: int, trials: int, trunc: int, cache_dir) -> list[dict]:
    del cache_dir
    checks = []
    for bound in sorted({4, min(8, max(4, trunc))}):
        audit = min_omega_audit(bound)
        checks.append({"lemma": f"phase_lower_bound_N{bound}", "trials": 1,
                       "max_abs": audit.min_omega, "tolerance": audit.lower_bound,
                       "pass": audit.passed})
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    while count < trials:
        k = tuple(int(c) for c in rng.integers(-2, 3, size=3))
        m = tuple(int(c) for c in rng.integers(-2, 3, size=3))
        n = tuple(a + b for a, b in zip(k, m))
        if k == (0, 0, 0) or m == (0, 0, 0) or n == (0, 0, 0):
            continue
        count += 1
        value = omega_product_float(n, k, m)
        worst = max(worst, abs(value - round(value)))
    checks.append({"lemma": "phase_product_integrality", "trials": trials,
                   "max_abs": worst, "tolerance": 1e-6, "pass": worst <= 1e-6})
    return checks


def _suite_pell(seed: int, trials: int, trunc: int, cache_dir) -> list[dict]:
    del seed, trunc, cache_dir
    count = max(10, trials)
    records = pell_triads(count)
    ok = all(all(verify_record(r).values()) for r in records)
    distinct = curve_invariants_distinct(records)
    return [
        {"lemma": "pell_family_exact", "trials": count, "max_abs": 0.0,
         "tolerance": 0.0, "pass": ok},
        {"lemma": "pell_curves_distinct", "trials": count, "max_abs": 0.0,
         "tolerance": 0.0, "pass": distinct},
    ]


def _suite_trilinear(seed: int, trials: int, trunc: int, cache_dir) -> list[dict]:
    rset = resonant_set_for_box(trunc, cache_dir=cache_dir)
    ratios = []
    for i in range(trials):
        a = random_divfree_field(trunc, seed + i, target_h1=1.0)
        r = trilinear_ratio(a, 0.1, rset)
        if r is not None:
            ratios.append(r)
    worst = max(ratios) if ratios else 0.0
    return [{"lemma": "trilinear_ratio_census", "trials": trials, "max_abs": worst,
             "tolerance": float("inf"), "pass": bool(np.isfinite(worst))}]


def _suite_propagator(seed: int, trials: int, trunc: int, cache_dir) -> list[dict]:
    del cache_dir
    rng = np.random.default_rng(seed)
    worst_alt = worst_unit = worst_group = 0.0
    for i in range(trials):
        f = random_divfree_field(trunc, seed + i, target_h1=1.0)
        th1, th2 = rng.uniform(0.0, 10.0, size=2)
        a = poincare_propagate(f, th1)
        b = poincare_propagate_alt(f, th1)
        worst_alt = max(worst_alt, hs_norm(a - b, 0.0))
        worst_unit = max(worst_unit, abs(hs_norm(a, 1.0) - hs_norm(f, 1.0)))
        ab = poincare_propagate(a, th2, check=False)
        worst_group = max(worst_group, hs_norm(ab - poincare_propagate(f, th1 + th2), 0.0))
    return [
        {"lemma": "propagator_representations_agree", "trials": trials,
         "max_abs": worst_alt, "tolerance": 1e-13, "pass": worst_alt <= 1e-13},
        {"lemma": "propagator_unitary_h1", "trials": trials,
         "max_abs": worst_unit, "tolerance": 1e-13, "pass": worst_unit <= 1e-13},
        {"lemma": "propagator_group_law", "trials": trials,
         "max_abs": worst_group, "tolerance": 1e-12, "pass": worst_group <= 1e-12},
    ]


VERIFY_SUITES = {
    "cancellations": _suite_cancellations,
    "small-divisor": _suite_small_divisor,
    "pell": _suite_pell,
    "trilinear": _suite_trilinear,
    "propagator": _suite_propagator,
}


def cmd_verify(args) -> int:
    started = time.perf_counter()
    if args.suite not in VERIFY_SUITES:
        raise ConfigError(
            f"suite: unknown suite {args.suite!r}; choose from {sorted(VERIFY_SUITES)}")
    out = _out_dir(args.out)
    checks = VERIFY_SUITES[args.suite](args.seed, args.trials, args.N,
                                       args.cache_dir or None)
    passed = all(c["pass"] for c in checks)
    report = {"suite": args.suite, "seed": args.seed, "trials": args.trials,
              "N": args.N, "checks": checks, "passed": passed}
    report_path = out / f"verify_{args.suite}.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for c in checks:
        print(f"{c['lemma']}: max_abs={c['max_abs']:.3e} "
              f"tol={c['tolerance']:.3e} {'pass' if c['pass'] else 'FAIL'}")
    reports.write_manifest(out, "verify", sys.argv[1:], seed=args.seed,
                           outputs=[report_path],
                           wallclock_s=time.perf_counter() - started, passed=passed)
    return 0 if passed else 1


# ---------------------------------------------------------------------------
# converge


def cmd_converge(args) -> int:
    started = time.perf_counter()
    conf = parse_config(args.config)
    if args.out:
        conf["out_dir"] = args.out
    omegas = [float(tok) for tok in args.omegas.split(",") if tok.strip()]
    if not omegas:
        raise ConfigError("omegas: at least one rotation rate is required")
    cfg = _solver_config(conf)
    out = _out_dir(conf["out_dir"])
    u0 = _initial_field(conf)
    rop = resonant_set_for_box(cfg.trunc, cache_dir=_cache_dir(conf))
    rows = convergence_study(u0, cfg.t_final, omegas, cfg, rop=rop)
    csv_path = out / "converge.csv"
    reports.write_csv(csv_path, ["omega", "sup_h1_diff", "dt", "wallclock"],
                      [(r.omega, r.sup_h1_diff, r.dt, r.wallclock) for r in rows])
    outputs = [csv_path]
    if conf["plots"]:
        fig = out / "converge.png"
        reports.render_convergence_figure(rows, fig)
        outputs.append(fig)
    reports.write_manifest(out, "converge", sys.argv[1:], config=conf, seed=conf["seed"],
                           outputs=outputs, wallclock_s=time.perf_counter() - started)
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rotres", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate one of the four systems")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", default=None, help="override out_dir from the config")
    p_sim.set_defaults(func=cmd_simulate)

    p_tri = sub.add_parser("triads", help="enumerate resonant triads and run the census")
    p_tri.add_argument("--bound", "-L", dest="bound", required=True,
                       help="comma-separated enumeration bounds, e.g. 8,16,32")
    p_tri.add_argument("--mode", default="nontrivial",
                       choices=["nontrivial", "nontrivial-only", "all", "all-omega-zero"])
    p_tri.add_argument("--norm", default="euclidean", choices=["euclidean", "box"])
    p_tri.add_argument("--shards", type=int, default=1)
    p_tri.add_argument("--seed", type=int, default=0)
    p_tri.add_argument("--out", required=True)
    p_tri.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True)
    p_tri.set_defaults(func=cmd_triads)

    p_pell = sub.add_parser("pell", help="emit and verify the explicit resonant family")
    p_pell.add_argument("--count", type=int, default=10)
    p_pell.add_argument("--out", required=True)
    p_pell.set_defaults(func=cmd_pell)

    p_ver = sub.add_parser("verify", help="run a structural verification suite")
    p_ver.add_argument("--suite", required=True)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--trials", type=int, default=50)
    p_ver.add_argument("--N", type=int, default=8)
    p_ver.add_argument("--cache-dir", default="")
    p_ver.add_argument("--out", required=True)
    p_ver.set_defaults(func=cmd_verify)

    p_con = sub.add_parser("converge", help="rotation-rate convergence study")
    p_con.add_argument("--config", required=True)
    p_con.add_argument("--omegas", required=True,
                       help="comma-separated rotation rates, e.g. 10,100,1000")
    p_con.add_argument("--out", default=None, help="override out_dir from the config")
    p_con.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RotresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
