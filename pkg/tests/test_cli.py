import json
from pathlib import Path

import numpy as np
import pytest

from rotres import cli
from rotres.errors import ConfigError
from rotres.fields import read_checkpoint
from rotres.reports import sha256_file, validate_manifest


def write_config(path: Path, **overrides) -> Path:
    base = {
        "system": "limit", "nu": 1.0, "alpha": 0.9, "omega": 0.0, "N": 4,
        "dt": 0.001, "T": 0.02, "seed": 7,
    }
    base.update(overrides)
    lines = ["# test configuration"]
    lines += [f"{key} = {value}" for key, value in base.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture()
def base_config(tmp_path, triad_cache):
    def make(name="run", **overrides):
        overrides.setdefault("out_dir", tmp_path / name)
        overrides.setdefault("cache_dir", triad_cache)
        return write_config(tmp_path / f"{name}.cfg", **overrides)

    return make


def load_manifest(out_dir: Path) -> dict:
    manifest = json.loads((Path(out_dir) / "manifest.json").read_text())
    validate_manifest(manifest)
    return manifest


def test_config_parsing_errors(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("system = limit\nbogus_key = 3\n")
    with pytest.raises(ConfigError, match="bogus_key"):
        cli.parse_config(cfg)
    cfg.write_text("system = limit\n")
    with pytest.raises(ConfigError, match="'nu'"):
        cli.parse_config(cfg)
    cfg.write_text("system = limit\nsystem = split\n")
    with pytest.raises(ConfigError, match="duplicate"):
        cli.parse_config(cfg)
    cfg.write_text("not a key value line\n")
    with pytest.raises(ConfigError, match="key = value"):
        cli.parse_config(cfg)


def test_config_value_errors_name_the_key(tmp_path, base_config, capsys):
    cfg = base_config("badnu", nu="fast")
    assert cli.main(["simulate", "--config", str(cfg)]) == 2
    assert "nu" in capsys.readouterr().err


def test_alpha_range_rejected(base_config, capsys):
    cfg = base_config("badalpha", alpha=0.7)
    assert cli.main(["simulate", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "alpha" in err and "3/4" in err


def test_simulate_t_zero_emits_checkpoint_only(tmp_path, base_config):
    out = tmp_path / "t0"
    cfg = base_config("t0", T=0, out_dir=out)
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["final.ckpt", "manifest.json"]
    manifest = load_manifest(out)
    assert manifest["command"] == "simulate"
    field, header = read_checkpoint(out / "final.ckpt")
    assert header["t"] == 0.0 and field.trunc == 4


def test_simulate_writes_energy_checkpoints_and_figure(tmp_path, base_config):
    out = tmp_path / "full"
    cfg = base_config("full", out_dir=out, checkpoint_interval=0.01)
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"energy.csv", "final.ckpt", "energy.png", "manifest.json"} <= names
    assert any(name.startswith("state_t") for name in names)
    header = (out / "energy.csv").read_text().splitlines()[0]
    assert header == "t,l2,h1,h1a,bar_h_h1,bar3_h1,osc_h1,diss_acc"
    manifest = load_manifest(out)
    listed = {entry["path"] for entry in manifest["outputs"]}
    assert "energy.csv" in listed and "final.ckpt" in listed


def test_simulate_determinism(tmp_path, base_config):
    out1, out2 = tmp_path / "d1", tmp_path / "d2"
    cfg1 = base_config("d1", out_dir=out1, plots=False)
    cfg2 = base_config("d2", out_dir=out2, plots=False)
    assert cli.main(["simulate", "--config", str(cfg1)]) == 0
    assert cli.main(["simulate", "--config", str(cfg2)]) == 0
    assert sha256_file(out1 / "energy.csv") == sha256_file(out2 / "energy.csv")
    assert sha256_file(out1 / "final.ckpt") == sha256_file(out2 / "final.ckpt")


def test_simulate_populates_triad_cache(tmp_path, base_config):
    cache = tmp_path / "fresh-cache"
    cfg = base_config("cachetest", cache_dir=cache, N=3)
    assert not cache.exists()
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    cached = list(cache.glob("triads_box_N3_all*.npz"))
    assert len(cached) == 1
    # second run proceeds from the cache
    assert cli.main(["simulate", "--config", str(cfg)]) == 0


def test_simulate_resume_from_checkpoint(tmp_path, base_config):
    out = tmp_path / "first"
    cfg = base_config("first", out_dir=out)
    assert cli.main(["simulate", "--config", str(cfg)]) == 0
    cfg2 = base_config("second", u0_checkpoint=out / "final.ckpt",
                       out_dir=tmp_path / "second")
    assert cli.main(["simulate", "--config", str(cfg2)]) == 0


def test_triads_command_and_shard_invariance(tmp_path):
    out1, out2 = tmp_path / "tri1", tmp_path / "tri2"
    assert cli.main(["triads", "-L", "3,5", "--out", str(out1), "--no-plots"]) == 0
    assert cli.main(["triads", "-L", "3,5", "--shards", "4", "--out", str(out2),
                     "--no-plots"]) == 0
    assert sha256_file(out1 / "triads_L5.csv") == sha256_file(out2 / "triads_L5.csv")
    assert sha256_file(out1 / "census.csv") == sha256_file(out2 / "census.csv")
    census = (out1 / "census.csv").read_text().splitlines()
    assert census[0] == "L,sup_count,argmax_n,total,slope"
    assert len(census) == 3
    assert census[2].split(",")[4] != ""  # slope present from the second bound on
    load_manifest(out1)


def test_triads_census_figure(tmp_path):
    out = tmp_path / "trifig"
    assert cli.main(["triads", "-L", "4", "--out", str(out)]) == 0
    assert (out / "census.png").exists()


def test_pell_command(tmp_path):
    out = tmp_path / "pell"
    assert cli.main(["pell", "--count", "10", "--out", str(out)]) == 0
    lines = (out / "pell.csv").read_text().splitlines()
    assert len(lines) == 11
    assert lines[1].startswith("1,1,-4,")
    report = json.loads((out / "pell_report.json").read_text())
    assert report["passed"] and report["invariant_sets_distinct"]
    load_manifest(out)


def test_verify_suites_exit_codes(tmp_path, triad_cache):
    out = tmp_path / "ver"
    args = ["verify", "--seed", "1", "--trials", "5", "--N", "4",
            "--cache-dir", str(triad_cache), "--out", str(out)]
    assert cli.main(args + ["--suite", "propagator"]) == 0
    assert cli.main(args + ["--suite", "cancellations"]) == 0
    assert cli.main(args + ["--suite", "pell"]) == 0
    report = json.loads((out / "verify_pell.json").read_text())
    assert report["passed"] and all(c["pass"] for c in report["checks"])
    assert cli.main(args + ["--suite", "nonsense"]) == 2


def test_converge_command(tmp_path, triad_cache):
    out = tmp_path / "conv"
    cfg = write_config(tmp_path / "conv.cfg", system="rotated", N=3, T=0.05,
                       dt=0.002, out_dir=out, cache_dir=triad_cache)
    assert cli.main(["converge", "--config", str(cfg), "--omegas", "5,25"]) == 0
    lines = (out / "converge.csv").read_text().splitlines()
    assert lines[0] == "omega,sup_h1_diff,dt,wallclock"
    assert len(lines) == 3
    assert (out / "converge.png").exists()
    load_manifest(out)
    assert cli.main(["converge", "--config", str(cfg), "--omegas", ""]) == 2


def test_converge_determinism_excluding_wallclock(tmp_path, triad_cache):
    # wallclock is inherently nondeterministic; all scientific columns match
    outs = []
    for name in ("ca", "cb"):
        out = tmp_path / name
        cfg = write_config(tmp_path / f"{name}.cfg", system="rotated", N=3,
                           T=0.05, dt=0.002, out_dir=out, cache_dir=triad_cache,
                           plots=False)
        assert cli.main(["converge", "--config", str(cfg), "--omegas", "5,25"]) == 0
        rows = [line.split(",")[:3] for line in (out / "converge.csv").read_text().splitlines()]
        outs.append(rows)
    assert outs[0] == outs[1]
