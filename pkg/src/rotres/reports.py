"""Report emission: delimited outputs, run manifests, and rendered figures.

CSV cells are written with repr() for floats (shortest round-trip form), so
identical data produces byte-identical files.  Every CLI command writes a
manifest listing each emitted artifact with its SHA-256; manifests validate
against MANIFEST_SCHEMA.
"""

from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

import jsonschema  # noqa: E402


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(c) for c in row) + "\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "argv", "config", "seed", "versions", "outputs",
                 "wallclock_s", "passed"],
    "additionalProperties": False,
    "properties": {
        "command": {"type": "string"},
        "argv": {"type": "array", "items": {"type": "string"}},
        "config": {"type": ["object", "null"]},
        "seed": {"type": ["integer", "null"]},
        "versions": {
            "type": "object",
            "required": ["python", "numpy", "rotres"],
            "properties": {
                "python": {"type": "string"},
                "numpy": {"type": "string"},
                "rotres": {"type": "string"},
            },
        },
        "outputs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["path", "sha256", "bytes"],
                "additionalProperties": False,
                "properties": {
                    "path": {"type": "string"},
                    "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                    "bytes": {"type": "integer", "minimum": 0},
                },
            },
        },
        "wallclock_s": {"type": "number", "minimum": 0},
        "passed": {"type": "boolean"},
    },
}


def validate_manifest(manifest: dict) -> None:
    jsonschema.validate(manifest, MANIFEST_SCHEMA)


def write_manifest(out_dir, command: str, argv, *, config=None, seed=None,
                   outputs=(), wallclock_s: float = 0.0, passed: bool = True) -> Path:
    from . import __version__

    out_dir = Path(out_dir)
    entries = []
    for p in outputs:
        p = Path(p)
        entries.append({
            "path": p.name if p.parent == out_dir else str(p),
            "sha256": sha256_file(p),
            "bytes": p.stat().st_size,
        })
    manifest = {
        "command": command,
        "argv": [str(a) for a in argv],
        "config": config,
        "seed": None if seed is None else int(seed),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "rotres": __version__,
        },
        "outputs": entries,
        "wallclock_s": float(wallclock_s),
        "passed": bool(passed),
    }
    validate_manifest(manifest)
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# figures


def render_energy_figure(log, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    t = log.times
    ax.semilogy(t, log.h1, label="H1")
    ax.semilogy(t, log.l2, label="L2")
    ax.semilogy(t, log.osc_h1, label="osc H1", ls="--")
    ax.semilogy(t, log.bar_h_h1, label="bar-h H1", ls="--")
    ax.semilogy(t, log.bar3_h1, label="bar-3 H1", ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("energy diagnostics")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_census_figure(census_rows, path) -> None:
    rows = [r for r in census_rows if r.sup_count > 0]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if rows:
        L = np.array([r.bound for r in rows], dtype=float)
        sup = np.array([r.sup_count for r in rows], dtype=float)
        ax.loglog(L, sup, "o-", label="sup per-mode count")
        ax.loglog(L, sup[0] * (L / L[0]), "--", label="slope 1")
        ax.loglog(L, sup[0] * (L / L[0]) ** 2, ":", label="slope 2")
    ax.set_xlabel("L")
    ax.set_ylabel("count")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("nontrivial triad census")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_convergence_figure(study_rows, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    w = np.array([r.omega for r in study_rows], dtype=float)
    d = np.array([r.sup_h1_diff for r in study_rows], dtype=float)
    ax.loglog(w, d, "o-")
    ax.set_xlabel("rotation rate")
    ax.set_ylabel("sup_t H1 difference")
    ax.set_title("rotated-frame solution vs resonant limit")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
