"""Command-line front end.

    anyonjj --config run.json [--out DIR] [--threads K] [--no-strict]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 capacity error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
import traceback
from contextlib import nullcontext
from dataclasses import asdict
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .algebra import check_algebra
from .config import RunConfig, parse_config
from .dynamics import run_quench
from .errors import AnyonJJError
from .fock_basis import enumerate_sector
from .groundstate import gap_scan, lowest_eigenpairs, write_gap_table
from .hamiltonian import build_hamiltonian
from .meanfield import (MeanFieldParams, MeanFieldState, fixed_points, integrate_mft,
                        phase_portrait)
from .observables import correlations, density, write_correlations, write_density
from .tables import sha256_file, write_csv


def _run_ground(cfg: RunConfig, out: Path, threads: int) -> tuple[list[Path], dict]:
    spec = cfg.lattice
    basis = enumerate_sector(spec.L, spec.N)
    H = build_hamiltonian(spec, basis)
    k = min(cfg.ground.k, basis.dim)
    sl = lowest_eigenpairs(H, k, method=cfg.ground.method)
    files = [
        write_csv(out / "spectrum.csv", ["level", "energy", "residual"],
                  ((i, e, r) for i, (e, r) in enumerate(zip(sl.energies, sl.residuals)))),
        write_density(density(sl.ground), out / "density.csv"),
        write_correlations(correlations(sl.ground), out / "correlations.csv"),
    ]
    summary = {"dim": basis.dim, "method": sl.method, "E0": float(sl.energies[0]),
               "degenerate_ground_state": bool(sl.degenerate)}
    if k >= 2:
        summary["gap"] = sl.gap
    return files, summary


def _run_gap_scan(cfg: RunConfig, out: Path, threads: int) -> tuple[list[Path], dict]:
    g = cfg.gap_scan
    rows = gap_scan(cfg.lattice, g.J_values, g.theta_values, workers=threads, method=g.method)
    path = write_gap_table(rows, out / "gaps.csv")
    return [path], {"points": len(rows)}


def _run_quench(cfg: RunConfig, out: Path, threads: int) -> tuple[list[Path], dict]:
    spec = cfg.lattice
    series = run_quench(spec, cfg.imprint, cfg.evolution)
    info = series.metadata
    files = [series.write_csv(out / "timeseries.csv"),
             series.write_metadata(out / "timeseries.meta.json")]
    if spec.L == 2 and all(t == 0 for t in spec.theta):
        # exact two-site z(t) next to the mean-field flow started at (phi, 0)
        p = MeanFieldParams(J=spec.J[0], U=spec.U[0], N=spec.N)
        dt = cfg.evolution.dt
        sub = max(1, int(round(dt / 1e-3)))
        traj = integrate_mft(MeanFieldState(cfg.imprint.phi, 0.0), p, series.times[-1],
                             dt / sub, record_every=sub)
        n = min(len(traj.t), len(series.times))
        files.append(write_csv(out / "mft_comparison.csv", ["t", "z_exact", "z_mf", "phi_mf"],
                               zip(series.times[:n], series.z[:n], traj.z[:n], traj.phi[:n])))
    summary = {
        "dim": info["dim"], "method": series.metadata["method"],
        "max_abs_z": float(np.max(np.abs(series.z))),
        "max_norm_drift": float(np.max(np.abs(series.norm - 1))),
        "max_energy_drift": float(np.max(np.abs(series.energy - series.energy[0]))),
        "degenerate_ground_state": info["degenerate_ground_state"],
    }
    return files, summary


def _run_mft(cfg: RunConfig, out: Path, threads: int) -> tuple[list[Path], dict]:
    m = cfg.meanfield
    portrait = phase_portrait(m.params, m.phi_range, m.z_range, m.grid)
    traj = integrate_mft(m.initial, m.params, m.t_final, m.dt, record_every=m.record_every)
    fps = fixed_points(m.params)
    files = [
        portrait.write_csv(out / "portrait.csv"),
        traj.write_csv(out / "trajectory.csv"),
        write_csv(out / "fixed_points.csv", ["phi", "z"], fps),
    ]
    return files, {"grid": list(m.grid), "samples": len(traj.t)}


def _run_commute(cfg: RunConfig, out: Path, threads: int) -> tuple[list[Path], dict]:
    c = cfg.commute
    res = check_algebra(c.L, c.n_max, c.theta_values)
    path = write_csv(out / "commutators.csv", ["theta", "j", "k", "relation", "max_error"],
                     ((r.theta, r.j, r.k, r.relation, r.max_error) for r in res))
    worst = max(r.max_error for r in res)
    summary = {"max_error": worst, "tol": c.tol, "passed": worst <= c.tol}
    if worst > c.tol:
        raise _CheckFailed(f"commutation residual {worst:.3e} exceeds {c.tol:.1e}",
                           [path], summary)
    return [path], summary


class _CheckFailed(AnyonJJError):
    exit_code = 3

    def __init__(self, message, files, summary):
        super().__init__(message)
        self.files = files
        self.summary = summary


_RUNNERS = {
    "ground": _run_ground,
    "gap-scan": _run_gap_scan,
    "quench": _run_quench,
    "mft": _run_mft,
    "commute-test": _run_commute,
}


def _versions() -> dict:
    return {"anyonjj": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def _thread_limit(threads: int | None):
    if threads is None:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return nullcontext()
    return threadpool_limits(limits=threads)


def execute(cfg: RunConfig, out: str | Path = "out", threads: int | None = None) -> int:
    """Run one command, write its files plus manifest.json; return the exit code."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    manifest: dict = {"command": cfg.command, "config": cfg.raw, "versions": _versions()}
    files: list[Path] = []
    code = 0
    try:
        with _thread_limit(threads):
            files, summary = _RUNNERS[cfg.command](cfg, out, threads or os.cpu_count() or 1)
        manifest["status"] = "ok"
        manifest["summary"] = summary
    except AnyonJJError as err:
        code = err.exit_code
        files = getattr(err, "files", [])
        manifest["status"] = "error"
        manifest["error"] = _error_record(err)
        if hasattr(err, "summary"):
            manifest["summary"] = err.summary
    manifest["exit_code"] = code
    manifest["wall_time_s"] = time.perf_counter() - start
    manifest["files"] = {p.name: {"sha256": sha256_file(p), "bytes": p.stat().st_size}
                         for p in files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    if code:
        print(json.dumps(manifest["error"]), file=sys.stderr)
    return code


def _error_record(err: BaseException) -> dict:
    rec = {"type": type(err).__name__, "message": str(err),
           "exit_code": getattr(err, "exit_code", 1)}
    if getattr(err, "field", None):
        rec["field"] = err.field
    if getattr(err, "residual", None) is not None:
        rec["residual"] = err.residual
    return rec


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anyonjj", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default="out", help="output directory (default ./out)")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker/BLAS thread count (default: all cores)")
    ap.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True,
                    help="reject unknown config keys (default on)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print(json.dumps({"type": "ConfigError", "message": "--threads must be >= 1",
                          "exit_code": 2}), file=sys.stderr)
        return 2
    try:
        cfg = parse_config(args.config, strict=args.strict)
    except (AnyonJJError, OSError) as err:
        code = getattr(err, "exit_code", 2)
        rec = _error_record(err)
        rec["exit_code"] = code
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {"status": "error", "exit_code": code, "error": rec,
                    "config_path": str(args.config), "versions": _versions(), "files": {}}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
        print(json.dumps(rec), file=sys.stderr)
        return code
    try:
        return execute(cfg, args.out, args.threads)
    except Exception:  # unexpected: report, never swallow silently
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
