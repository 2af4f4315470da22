"""Command-line driver.

Exit codes: 0 success, 1 configuration or input error, 2 step failure,
3 run completed but an invariant check failed.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, SimulationConfig, parse_config
from .diagnostics import (DiagnosticsLog, check_energy_v, check_energy_w, check_energy_z,
                          tol_energy)
from .initial import InitialDataError, make_initial_state
from .mesh import MeshError, build_structured_mesh, check_weak_acuteness, load_mesh
from .output import DiagnosticsCSV, write_fields_csv, write_fields_vtk
from .scheme import Discretization
from .timeloop import StepFailure, advance

log = logging.getLogger("ksfem")

EXIT_OK, EXIT_CONFIG, EXIT_STEP, EXIT_CHECK = 0, 1, 2, 3
OUT_DIR_ENV = "KSFEM_OUT_DIR"

MASS_RTOL = 1e-9
L1V_RTOL = 1e-12


@dataclass
class RunResult:
    exit_code: int
    checks: dict = field(default_factory=dict)
    records: list = field(default_factory=list)
    trajectory: object = None
    out_dir: Path | None = None


def build_mesh(cfg: SimulationConfig):
    if cfg.mesh.type == "file":
        return load_mesh(cfg.mesh.path)
    x0, x1, y0, y1 = cfg.mesh.domain
    return build_structured_mesh(cfg.mesh.n, ((x0, x1), (y0, y1)))


class _BoundMonitor:
    """Tracks the worst bound violations over all accepted states."""

    def __init__(self, vmax):
        self.vmax = vmax
        self.min_u = np.inf
        self.min_v = np.inf
        self.max_v_ratio = 0.0

    def __call__(self, state):
        self.min_u = min(self.min_u, float(state.u.min()))
        self.min_v = min(self.min_v, float(state.v.min()))
        self.max_v_ratio = max(self.max_v_ratio, float(state.v.max()) / self.vmax)


def evaluate_checks(records, monitor, dt_max, bound_tol, acute_ok):
    """Pass/fail and measured value for every monitored invariant."""
    first, last = records[0], records[-1]
    mass = np.array([r.mass_u for r in records])
    l1v = np.array([r.l1_v for r in records])
    tol = tol_energy(last.t - first.t, dt_max, first.mass_u)
    mass_drift = float(np.max(np.abs(mass - mass[0]))) / max(mass[0], np.finfo(float).tiny)
    l1v_rise = float(np.max(np.diff(l1v) / l1v[:-1])) if len(l1v) > 1 else 0.0
    ev, ew, ez = check_energy_v(records), check_energy_w(records), check_energy_z(records)
    return {
        "weak_acuteness": (acute_ok, None),
        "u_nonnegative": (monitor.min_u >= 0.0, monitor.min_u),
        "v_positive": (monitor.min_v > 0.0, monitor.min_v),
        "v_max_principle": (monitor.max_v_ratio <= 1.0 + bound_tol, monitor.max_v_ratio),
        "mass_u_conserved": (mass_drift <= MASS_RTOL, mass_drift),
        "l1_v_nonincreasing": (l1v_rise <= L1V_RTOL, l1v_rise),
        "energy_v": (ev <= tol, ev),
        "energy_w": (ew <= tol, ew),
        "energy_z": (ez <= tol, ez),
    }


def run(cfg: SimulationConfig, out_dir=None, write=True) -> RunResult:
    """Build, integrate and check one configured simulation."""
    out = Path(out_dir or os.environ.get(OUT_DIR_ENV) or cfg.output.out_dir)
    try:
        mesh = build_mesh(cfg)
        disc = Discretization.from_mesh(mesh, cfg.scheme)
        state = make_initial_state(cfg, mesh)
    except (MeshError, InitialDataError, OSError) as exc:
        log.error("%s", exc)
        return RunResult(EXIT_CONFIG)

    acute = check_weak_acuteness(mesh, disc.K, cfg.scheme.tol_acute)
    if not acute:
        log.warning("mesh is not weakly acute: %d violating pairs", len(acute.violations))
    vmax = float(state.v.max())
    sink = None
    if write:
        out.mkdir(parents=True, exist_ok=True)
        sink = DiagnosticsCSV(out / "diagnostics.csv")
    diag = DiagnosticsLog(disc.K, disc.M, vmax, sink=sink)
    monitor = _BoundMonitor(vmax)

    def callback(st, dt):
        monitor(st)
        diag(st, dt)

    every = cfg.output.every
    marks = list(np.arange(1, int(np.floor(cfg.t_end / every + 1e-9)) + 1) * every) if every else []
    started = time.perf_counter()
    try:
        traj = advance(state, cfg.time, disc, output_times=marks, callback=callback)
    except StepFailure as exc:
        log.error("step failure: %s", exc)
        if sink is not None:
            sink.close()
        return RunResult(EXIT_STEP, records=diag.records, out_dir=out)
    finally:
        elapsed = time.perf_counter() - started
    if sink is not None:
        sink.close()
    log.info("integrated to t=%g in %.2fs: %d accepted, %d rejected steps, min dt %.3g",
             cfg.t_end, elapsed, traj.accepted, traj.rejected, traj.min_dt)

    if write:
        writer = write_fields_vtk if cfg.output.fields_format == "vtk" else write_fields_csv
        ext = cfg.output.fields_format
        for k, st in enumerate(traj.states):
            writer(out / f"fields_{k:04d}.{ext}", mesh, st, vmax)

    checks = evaluate_checks(diag.records, monitor, cfg.time.dt_max, cfg.time.bound_tol,
                             acute.passed)
    code = EXIT_OK if all(ok for ok, _ in checks.values()) else EXIT_CHECK
    return RunResult(code, checks, diag.records, traj, out)


def _print_checks(checks, stream=None):
    stream = stream or sys.stdout
    for name, (ok, value) in checks.items():
        shown = "" if value is None else f"  ({value:.3e})"
        print(f"{'PASS' if ok else 'FAIL'}  {name}{shown}", file=stream)


def _cmd_solve(args):
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg, out_dir=args.out_dir)
    if result.checks:
        _print_checks(result.checks)
    return result.exit_code


def _cmd_check_mesh(args):
    try:
        mesh = load_mesh(args.meshfile)
    except (MeshError, OSError) as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = check_weak_acuteness(mesh, tol_acute=args.tol_acute)
    print(f"nodes {mesh.num_nodes}  triangles {mesh.num_triangles}  h {mesh.h:.6g}  "
          f"quasi-uniformity {mesh.quasi_uniformity:.4g}  area {mesh.domain_area:.6g}")
    print(f"{'PASS' if report else 'FAIL'}  weak_acuteness")
    for i, j, k in report.violations:
        print(f"  edge ({i}, {j}): k_ij = {k:.6e} > 0")
    return EXIT_OK if report else EXIT_CONFIG


def _cmd_self_test(args):
    from .selftest import run_self_test

    return EXIT_OK if run_self_test() else EXIT_CHECK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ksfem",
        description="Stabilized P1 solver for Keller-Segel with logarithmic sensitivity.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a simulation from a config file")
    p.add_argument("config")
    p.add_argument("--out-dir", default=None,
                   help=f"overrides [output] out_dir and ${OUT_DIR_ENV}")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("check-mesh", help="validate a mesh file and its weak acuteness")
    p.add_argument("meshfile")
    p.add_argument("--tol-acute", type=float, default=1e-12)
    p.set_defaults(func=_cmd_check_mesh)

    p = sub.add_parser("self-test", help="run the built-in oracle checks")
    p.set_defaults(func=_cmd_self_test)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
