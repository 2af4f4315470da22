"""Acceptance suite: one PASS/FAIL line per criterion.

The lines are printed in the pytest terminal summary, or directly when this
file is run as a script.
"""
import time

import numpy as np
import pytest

from ksfem.cli import run
from ksfem.config import parse_config_text
from ksfem.diagnostics import DiagnosticsLog, check_energy_v, check_energy_w, check_energy_z, tol_energy
from ksfem.fem import assemble_lumped_mass, interp_average
from ksfem.inequalities import (bracket_slack, log_square_slack, normalized_sum_slack,
                                saturation_slack, tau_bound_slack)
from ksfem.mesh import build_structured_mesh, check_weak_acuteness, compute_symmetric_stencils
from ksfem.oracle import rhs_bruteforce
from ksfem.scheme import Discretization, State, shock_detectors
from ksfem.timeloop import StepControl, advance

from conftest import obtuse_quad

RESULTS = {}


def report(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[num] = line
    print(line)
    assert ok, line


INVARIANT_RUN = """\
[mesh]
n = 16
domain = 0 1 0 1

[initial]
u = gaussian
u.center = 0.5 0.5
u.width = 0.1
u.mass = 1
v = affine
v.floor = 0.1
v.gradient = 0.9 0

[scheme]
chi = 1
q_detector = 2

[time]
t_end = 1
dt_max = 1e-3
"""


@pytest.fixture(scope="module")
def invariant_run():
    cfg = parse_config_text(INVARIANT_RUN)
    started = time.perf_counter()
    res = run(cfg, write=False)
    return cfg, res, time.perf_counter() - started


def test_criterion_1_invariants(invariant_run):
    cfg, res, elapsed = invariant_run
    recs = res.records
    vmax = recs[0].max_v
    min_u = min(r.min_u for r in recs)
    min_v = min(r.min_v for r in recs)
    max_v = max(r.max_v for r in recs)
    mass = np.array([r.mass_u for r in recs])
    l1v = np.array([r.l1_v for r in recs])
    drift = np.max(np.abs(mass - mass[0])) / mass[0]
    rise = np.max(np.diff(l1v) / l1v[:-1])
    ok = (res.exit_code == 0 and min_u >= 0 and min_v > 0 and max_v <= vmax * (1 + 1e-12)
          and drift <= 1e-9 and rise <= 1e-12 and elapsed < 60
          and recs[-1].t == cfg.t_end and abs(mass[0] - 1.0) < 1e-3)
    report(1, ok, f"steps={len(recs) - 1} min_u={min_u:.2e} min_v={min_v:.3f} "
                  f"max_v/vmax={max_v / vmax:.15f} mass_drift={drift:.1e} "
                  f"max_rel_l1v_rise={rise:.1e} runtime={elapsed:.1f}s")


def test_criterion_2_energy(invariant_run):
    cfg, res, _ = invariant_run
    recs = res.records
    tol = tol_energy(recs[-1].t, cfg.time.dt_max, recs[0].mass_u)
    ev, ew, ez = check_energy_v(recs), check_energy_w(recs), check_energy_z(recs)
    report(2, ev <= tol and ew <= tol and ez <= 0,
           f"energy_v={ev:.3e} energy_w={ew:.3e} (tol {tol:.3e}) energy_z={ez:.3e} (<= 0)")


def test_criterion_3_oracle():
    disc = Discretization.from_mesh(build_structured_mesh(1))
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        u = rng.uniform(0, 5, 4) * (rng.uniform(size=4) > 0.25)
        state = State(u, rng.uniform(0.01, 1.0, 4))
        fu, fv = disc.rhs(state)
        bu, bv = rhs_bruteforce(state, disc.mesh, disc.stencil, disc.params)
        worst = max(worst, np.max(np.abs(fu - bu)), np.max(np.abs(fv - bv)))
    report(3, worst <= 1e-13, f"200 states, max abs deviation {worst:.2e} (<= 1e-13)")


def test_criterion_4_detector():
    mesh = build_structured_mesh(8)
    stn = compute_symmetric_stencils(mesh)
    n = mesh.num_nodes
    rng = np.random.default_rng(4)
    in_range = True
    minima = exact_one = 0
    for _ in range(1000):
        x = rng.normal(size=n)
        alpha = shock_detectors(stn, x, 2.0)
        in_range &= bool(np.all((alpha >= 0) & (alpha <= 1)))
        sym = stn.sym_values(x)
        above = (x[stn.dst] > x[stn.src]) & (~stn.present | (sym > x[stn.src]))
        strict = np.bincount(stn.src, weights=~above, minlength=n) == 0
        minima += int(strict.sum())
        exact_one += int(np.sum(alpha[strict] == 1.0))
    const_zero = all(np.all(shock_detectors(stn, np.full(n, c), 2.0) == 0.0)
                     for c in (0.0, 0.3, 7.0))
    report(4, in_range and minima > 0 and exact_one == minima and const_zero,
           f"alpha in [0,1]: {in_range}; strict minima {minima}, alpha == 1 at {exact_one}; "
           f"constant fields give 0: {const_zero}")


def test_criterion_5_inequalities():
    rng = np.random.default_rng(5)
    N = 100_000
    x = 10.0 ** rng.uniform(-6, 6, N)
    y = 10.0 ** rng.uniform(-6, 6, N)
    log_ok = bool(np.all(log_square_slack(x, y) >= -1e-12 * (1 + np.log(x / y) ** 2)))
    sat_ok = bool(np.all(saturation_slack(x, y) >= -1e-15))
    sum_ok = True
    for _ in range(10_000):
        k = rng.integers(1, 21)
        a, b = rng.normal(size=(2, k)) * 10.0 ** rng.uniform(-3, 3, (2, 1))
        sum_ok &= bool(normalized_sum_slack(a, b) >= -1e-12)
    ui = 10.0 ** rng.uniform(-4, 3, N) * (rng.uniform(size=N) > 0.05)
    du = rng.choice([-1.0, 1.0], N) * 10.0 ** rng.uniform(-15, 2, N)
    uj = np.abs(ui + du)
    tau, upper = tau_bound_slack(ui, uj)
    tau_ok = bool(np.all(tau >= 0) and np.all(upper >= -1e-12 * (1 + tau)))
    br_ok = bool(np.all(bracket_slack(ui, uj) >= 0))
    smallest = np.min(np.abs(uj - ui)[uj != ui])
    report(5, log_ok and sat_ok and sum_ok and tau_ok and br_ok,
           f"log: {log_ok}, log_II: {sat_ok}, sum: {sum_ok}, tau bound: {tau_ok}, "
           f"bracket bound: {br_ok} (smallest |du| {smallest:.1e})")


def test_criterion_6_scalar_reduction():
    disc = Discretization.from_mesh(build_structured_mesh(8))
    n = disc.mesh.num_nodes
    u0 = np.full(n, 0.7)
    marks = list(np.round(np.arange(1, 10) * 0.1, 12))
    traj = advance(State(u0.copy(), np.full(n, 0.9)),
                   StepControl(t_end=1.0, dt_init=1e-4, dt_max=1e-4), disc, output_times=marks)
    err = max(np.max(np.abs(s.v - 0.9 * np.exp(-0.7 * t))) for t, s in zip(traj.times, traj.states))
    bitwise = all(np.array_equal(s.u, u0) for s in traj.states)
    report(6, err <= 5e-4 and bitwise and len(traj.times) == 11,
           f"max |v - 0.9 exp(-0.7 t)| = {err:.2e} (<= 5e-4), u bitwise constant: {bitwise}")


def _solve_smooth(n, t_end=0.25):
    mesh = build_structured_mesh(n)
    disc = Discretization.from_mesh(mesh)
    u = interp_average(lambda x, y: 3 * np.exp(-((x - 0.4) ** 2 + (y - 0.5) ** 2) / 0.15**2), mesh)
    v = interp_average(lambda x, y: 0.1 + 0.9 * x, mesh)
    dt = 0.2 / n**2
    traj = advance(State(u, v), StepControl(t_end=t_end, dt_init=dt, dt_max=dt, dt_min=1e-14), disc)
    return traj.final


def _prolong(f, n):
    """Nodal samples on the 2n grid of the P1 field ``f`` on the n grid."""
    c = f.reshape(n + 1, n + 1)
    g = np.empty((2 * n + 1, 2 * n + 1))
    g[::2, ::2] = c
    g[::2, 1::2] = 0.5 * (c[:, :-1] + c[:, 1:])
    g[1::2, ::2] = 0.5 * (c[:-1, :] + c[1:, :])
    # cell centers lie on the lower-left to upper-right diagonal
    g[1::2, 1::2] = 0.5 * (c[:-1, :-1] + c[1:, 1:])
    return g.ravel()


@pytest.mark.slow
def test_criterion_7_self_convergence():
    sols = {n: _solve_smooth(n) for n in (8, 16, 32, 64)}
    eu, ev = [], []
    for n in (8, 16, 32):
        m = assemble_lumped_mass(build_structured_mesh(2 * n))
        eu.append(float(m @ np.abs(sols[2 * n].u - _prolong(sols[n].u, n))))
        ev.append(float(m @ np.abs(sols[2 * n].v - _prolong(sols[n].v, n))))
    ok = eu[0] > eu[1] > eu[2] and ev[0] > ev[1] > ev[2]
    report(7, ok, "e_n(u) = " + ", ".join(f"{e:.3e}" for e in eu)
                  + "; e_n(v) = " + ", ".join(f"{e:.3e}" for e in ev) + " for n = 8, 16, 32")


def test_criterion_8_weak_acuteness():
    generated = [build_structured_mesh(n, dom) for n in (1, 2, 5, 16, 33)
                 for dom in (((0, 1), (0, 1)), ((0, 3), (0, 1)), ((-1, 1), (0, 0.2)))]
    all_pass = all(check_weak_acuteness(m).passed for m in generated)
    bad = check_weak_acuteness(obtuse_quad(100.0))
    report(8, all_pass and not bad.passed,
           f"{len(generated)} generator meshes pass: {all_pass}; obtuse pair rejected: "
           f"{not bad.passed} (k_01 = {bad.violations[0][2]:.4f} > 0)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
