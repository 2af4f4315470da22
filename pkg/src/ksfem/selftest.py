"""Quick built-in oracle checks, run by ``ksfem self-test``."""
import numpy as np

from .fem import assemble_lumped_mass, assemble_stiffness
from .inequalities import bracket_slack, log_square_slack, saturation_slack, tau_bound_slack
from .mesh import Mesh, build_structured_mesh, check_weak_acuteness
from .oracle import dense_stiffness, rhs_bruteforce
from .scheme import Discretization, State, shock_detectors


def _stiffness_hand_values():
    K = assemble_stiffness(Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])).matrix.toarray()
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    return np.max(np.abs(K - expected)) <= 1e-15


def _stiffness_vs_dense():
    mesh = build_structured_mesh(2)
    return np.max(np.abs(assemble_stiffness(mesh).matrix.toarray() - dense_stiffness(mesh))) <= 1e-14


def _lumped_mass():
    m = assemble_lumped_mass(build_structured_mesh(1))
    return np.allclose(np.sort(m), [1 / 6, 1 / 6, 1 / 3, 1 / 3], rtol=0, atol=1e-15)


def _rhs_oracle(rng):
    mesh = build_structured_mesh(1)
    disc = Discretization.from_mesh(mesh)
    worst = 0.0
    for _ in range(50):
        st = State(rng.uniform(0, 3, 4), rng.uniform(0.1, 1.0, 4))
        fu, fv = disc.rhs(st)
        gu, gv = rhs_bruteforce(st, mesh, disc.stencil, disc.params)
        worst = max(worst, np.max(np.abs(fu - gu)), np.max(np.abs(fv - gv)))
    return worst <= 1e-13


def _detector(rng):
    disc = Discretization.from_mesh(build_structured_mesh(8))
    ok = True
    for _ in range(100):
        a = shock_detectors(disc.stencil, rng.normal(size=disc.mesh.num_nodes), 2.0)
        ok &= bool(np.all((a >= 0) & (a <= 1)))
    ok &= not np.any(shock_detectors(disc.stencil, np.full(disc.mesh.num_nodes, 3.0), 2.0))
    return ok


def _inequalities(rng):
    x, y = np.exp(rng.uniform(-5, 5, (2, 10_000)))
    tau, gap = tau_bound_slack(x, y)
    return (np.all(log_square_slack(x, y) >= -1e-12 * (x - y) ** 2 / (x * y))
            and np.all(saturation_slack(x, y) >= -1e-15)
            and np.all(tau >= 0) and np.all(gap >= -1e-12 * (1 + np.maximum(x, y)))
            and np.all(bracket_slack(x, y) >= 0))


def _acuteness():
    return all(check_weak_acuteness(build_structured_mesh(n)).passed for n in (1, 2, 5))


def run_self_test(verbose=True) -> bool:
    rng = np.random.default_rng(20240611)
    checks = {
        "stiffness_hand_values": _stiffness_hand_values,
        "stiffness_vs_dense": _stiffness_vs_dense,
        "lumped_mass": _lumped_mass,
        "rhs_vs_bruteforce": lambda: _rhs_oracle(rng),
        "detector_range": lambda: _detector(rng),
        "elementary_inequalities": lambda: _inequalities(rng),
        "weak_acuteness": _acuteness,
    }
    all_ok = True
    for name, fn in checks.items():
        ok = bool(fn())
        all_ok &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all_ok
