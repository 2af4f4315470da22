import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksfem.fem import assemble_stiffness, interp_nodal
from ksfem.mesh import build_structured_mesh, compute_symmetric_stencils
from ksfem.oracle import rhs_bruteforce
from ksfem.scheme import (Discretization, SchemeParams, State, beta_ji, bracket,
                          edge_coefficients, f_ij, lambda_ij, rhs_u, rhs_v,
                          shock_detector_alpha, shock_detectors, stabilizer_form, tau_ji)

LOG2 = np.log(2.0)


def _random_state(rng, n, scale=3.0):
    return State(rng.uniform(0, scale, n) * (rng.uniform(size=n) > 0.2),
                 rng.uniform(0.05, 1.0, n))


# -- edge functions -----------------------------------------------------------

@pytest.mark.parametrize("ui, uj, expected", [(0, 0, 0.0), (1, 1, 0.5), (0, 1, 0.25)])
def test_lambda_examples(ui, uj, expected):
    assert lambda_ij(ui, uj) == pytest.approx(expected, abs=1e-16)


def test_tau_equal_arguments():
    assert tau_ji(3.0, 3.0) == 3.0


def test_tau_zero_one():
    assert tau_ji(0.0, 1.0) == pytest.approx(LOG2 / 2, rel=1e-15)
    assert tau_ji(0.0, 1.0) == pytest.approx(0.346574, abs=1e-6)


def test_tau_vectorized_matches_scalar(rng):
    a, b = rng.uniform(0, 5, (2, 50))
    vec = tau_ji(a, b)
    assert np.array_equal(vec, [tau_ji(x, y) for x, y in zip(a, b)])


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100), st.floats(0, 100))
def test_tau_symmetric(a, b):
    assert tau_ji(a, b) == pytest.approx(tau_ji(b, a), rel=1e-14, abs=1e-300)


def test_tau_formula_away_from_diagonal(rng):
    ui, uj = rng.uniform(0, 10, (2, 200))
    keep = np.abs(ui - uj) > 1e-2
    ui, uj = ui[keep], uj[keep]
    direct = lambda_ij(ui, uj) * (np.log1p(uj) - np.log1p(ui)) / (1 / (1 + ui) - 1 / (1 + uj))
    assert np.allclose(tau_ji(ui, uj), direct, rtol=1e-12)


def test_bracket_limit_and_zero_one():
    assert bracket(2.0, 2.0) == -0.5
    assert bracket(0.0, 1.0) == pytest.approx(-LOG2 / 2, rel=1e-15)


def test_bracket_series_matches_high_precision():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 50

    def exact(ui, uj):
        ui, uj = mp.mpf(ui), mp.mpf(uj)
        lam = (ui / (1 + ui) + uj / (1 + uj)) / 2
        tau = lam * (mp.log(1 + uj) - mp.log(1 + ui)) / (1 / (1 + ui) - 1 / (1 + uj))
        return (ui - tau) / (uj - ui)

    for ui in (0.0, 0.3, 2.0, 50.0, 1e3):
        for rel in np.concatenate([np.geomspace(1e-15, 1e-1, 40), -np.geomspace(1e-15, 1e-1, 40)]):
            uj = ui + rel * (1 + ui)
            if uj < 0 or uj == ui:
                continue
            assert bracket(ui, uj) == pytest.approx(float(exact(ui, uj)), abs=2e-13)


def test_bracket_continuous_across_series_switch():
    p = SchemeParams()
    ui = 0.4
    d = p.series_switch * (1 + ui)
    inside = bracket(ui, ui + d * (1 - 1e-9))
    outside = bracket(ui, ui + d * (1 + 1e-9))
    assert abs(inside - outside) < 1e-9


# -- f and beta ---------------------------------------------------------------

def test_f_equal_u_is_zero():
    assert f_ij([0.5, 0.5], [1.0, 2.0], 0, 1, -0.5) == 0.0


def test_f_equal_v_is_zero():
    assert f_ij([0.0, 1.0], [0.3, 0.3], 0, 1, -0.5) == 0.0


def test_f_worked_example():
    val = f_ij([0.0, 1.0], [1.0, np.e], 0, 1, -0.5)
    assert val == pytest.approx(LOG2 / 4, rel=1e-14)
    assert val == pytest.approx(0.173287, abs=1e-6)


def test_f_rejects_nonpositive_v():
    with pytest.raises(ValueError, match="strictly positive"):
        f_ij([0.0, 1.0], [0.0, 1.0], 0, 1, -0.5)


def test_f_scales_with_chi():
    p = SchemeParams(chi=2.5)
    assert f_ij([0.0, 1.0], [1.0, np.e], 0, 1, -0.5, p) == pytest.approx(2.5 * LOG2 / 4, rel=1e-14)


def test_beta_examples():
    u, v = [0.0, 1.0], [1.0, np.e]
    assert beta_ji([0.3, 0.3], v, 0, 1, -0.5, 1.0, 1.0) == 0.0
    assert beta_ji(u, v, 0, 1, -0.5, 0.0, 0.0) == 0.0
    assert beta_ji(u, v, 0, 1, -0.5, 1.0, 0.0) == pytest.approx(LOG2 / 4, rel=1e-14)


def test_beta_nonnegative_and_symmetric(rng):
    for _ in range(200):
        u = rng.uniform(0, 4, 2)
        v = rng.uniform(0.01, 1, 2)
        k = -rng.uniform(0, 1)
        ai, aj = rng.uniform(0, 1, 2)
        b = beta_ji(u, v, 0, 1, k, ai, aj)
        assert b >= 0
        assert b == beta_ji(u, v, 1, 0, k, aj, ai)


# -- detector -----------------------------------------------------------------

@pytest.fixture(scope="module")
def mesh8():
    mesh = build_structured_mesh(8)
    return mesh, compute_symmetric_stencils(mesh)


def test_detector_constant_field(mesh8):
    mesh, stn = mesh8
    assert np.all(shock_detectors(stn, np.full(mesh.num_nodes, 0.4), 2.0) == 0.0)


def test_detector_strict_minimum(mesh8):
    mesh, stn = mesh8
    x = mesh.node_coords
    f = (x[:, 0] - 0.5) ** 2 + (x[:, 1] - 0.5) ** 2
    i = int(np.argmin(f))
    assert shock_detectors(stn, f, 2.0)[i] == 1.0
    assert shock_detector_alpha(mesh, stn, f, i, 2.0) == 1.0


def test_detector_affine_interior_zero(mesh8):
    mesh, stn = mesh8
    x = mesh.node_coords
    f = 0.3 + 2 * x[:, 0] - x[:, 1]
    alpha = shock_detectors(stn, f, 2.0)
    interior = (x[:, 0] > 0) & (x[:, 0] < 1) & (x[:, 1] > 0) & (x[:, 1] < 1)
    assert np.all(alpha[interior] <= 1e-20)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.5, 4.0))
def test_detector_range_and_scalar_agreement(seed, q):
    mesh = build_structured_mesh(4)
    stn = compute_symmetric_stencils(mesh)
    f = np.random.default_rng(seed).normal(size=mesh.num_nodes)
    alpha = shock_detectors(stn, f, q)
    assert np.all((alpha >= 0) & (alpha <= 1))
    for i in range(mesh.num_nodes):
        assert alpha[i] == pytest.approx(shock_detector_alpha(mesh, stn, f, i, q), rel=1e-13, abs=1e-300)


def test_detector_scalar_length_check(mesh8):
    mesh, stn = mesh8
    with pytest.raises(ValueError):
        shock_detector_alpha(mesh, stn, np.zeros(3), 0, 2.0)


# -- right-hand sides ---------------------------------------------------------

def test_rhs_constants(disc8):
    n = disc8.mesh.num_nodes
    fu, fv = disc8.rhs(State(np.full(n, 0.7), np.full(n, 0.9)))
    assert np.all(fu == 0.0)
    assert np.allclose(fv, -0.63, rtol=1e-14)


def test_rhs_v_heat_when_u_vanishes(disc8, rng):
    n = disc8.mesh.num_nodes
    v = rng.uniform(0.1, 1, n)
    fv = rhs_v(State(np.zeros(n), v), disc8.K, disc8.M)
    assert np.allclose(fv, -(disc8.K.matrix @ v) / disc8.M, rtol=1e-12, atol=1e-12)
    assert abs(np.dot(disc8.M, fv)) <= 1e-12 * np.abs(disc8.M * fv).sum()


def test_rhs_u_conservation(disc8):
    rng = np.random.default_rng(99)
    n = disc8.mesh.num_nodes
    for _ in range(1000):
        fu = rhs_u(_random_state(rng, n), disc8.mesh, disc8.K, disc8.M, disc8.stencil, disc8.params)
        assert abs(np.dot(disc8.M, fu)) <= 1e-12 * max(np.abs(disc8.M * fu).sum(), 1e-300)


@pytest.mark.parametrize("n", [1, 2])
def test_rhs_matches_bruteforce(n):
    disc = Discretization.from_mesh(build_structured_mesh(n))
    rng = np.random.default_rng(n)
    for _ in range(30):
        state = _random_state(rng, disc.mesh.num_nodes)
        fu, fv = disc.rhs(state)
        bu, bv = rhs_bruteforce(state, disc.mesh, disc.stencil, disc.params)
        assert np.max(np.abs(fu - bu)) <= 1e-13
        assert np.max(np.abs(fv - bv)) <= 1e-13


def test_rhs_matches_bruteforce_with_chi(two_triangle_disc):
    p = SchemeParams(chi=3.0, q_detector=1.0)
    rng = np.random.default_rng(3)
    d = two_triangle_disc
    for _ in range(20):
        state = _random_state(rng, 4)
        fu = rhs_u(state, d.mesh, d.K, d.M, d.stencil, p)
        bu, _ = rhs_bruteforce(state, d.mesh, d.stencil, p)
        assert np.max(np.abs(fu - bu)) <= 1e-13


def test_stabilizer_is_graph_laplacian(disc8, rng):
    n = disc8.mesh.num_nodes
    for _ in range(20):
        state = _random_state(rng, n)
        c = edge_coefficients(state, disc8.K, disc8.stencil, disc8.params)
        assert np.all(c.beta >= 0)
        x = rng.normal(size=n)
        assert stabilizer_form(disc8.K.edges, c.beta, state.u, np.ones(n)) == 0.0
        assert stabilizer_form(disc8.K.edges, c.beta, x, x) >= 0.0
        # matches the assembled Laplacian matrix
        i, j = disc8.K.edges.T
        L = np.zeros((n, n))
        np.add.at(L, (i, j), -c.beta)
        np.add.at(L, (j, i), -c.beta)
        L[np.diag_indices(n)] = -L.sum(axis=1)
        y = rng.normal(size=n)
        assert stabilizer_form(disc8.K.edges, c.beta, x, y) == pytest.approx(x @ L @ y, rel=1e-10, abs=1e-12)


def test_beta_vanishes_for_constant_u(disc8, rng):
    n = disc8.mesh.num_nodes
    c = edge_coefficients(State(np.full(n, 1.3), rng.uniform(0.1, 1, n)), disc8.K,
                          disc8.stencil, disc8.params)
    assert np.all(c.beta == 0.0)


def test_chemotaxis_consistency_constant_u():
    # with u = c, the scheme reduces to c * (grad i_h log v, grad phi_i) / m_i
    mesh = build_structured_mesh(5)
    disc = Discretization.from_mesh(mesh)
    v = interp_nodal(lambda x, y: 0.2 + x * x + 0.5 * y, mesh)
    c = 1.7
    fu = rhs_u(State(np.full(mesh.num_nodes, c), v), mesh, disc.K, disc.M, disc.stencil, disc.params)
    K = assemble_stiffness(mesh).matrix
    assert np.allclose(fu, c * (K @ np.log(v)) / disc.M, rtol=1e-12, atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError, match="chi"):
        SchemeParams(chi=-1.0)
    with pytest.raises(ValueError, match="q_detector"):
        SchemeParams(q_detector=0.0)
    with pytest.raises(ValueError, match="eps_equal"):
        SchemeParams(eps_equal=0.0)


def test_state_shape_and_check():
    with pytest.raises(ValueError):
        State(np.zeros(3), np.ones(4))
    s = State([0.0, 1.0], [0.5, 1.0])
    s.check(vmax=1.0)
    with pytest.raises(ValueError, match="v\\[1\\]"):
        s.check(vmax=0.9)
    with pytest.raises(ValueError, match="u\\[0\\]"):
        State([-1e-3, 1.0], [0.5, 1.0]).check()
