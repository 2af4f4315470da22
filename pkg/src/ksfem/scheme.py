"""Edge-based nonlinear operators of the stabilized chemotaxis scheme.

The semi-discrete system is

    (u', ubar)_h + (grad u, grad ubar) - chi (u grad i_h log v, grad ubar)_*
        + (B(u, v) u, ubar) = 0,
    (v', vbar)_h + (grad v, grad vbar) + (u v, vbar)_h = 0,

where the starred chemotaxis form replaces the nodal density on each edge by
``tau_ji`` and ``B`` is a graph Laplacian with coefficients ``beta_ji`` switched
on by nodal shock detectors. Testing with every hat function gives the nodal
ODE right-hand sides :func:`rhs_u` and :func:`rhs_v`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fem import StiffnessMatrix, assemble_lumped_mass, assemble_stiffness
from .mesh import Mesh, SymmetricStencil, compute_symmetric_stencils

__all__ = [
    "SchemeParams",
    "State",
    "Discretization",
    "lambda_ij",
    "tau_ji",
    "bracket",
    "shock_detector_alpha",
    "shock_detectors",
    "f_ij",
    "beta_ji",
    "edge_coefficients",
    "stabilizer_form",
    "rhs_u",
    "rhs_v",
]

# denominators below this count as vanishing in the detector
ALPHA_DENOM_FLOOR = 1e-300


@dataclass(frozen=True)
class SchemeParams:
    chi: float = 1.0
    q_detector: float = 2.0
    eps_equal: float = 1e-12
    tol_acute: float = 1e-12
    series_switch: float = 1e-3

    def __post_init__(self):
        if not self.chi >= 0:
            raise ValueError(f"chi must be >= 0, got {self.chi}")
        if not self.q_detector > 0:
            raise ValueError(f"q_detector must be > 0, got {self.q_detector}")
        for name in ("eps_equal", "tol_acute", "series_switch"):
            val = getattr(self, name)
            if not 0 < val < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {val}")


@dataclass
class State:
    """Nodal densities ``u`` (cells) and ``v`` (attractant) at time ``t``."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise ValueError(f"u and v must be equal-length vectors: {self.u.shape}, {self.v.shape}")

    def copy(self) -> State:
        return State(self.u.copy(), self.v.copy(), self.t)

    def check(self, vmax: float | None = None, tol: float = 0.0) -> None:
        """Raise ``ValueError`` unless ``u >= 0`` and ``0 < v <= vmax``."""
        if self.u.min() < -tol:
            i = int(np.argmin(self.u))
            raise ValueError(f"u[{i}] = {self.u[i]:.3e} < 0")
        if self.v.min() <= 0:
            i = int(np.argmin(self.v))
            raise ValueError(f"v[{i}] = {self.v[i]:.3e} <= 0")
        if vmax is not None and self.v.max() > vmax * (1.0 + tol):
            i = int(np.argmax(self.v))
            raise ValueError(f"v[{i}] = {self.v[i]!r} > vmax = {vmax!r}")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def lambda_ij(u_i, u_j):
    """Edge average of ``u / (1 + u)``."""
    u_i = np.asarray(u_i, dtype=float)
    u_j = np.asarray(u_j, dtype=float)
    return _out(0.5 * (u_i / (1.0 + u_i) + u_j / (1.0 + u_j)))


def _equal_band(u_i, u_j, eps):
    return np.abs(u_j - u_i) <= eps * (2.0 + u_i + u_j)


def _near(u_i, u_j, p):
    # symmetric in (u_i, u_j) so both orientations of an edge take the same branch
    small = np.abs(u_j - u_i) <= p.series_switch * (1.0 + np.minimum(u_i, u_j))
    return small | _equal_band(u_i, u_j, p.eps_equal)


def _tau(u_i, u_j, near):
    a = 1.0 + u_i
    d = u_j - u_i
    safe_d = np.where(near, 1.0, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        g_exact = a * (a + d) * np.log1p(d / a) / safe_d
    t = d / a
    g_series = a + d * (0.5 + t * (-1.0 / 6 + t * (1.0 / 12 + t * (-1.0 / 20 + t / 30))))
    return lambda_ij(u_i, u_j) * np.where(near, g_series, g_exact)


def _bracket(u_i, u_j, tau, near):
    a = 1.0 + u_i
    d = u_j - u_i
    exact = (u_i - tau) / np.where(near, 1.0, d)
    t = d / a
    # Taylor coefficients of the bracket in t = d/a, exact through t**5
    c1 = (2.0 * a + 1.0) / (12.0 * a)
    c2 = -(a + 1.0) / (12.0 * a)
    c3 = (2.0 * a + 3.0) / (40.0 * a)
    c4 = -(a + 2.0) / (30.0 * a)
    c5 = (2.0 * a + 5.0) / (84.0 * a)
    series = -0.5 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))))
    return np.where(near, series, exact)


def tau_ji(u_i, u_j, p: SchemeParams | None = None):
    """Edge density replacing ``u`` in the chemotaxis flux.

    Equals ``Lambda_ij * (log(1+u_j) - log(1+u_i)) / (1/(1+u_i) - 1/(1+u_j))``,
    and ``u_i`` when ``u_i == u_j``. Near equality a Taylor expansion in
    ``d = u_j - u_i`` is used; it is exact through ``d**5``.
    """
    p = p or SchemeParams()
    u_i = np.asarray(u_i, dtype=float)
    u_j = np.asarray(u_j, dtype=float)
    return _out(_tau(u_i, u_j, _near(u_i, u_j, p)))


def bracket(u_i, u_j, p: SchemeParams | None = None):
    """``(u_i - tau_ji) / (u_j - u_i)``, bounded by 1 in magnitude.

    Tends to -1/2 as ``u_j -> u_i``.
    """
    p = p or SchemeParams()
    u_i = np.asarray(u_i, dtype=float)
    u_j = np.asarray(u_j, dtype=float)
    near = _near(u_i, u_j, p)
    return _out(_bracket(u_i, u_j, _tau(u_i, u_j, near), near))


def _slopes(stencil: SymmetricStencil, x):
    """One-sided slopes toward ``a_j`` and toward ``a_ij^sym`` for every ordered pair."""
    xi = x[stencil.src]
    s1 = (x[stencil.dst] - xi) / stencil.r_ij_len
    xs = stencil.gamma * x[stencil.k1] + (1.0 - stencil.gamma) * x[stencil.k2]
    with np.errstate(invalid="ignore"):
        s2 = np.where(stencil.present, (xs - xi) / stencil.r_sym_len, 0.0)
    return s1, s2


def shock_detectors(stencil: SymmetricStencil, x, q: float, num_nodes: int | None = None):
    """Detector value at every node; equals 1 at discrete local minima."""
    x = np.asarray(x, dtype=float)
    n = len(x) if num_nodes is None else num_nodes
    s1, s2 = _slopes(stencil, x)
    num = np.zeros(n)
    den = np.zeros(n)
    np.add.at(num, stencil.src, s1 + s2)
    np.add.at(den, stencil.src, np.abs(s1) + np.abs(s2))
    alpha = np.zeros(n)
    ok = den >= ALPHA_DENOM_FLOOR
    alpha[ok] = (np.maximum(num[ok], 0.0) / den[ok]) ** q
    return alpha


def shock_detector_alpha(mesh: Mesh, stencil: SymmetricStencil, x, i: int, q: float) -> float:
    """Detector value at a single node ``i``."""
    x = np.asarray(x, dtype=float)
    if len(x) != mesh.num_nodes:
        raise ValueError("field length does not match the mesh")
    num = 0.0
    den = 0.0
    for e in np.flatnonzero(stencil.src == i):
        j = stencil.dst[e]
        s1 = (x[j] - x[i]) / stencil.r_ij_len[e]
        s2 = 0.0
        if stencil.present[e]:
            g = stencil.gamma[e]
            xs = g * x[stencil.k1[e]] + (1.0 - g) * x[stencil.k2[e]]
            s2 = (xs - x[i]) / stencil.r_sym_len[e]
        num += s1 + s2
        den += abs(s1) + abs(s2)
    if den < ALPHA_DENOM_FLOOR:
        return 0.0
    return float((max(num, 0.0) / den) ** q)


def _f_pair(u_i, u_j, logv_i, logv_j, k_ij, p):
    f = p.chi * (logv_j - logv_i) * np.asarray(bracket(u_i, u_j, p)) * k_ij
    return np.where(_equal_band(u_i, u_j, p.eps_equal), 0.0, f)


def _check_v(*vals):
    for val in vals:
        if np.any(np.asarray(val) <= 0):
            raise ValueError("attractant density must be strictly positive")


def f_ij(u, v, i, j, k_ij, p: SchemeParams | None = None) -> float:
    """Stabilizer strength needed at ``a_i`` to compensate the edge ``(i, j)``."""
    p = p or SchemeParams()
    _check_v(v[i], v[j])
    return float(_f_pair(float(u[i]), float(u[j]), np.log(v[i]), np.log(v[j]), k_ij, p))


def beta_ji(u, v, i, j, k_ij, alpha_i, alpha_j, p: SchemeParams | None = None) -> float:
    """Graph-Laplacian coefficient of the edge ``(i, j)``."""
    p = p or SchemeParams()
    return max(alpha_i * f_ij(u, v, i, j, k_ij, p), alpha_j * f_ij(u, v, j, i, k_ij, p), 0.0)


@dataclass(frozen=True, eq=False)
class EdgeCoefficients:
    tau: np.ndarray
    dlogv: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray = field(repr=False)


def edge_coefficients(state: State, K: StiffnessMatrix, stencil: SymmetricStencil,
                      p: SchemeParams) -> EdgeCoefficients:
    u, v = state.u, state.v
    _check_v(v)
    i, j = K.edges[:, 0], K.edges[:, 1]
    k = K.edge_values
    logv = np.log(v)
    alpha = shock_detectors(stencil, u, p.q_detector, len(u))
    ui, uj = u[i], u[j]
    dlogv = logv[j] - logv[i]
    near = _near(ui, uj, p)
    tau = _tau(ui, uj, near)
    off = ~_equal_band(ui, uj, p.eps_equal)
    # f_ij and f_ji share the edge value tau; zero inside the equality band
    f_fwd = np.where(off, p.chi * dlogv * _bracket(ui, uj, tau, near) * k, 0.0)
    f_bwd = np.where(off, -p.chi * dlogv * _bracket(uj, ui, tau, near) * k, 0.0)
    beta = np.maximum(np.maximum(alpha[i] * f_fwd, alpha[j] * f_bwd), 0.0)
    return EdgeCoefficients(tau=tau, dlogv=dlogv, beta=beta, alpha=alpha)


def stabilizer_form(edges, beta, x, y) -> float:
    """``sum_{edges} beta_e (x_j - x_i)(y_j - y_i)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i, j = edges[:, 0], edges[:, 1]
    return float(np.sum(beta * (x[j] - x[i]) * (y[j] - y[i])))


def _scatter(edges, flux, n):
    # flux leaves node j and enters node i
    out = np.bincount(edges[:, 0], weights=flux, minlength=n)
    out -= np.bincount(edges[:, 1], weights=flux, minlength=n)
    return out


def rhs_u(state: State, mesh: Mesh, K: StiffnessMatrix, M, stencil: SymmetricStencil,
          p: SchemeParams):
    """Nodal time derivative of ``u``."""
    c = edge_coefficients(state, K, stencil, p)
    u = state.u
    du = u[K.edges[:, 1]] - u[K.edges[:, 0]]
    k = K.edge_values
    flux = -k * du + p.chi * c.tau * c.dlogv * k + c.beta * du
    return _scatter(K.edges, flux, mesh.num_nodes) / M


def rhs_v(state: State, K: StiffnessMatrix, M):
    """Nodal time derivative of ``v``: lumped heat flow minus absorption."""
    v = state.v
    dv = v[K.edges[:, 1]] - v[K.edges[:, 0]]
    diffusion = _scatter(K.edges, -K.edge_values * dv, len(v))
    return diffusion / M - state.u * v


@dataclass(frozen=True, eq=False)
class Discretization:
    """Everything the right-hand sides need, assembled once per mesh."""

    mesh: Mesh
    K: StiffnessMatrix
    M: np.ndarray
    stencil: SymmetricStencil
    params: SchemeParams

    @classmethod
    def from_mesh(cls, mesh: Mesh, params: SchemeParams | None = None) -> Discretization:
        return cls(mesh, assemble_stiffness(mesh), assemble_lumped_mass(mesh),
                   compute_symmetric_stencils(mesh), params or SchemeParams())

    def rhs(self, state: State):
        return (rhs_u(state, self.mesh, self.K, self.M, self.stencil, self.params),
                rhs_v(state, self.K, self.M))
