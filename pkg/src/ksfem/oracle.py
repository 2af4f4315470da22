"""Brute-force reference evaluations for small meshes.

These evaluate the weak forms by dense double sums over all node pairs and
per-triangle gradients obtained from a linear solve, independently of the
sparse edge assembly in :mod:`ksfem.fem` and :mod:`ksfem.scheme`. Cost is
cubic in the number of nodes; use on meshes with a handful of triangles.
"""
import numpy as np

from .mesh import Mesh, SymmetricStencil
from .scheme import SchemeParams, State, beta_ji, shock_detector_alpha, tau_ji


def triangle_gradients(p):
    """Gradients of the three hat functions on triangle ``p`` (3x2 vertices)."""
    A = np.column_stack([np.ones(3), p])
    # columns of inv(A) hold the coefficients (c, gx, gy) of each hat function
    coef = np.linalg.solve(A, np.eye(3))
    return coef[1:].T


def dense_stiffness(mesh: Mesh):
    n = mesh.num_nodes
    K = np.zeros((n, n))
    for tri in mesh.triangles:
        p = mesh.node_coords[tri]
        area = 0.5 * abs(np.linalg.det(np.column_stack([np.ones(3), p])))
        g = triangle_gradients(p)
        for a in range(3):
            for b in range(3):
                K[tri[a], tri[b]] += area * float(g[a] @ g[b])
    return K


def lumped_mass(mesh: Mesh):
    m = np.zeros(mesh.num_nodes)
    for tri in mesh.triangles:
        p = mesh.node_coords[tri]
        area = 0.5 * abs(np.linalg.det(np.column_stack([np.ones(3), p])))
        for a in tri:
            m[a] += area / 3.0
    return m


def gradient_energy(mesh: Mesh, x):
    """``int |grad x_h|^2`` by per-triangle constant gradients."""
    total = 0.0
    for tri in mesh.triangles:
        p = mesh.node_coords[tri]
        area = 0.5 * abs(np.linalg.det(np.column_stack([np.ones(3), p])))
        g = triangle_gradients(p).T @ np.asarray(x)[tri]
        total += area * float(g @ g)
    return total


def rhs_bruteforce(state: State, mesh: Mesh, stencil: SymmetricStencil, p: SchemeParams):
    """Right-hand sides from the weak forms tested with every hat function."""
    u, v = np.asarray(state.u), np.asarray(state.v)
    n = mesh.num_nodes
    K = dense_stiffness(mesh)
    m = lumped_mass(mesh)
    logv = np.log(v)
    alpha = [shock_detector_alpha(mesh, stencil, u, i, p.q_detector) for i in range(n)]
    beta = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            if K[a, b] != 0.0:
                beta[a, b] = beta_ji(u, v, a, b, K[a, b], alpha[a], alpha[b], p)

    fu = np.zeros(n)
    fv = np.zeros(n)
    for i in range(n):
        test = np.zeros(n)
        test[i] = 1.0
        diffusion = sum(u[b] * test[a] * K[a, b] for a in range(n) for b in range(n))
        chemotaxis = 0.0
        stabilizer = 0.0
        for a in range(n):
            for b in range(a + 1, n):
                chemotaxis += (tau_ji(u[a], u[b], p) * (logv[b] - logv[a])
                               * (test[a] - test[b]) * K[a, b])
                stabilizer += beta[a, b] * (u[b] - u[a]) * (test[b] - test[a])
        fu[i] = (-diffusion + p.chi * chemotaxis - stabilizer) / m[i]
        v_diffusion = sum(v[b] * test[a] * K[a, b] for a in range(n) for b in range(n))
        fv[i] = (-v_diffusion - m[i] * u[i] * v[i]) / m[i]
    return fu, fv
