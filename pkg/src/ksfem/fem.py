"""P1 finite element building blocks.

Stiffness couplings, lumped masses, the lumped inner product and the two
interpolation operators (nodal and element-average).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .mesh import Mesh, MeshError

__all__ = [
    "StiffnessMatrix",
    "assemble_stiffness",
    "assemble_lumped_mass",
    "inner_h",
    "interp_nodal",
    "interp_average",
    "default_association",
    "barycentric_gradients",
    "TRIANGLE_QUADRATURE",
]


def barycentric_gradients(mesh: Mesh):
    """Constant gradients of the three local hat functions, shape (M, 3, 2)."""
    p = mesh.node_coords[mesh.triangles]
    area2 = 2.0 * mesh.areas
    grads = np.empty((mesh.num_triangles, 3, 2))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        e = p[:, c] - p[:, b]
        # inward normal of the edge opposite vertex a, scaled by 1/(2|T|)
        grads[:, a, 0] = -e[:, 1] / area2
        grads[:, a, 1] = e[:, 0] / area2
    return grads


@dataclass(frozen=True, eq=False)
class StiffnessMatrix:
    """Symmetric P1 stiffness matrix stored per unordered edge plus diagonal.

    ``edge_values[e]`` is ``k_ij`` for ``edges[e] == (i, j)``, ``i < j``.
    """

    edges: np.ndarray
    edge_values: np.ndarray
    diagonal: np.ndarray
    matrix: sparse.csr_matrix

    @property
    def size(self) -> int:
        return len(self.diagonal)

    def coupling(self, i: int, j: int) -> float:
        if i == j:
            return float(self.diagonal[i])
        return float(self.matrix[i, j])

    def quad(self, x) -> float:
        """``x^T K x`` evaluated as a nonnegative edge sum."""
        x = np.asarray(x, dtype=float)
        dx = x[self.edges[:, 1]] - x[self.edges[:, 0]]
        return float(-np.dot(self.edge_values, dx * dx))


def assemble_stiffness(mesh: Mesh) -> StiffnessMatrix:
    grads = barycentric_gradients(mesh)
    local = np.einsum("tad,tbd->tab", grads, grads) * mesh.areas[:, None, None]
    n = mesh.num_nodes
    tris = mesh.triangles
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    full = sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    full.sum_duplicates()

    edges = mesh.edges
    upper = np.asarray(full[edges[:, 0], edges[:, 1]]).ravel()
    diag = full.diagonal().copy()
    sym = sparse.coo_matrix(
        (
            np.concatenate([upper, upper, diag]),
            (
                np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)]),
                np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)]),
            ),
        ),
        shape=(n, n),
    ).tocsr()
    for arr in (upper, diag):
        arr.flags.writeable = False
    return StiffnessMatrix(edges=edges, edge_values=upper, diagonal=diag, matrix=sym)


def assemble_lumped_mass(mesh: Mesh) -> np.ndarray:
    """``m_i = sum_{T containing i} |T| / 3``."""
    m = np.zeros(mesh.num_nodes)
    np.add.at(m, mesh.triangles.ravel(), np.repeat(mesh.areas / 3.0, 3))
    m.flags.writeable = False
    return m


def inner_h(x, y, m) -> float:
    """Lumped (nodal-quadrature) inner product ``sum_i m_i x_i y_i``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    if not (x.shape == y.shape == m.shape):
        raise ValueError(f"length mismatch: {x.shape}, {y.shape}, {m.shape}")
    return float(np.sum(m * x * y))


def interp_nodal(f, mesh: Mesh) -> np.ndarray:
    """Nodal interpolation: evaluate ``f(x, y)`` at every node."""
    x = mesh.node_coords
    vals = np.asarray(f(x[:, 0], x[:, 1]), dtype=float)
    return np.broadcast_to(vals, (mesh.num_nodes,)).copy()


# 7-point degree-5 rule on the reference triangle: barycentric points, weights summing to 1
def _quadrature_rule():
    r = np.sqrt(15.0)
    a1, b1 = (6.0 - r) / 21.0, (9.0 + 2.0 * r) / 21.0
    a2, b2 = (6.0 + r) / 21.0, (9.0 - 2.0 * r) / 21.0
    w1, w2 = (155.0 - r) / 1200.0, (155.0 + r) / 1200.0
    bary = np.array(
        [
            [1 / 3, 1 / 3, 1 / 3],
            [a1, a1, b1], [a1, b1, a1], [b1, a1, a1],
            [a2, a2, b2], [a2, b2, a2], [b2, a2, a2],
        ]
    )
    weights = np.array([9.0 / 40.0, w1, w1, w1, w2, w2, w2])
    return bary, weights


TRIANGLE_QUADRATURE = _quadrature_rule()


def default_association(mesh: Mesh) -> np.ndarray:
    """For each node, the smallest-index triangle containing it."""
    return np.array([int(t.min()) for t in mesh.node_triangles], dtype=np.int64)


def interp_average(f, mesh: Mesh, assoc=None) -> np.ndarray:
    """Average interpolation: mean of ``f`` over a triangle attached to each node."""
    if assoc is None:
        assoc = default_association(mesh)
    assoc = np.asarray(assoc, dtype=np.int64)
    if assoc.shape != (mesh.num_nodes,):
        raise ValueError("assoc must map every node to one triangle")
    for i, t in enumerate(assoc):
        if i not in mesh.triangles[t]:
            raise MeshError(f"triangle {t} does not contain node {i}")
    bary, weights = TRIANGLE_QUADRATURE
    verts = mesh.node_coords[mesh.triangles[assoc]]  # (I, 3, 2)
    pts = np.einsum("qa,iad->iqd", bary, verts)
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, pts.shape[:2])
    return vals @ weights
