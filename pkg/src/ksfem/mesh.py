"""Conforming P1 triangulations of polygonal domains.

Provides a structured generator for rectangles, a small text-format reader and
writer, the weak-acuteness check and the symmetric-node stencils used by the
shock detector.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "AcutenessReport",
    "SymmetricStencil",
    "build_structured_mesh",
    "load_mesh",
    "save_mesh",
    "check_weak_acuteness",
    "compute_symmetric_stencils",
]

# relative area below which a triangle counts as degenerate
_DEGENERATE_REL = 1e-14
# parametric tolerance for ray/segment hits
_HIT_TOL = 1e-12


class MeshError(ValueError):
    """Raised for unparsable, degenerate or non-conforming meshes."""


def _signed_areas(coords, tris):
    p0, p1, p2 = coords[tris[:, 0]], coords[tris[:, 1]], coords[tris[:, 2]]
    e1, e2 = p1 - p0, p2 - p0
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


class Mesh:
    """Immutable triangulation with precomputed connectivity.

    Parameters
    ----------
    node_coords : (I, 2) array_like
        Node positions.
    triangles : (M, 3) array_like of int
        Vertex indices, 0-based. Orientation is normalized to counter-clockwise.
    """

    def __init__(self, node_coords, triangles):
        coords = np.array(node_coords, dtype=float)
        tris = np.array(triangles, dtype=np.int64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise MeshError(f"node_coords must have shape (I, 2), got {coords.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3 or len(tris) == 0:
            raise MeshError(f"triangles must have shape (M, 3), got {tris.shape}")
        if tris.min() < 0 or tris.max() >= len(coords):
            raise MeshError("triangle references a node index out of range")

        area = _signed_areas(coords, tris)
        diam = self._triangle_diameters(coords, tris)
        bad = np.abs(area) <= _DEGENERATE_REL * diam**2
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise MeshError(f"degenerate (zero-area) triangle {k}: {tris[k].tolist()}")
        flip = area < 0
        tris[flip] = tris[flip][:, [0, 2, 1]]

        self.node_coords = coords
        self.triangles = tris
        self.areas = np.abs(area)
        self.h = float(diam.max())

        self._check_conformity()
        self._build_connectivity()
        for arr in (self.node_coords, self.triangles, self.areas, self.edges):
            arr.flags.writeable = False

    @staticmethod
    def _triangle_diameters(coords, tris):
        p = coords[tris]
        lens = [np.linalg.norm(p[:, a] - p[:, b], axis=1) for a, b in ((0, 1), (1, 2), (2, 0))]
        return np.max(lens, axis=0)

    def _check_conformity(self):
        tris = self.triangles
        keys = np.sort(tris, axis=1)
        _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
        if (counts > 1).any():
            k = int(first[np.argmax(counts > 1)])
            raise MeshError(f"non-conforming mesh: triangle {k} {tris[k].tolist()} is repeated")

        # each unordered edge lies in at most 2 triangles, and on opposite sides
        owners: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for t, (a, b, c) in enumerate(tris.tolist()):
            for p, q, opp in ((a, b, c), (b, c, a), (c, a, b)):
                owners.setdefault((min(p, q), max(p, q)), []).append((t, opp))
        x = self.node_coords
        for (p, q), lst in owners.items():
            if len(lst) > 2:
                raise MeshError(
                    f"non-conforming mesh: edge ({p}, {q}) shared by {len(lst)} triangles"
                )
            if len(lst) == 2:
                d = x[q] - x[p]
                s = [d[0] * (x[o][1] - x[p][1]) - d[1] * (x[o][0] - x[p][0]) for _, o in lst]
                if s[0] * s[1] >= 0:
                    raise MeshError(
                        f"non-conforming mesh: triangles {lst[0][0]} and {lst[1][0]} overlap "
                        f"across edge ({p}, {q})"
                    )
        self._edge_owners = owners

    def _build_connectivity(self):
        n = self.num_nodes
        incident: list[list[int]] = [[] for _ in range(n)]
        patch: list[set[int]] = [set() for _ in range(n)]
        for t, tri in enumerate(self.triangles.tolist()):
            for a in tri:
                incident[a].append(t)
                patch[a].update(tri)
        if any(len(lst) == 0 for lst in incident):
            orphan = next(i for i, lst in enumerate(incident) if not lst)
            raise MeshError(f"node {orphan} belongs to no triangle")
        self.node_triangles = tuple(np.array(lst, dtype=np.int64) for lst in incident)
        self.node_patch = tuple(np.array(sorted(s), dtype=np.int64) for s in patch)
        self.edges = np.array(sorted(self._edge_owners), dtype=np.int64).reshape(-1, 2)
        self.boundary_edges = np.array(
            sorted(e for e, lst in self._edge_owners.items() if len(lst) == 1), dtype=np.int64
        ).reshape(-1, 2)

    @property
    def num_nodes(self) -> int:
        return len(self.node_coords)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def domain_area(self) -> float:
        return float(self.areas.sum())

    @property
    def quasi_uniformity(self) -> float:
        """Ratio of the shortest edge to the largest triangle diameter."""
        x = self.node_coords
        lens = np.linalg.norm(x[self.edges[:, 1]] - x[self.edges[:, 0]], axis=1)
        return float(lens.min() / self.h)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return np.array_equal(self.node_coords, other.node_coords) and np.array_equal(
            self.triangles, other.triangles
        )

    __hash__ = None

    def __repr__(self):
        return f"Mesh(nodes={self.num_nodes}, triangles={self.num_triangles}, h={self.h:.4g})"


def build_structured_mesh(n: int, domain=((0.0, 1.0), (0.0, 1.0))) -> Mesh:
    """Uniform right-triangle mesh of an axis-aligned rectangle.

    Every cell of the ``n x n`` grid is split along the diagonal from its
    lower-left to its upper-right corner. Nodes are numbered lexicographically
    by ``(y, x)``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    (x0, x1), (y0, y1) = domain
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"empty rectangle {domain}")
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])

    col, row = np.meshgrid(np.arange(n), np.arange(n))
    ll = (row * (n + 1) + col).ravel()
    lr, ul, ur = ll + 1, ll + n + 1, ll + n + 2
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = lower
    tris[1::2] = upper
    return Mesh(coords, tris)


def load_mesh(path, min_quasi_uniformity: float = 0.0) -> Mesh:
    """Read a mesh from the ``nodes N`` / ``triangles M`` text format.

    Lines starting with ``#`` and blank lines are ignored.
    """
    path = Path(path)
    lines = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        s = raw.strip()
        if s and not s.startswith("#"):
            lines.append((lineno, s))

    pos = 0

    def header(keyword):
        nonlocal pos
        if pos >= len(lines):
            raise MeshError(f"{path}: unexpected end of file, expected '{keyword} <count>'")
        lineno, s = lines[pos]
        parts = s.split()
        if len(parts) != 2 or parts[0] != keyword:
            raise MeshError(f"{path}:{lineno}: expected '{keyword} <count>', got {s!r}")
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshError(f"{path}:{lineno}: bad count {parts[1]!r}") from None
        if count < 0:
            raise MeshError(f"{path}:{lineno}: negative count")
        pos += 1
        return count

    def rows(count, width, conv, what):
        nonlocal pos
        out = []
        for _ in range(count):
            if pos >= len(lines):
                raise MeshError(f"{path}: unexpected end of file while reading {what}")
            lineno, s = lines[pos]
            parts = s.split()
            if len(parts) != width:
                raise MeshError(f"{path}:{lineno}: expected {width} values for {what}, got {s!r}")
            try:
                out.append([conv(p) for p in parts])
            except ValueError:
                raise MeshError(f"{path}:{lineno}: cannot parse {what} line {s!r}") from None
            pos += 1
        return out

    coords = rows(header("nodes"), 2, float, "node")
    tris = rows(header("triangles"), 3, int, "triangle")
    if pos != len(lines):
        lineno, s = lines[pos]
        raise MeshError(f"{path}:{lineno}: trailing content {s!r}")
    if not tris:
        raise MeshError(f"{path}: mesh has no triangles")
    mesh = Mesh(np.array(coords).reshape(-1, 2), tris)
    if mesh.quasi_uniformity < min_quasi_uniformity:
        raise MeshError(
            f"{path}: quasi-uniformity {mesh.quasi_uniformity:.3g} below {min_quasi_uniformity}"
        )
    return mesh


def save_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as f:
        f.write(f"nodes {mesh.num_nodes}\n")
        for x, y in mesh.node_coords:
            f.write(f"{float(x)!r} {float(y)!r}\n")
        f.write(f"triangles {mesh.num_triangles}\n")
        for a, b, c in mesh.triangles:
            f.write(f"{a} {b} {c}\n")


@dataclass(frozen=True)
class AcutenessReport:
    passed: bool
    violations: list  # (i, j, k_ij) with i < j

    def __bool__(self):
        return self.passed


def check_weak_acuteness(mesh: Mesh, stiffness=None, tol_acute: float = 1e-12) -> AcutenessReport:
    """Verify that every off-diagonal stiffness coupling is nonpositive."""
    if stiffness is None:
        from .fem import assemble_stiffness

        stiffness = assemble_stiffness(mesh)
    bad = np.flatnonzero(stiffness.edge_values > tol_acute)
    violations = [
        (int(stiffness.edges[e, 0]), int(stiffness.edges[e, 1]), float(stiffness.edge_values[e]))
        for e in bad
    ]
    return AcutenessReport(passed=not violations, violations=violations)


@dataclass(frozen=True, eq=False)
class SymmetricStencil:
    """Symmetric-node data for every ordered adjacent pair ``(i, j)``.

    ``x_sym = gamma * x[k1] + (1 - gamma) * x[k2]`` gives the value at the
    symmetric node of ``a_j`` with respect to ``a_i``; entries with
    ``present == False`` have no symmetric node (the ray leaves the domain).
    """

    src: np.ndarray
    dst: np.ndarray
    present: np.ndarray
    gamma: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    r_ij_len: np.ndarray
    r_sym_len: np.ndarray

    def __len__(self):
        return len(self.src)

    def index(self, i: int, j: int) -> int:
        hit = np.flatnonzero((self.src == i) & (self.dst == j))
        if len(hit) == 0:
            raise KeyError((i, j))
        return int(hit[0])

    def sym_values(self, x):
        """Nodal field evaluated at every symmetric node (NaN where absent)."""
        x = np.asarray(x, dtype=float)
        out = self.gamma * x[self.k1] + (1.0 - self.gamma) * x[self.k2]
        return np.where(self.present, out, np.nan)

    def sym_points(self, coords):
        c = np.asarray(coords, dtype=float)
        g = self.gamma[:, None]
        out = g * c[self.k1] + (1.0 - g) * c[self.k2]
        out[~self.present] = np.nan
        return out


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _ray_exit(origin, direction, segments, coords):
    """First crossing of the ray with the patch-boundary segments.

    Returns ``(s, gamma, k1, k2)`` with ``s`` the ray parameter, or ``None``.
    A hit on a segment endpoint is reported as ``gamma = 1`` at that node.
    """
    vertex_hits: dict[int, list[int]] = {}
    best = None
    for p, q in segments:
        ap, aq = coords[p], coords[q]
        e = aq - ap
        denom = _cross(direction, e)
        if abs(denom) <= 1e-14 * np.linalg.norm(direction) * np.linalg.norm(e):
            continue
        w = ap - origin
        s = _cross(w, e) / denom
        t = _cross(w, direction) / denom
        if s <= _HIT_TOL or t < -_HIT_TOL or t > 1.0 + _HIT_TOL:
            continue
        if t <= _HIT_TOL:
            vertex_hits.setdefault(p, []).append(q)
        elif t >= 1.0 - _HIT_TOL:
            vertex_hits.setdefault(q, []).append(p)
        elif best is None or s < best[0]:
            best = (s, 1.0 - t, p, q)
    for v, others in vertex_hits.items():
        s = float(np.dot(coords[v] - origin, direction) / np.dot(direction, direction))
        if best is None or s < best[0]:
            best = (s, 1.0, v, min(others))
    return best


def compute_symmetric_stencils(mesh: Mesh) -> SymmetricStencil:
    """Locate ``a_ij^sym`` for all ordered adjacent pairs.

    The ray from ``a_i`` in direction ``a_i - a_j`` is intersected with the
    boundary of the support patch of ``a_i`` (the edges opposite ``a_i`` in its
    incident triangles).
    """
    x = mesh.node_coords
    tris = mesh.triangles
    src, dst, present, gamma, k1, k2, rlen, rsym = ([] for _ in range(8))
    for i in range(mesh.num_nodes):
        segments = []
        for t in mesh.node_triangles[i]:
            a, b, c = tris[t]
            # opposite edge, ordered counter-clockwise
            if i == a:
                segments.append((b, c))
            elif i == b:
                segments.append((c, a))
            else:
                segments.append((a, b))
        for j in mesh.node_patch[i]:
            if j == i:
                continue
            d = x[i] - x[j]
            hit = _ray_exit(x[i], d, segments, x)
            src.append(i)
            dst.append(j)
            rlen.append(float(np.hypot(*d)))
            if hit is None:
                present.append(False)
                gamma.append(1.0)
                k1.append(i)
                k2.append(i)
                rsym.append(np.nan)
            else:
                s, g, p, q = hit
                present.append(True)
                gamma.append(g)
                k1.append(p)
                k2.append(q)
                pt = g * x[p] + (1.0 - g) * x[q]
                rsym.append(float(np.hypot(*(pt - x[i]))))
    arr = dict(
        src=np.array(src, dtype=np.int64),
        dst=np.array(dst, dtype=np.int64),
        present=np.array(present, dtype=bool),
        gamma=np.array(gamma),
        k1=np.array(k1, dtype=np.int64),
        k2=np.array(k2, dtype=np.int64),
        r_ij_len=np.array(rlen),
        r_sym_len=np.array(rsym),
    )
    for v in arr.values():
        v.flags.writeable = False
    return SymmetricStencil(**arr)
