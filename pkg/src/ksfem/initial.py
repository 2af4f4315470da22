"""Analytic initial-data presets and their element-average interpolation."""
from __future__ import annotations

import numpy as np
from scipy.special import erf

from .config import Preset, SimulationConfig
from .fem import TRIANGLE_QUADRATURE, interp_average
from .mesh import Mesh
from .scheme import State

__all__ = ["preset_function", "make_initial_state", "InitialDataError"]


class InitialDataError(ValueError):
    pass


def _gauss_integral_rect(center, width, rect):
    (x0, x1, y0, y1) = rect
    cx, cy = center
    fx = 0.5 * np.sqrt(np.pi) * width * (erf((x1 - cx) / width) - erf((x0 - cx) / width))
    fy = 0.5 * np.sqrt(np.pi) * width * (erf((y1 - cy) / width) - erf((y0 - cy) / width))
    return fx * fy


def _integrate_on_mesh(f, mesh: Mesh, levels: int = 3):
    """Composite 7-point quadrature on each triangle split into 4**levels pieces."""
    bary, weights = TRIANGLE_QUADRATURE
    # sub-triangles of the reference triangle in barycentric coordinates
    subs = [np.eye(3)]
    for _ in range(levels):
        nxt = []
        for s in subs:
            m01, m12, m20 = (s[0] + s[1]) / 2, (s[1] + s[2]) / 2, (s[2] + s[0]) / 2
            nxt += [np.array(v) for v in ([s[0], m01, m20], [m01, s[1], m12],
                                          [m20, m12, s[2]], [m12, m20, m01])]
        subs = nxt
    verts = mesh.node_coords[mesh.triangles]
    total = 0.0
    for s in subs:
        pts_bary = bary @ s  # (7, 3)
        pts = np.einsum("qa,tad->tqd", pts_bary, verts)
        vals = f(pts[..., 0], pts[..., 1])
        total += np.sum(mesh.areas[:, None] * vals * weights[None, :]) / len(subs)
    return float(total)


def _bump_amplitude(preset: Preset, centers, mesh: Mesh, rect):
    p = preset.params
    if "amplitude" in p:
        return p["amplitude"]
    w = p["width"]
    if rect is not None:
        unit = sum(_gauss_integral_rect(c, w, rect) for c in centers)
    else:
        def shape(x, y):
            return sum(np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / w**2) for cx, cy in centers)

        unit = _integrate_on_mesh(shape, mesh)
    return p["mass"] / unit


def preset_function(preset: Preset, mesh: Mesh, rect=None):
    """Vectorized callable ``f(x, y)`` for a preset.

    ``rect = (x0, x1, y0, y1)`` enables exact mass normalization of bumps on
    rectangles; otherwise the mass integral is evaluated numerically on ``mesh``.
    """
    p = preset.params
    name = preset.name
    if name == "constant":
        c = p["value"]
        return lambda x, y: np.full(np.shape(x), c, dtype=float)
    if name in ("gaussian", "two_bump"):
        if name == "gaussian":
            centers = [tuple(p["center"])]
        else:
            cs = p["centers"]
            centers = [(cs[0], cs[1]), (cs[2], cs[3])]
        w = p["width"]
        amp = _bump_amplitude(preset, centers, mesh, rect)

        def bump(x, y):
            return amp * sum(np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / w**2) for cx, cy in centers)

        bump.amplitude = amp
        return bump
    if name == "affine":
        a = p["floor"]
        gx, gy = p["gradient"]
        return lambda x, y: a + gx * np.asarray(x) + gy * np.asarray(y)
    raise InitialDataError(f"unknown preset {name!r}")


def _sup(f, preset: Preset, mesh: Mesh):
    if preset.name == "constant":
        return preset.params["value"]
    if preset.name == "affine":
        # an affine function peaks at a vertex of the (polygonal) domain
        x = mesh.node_coords
        return float(np.max(f(x[:, 0], x[:, 1])))
    return f.amplitude * (1 if preset.name == "gaussian" else 2)


def make_initial_state(config: SimulationConfig, mesh: Mesh) -> State:
    """Average-interpolate the configured presets onto ``mesh``."""
    rect = tuple(config.mesh.domain) if config.mesh.type == "structured" else None
    fu = preset_function(config.initial_u, mesh, rect)
    fv = preset_function(config.initial_v, mesh, rect)
    u0 = interp_average(fu, mesh)
    v0 = interp_average(fv, mesh)
    if u0.min() < 0:
        raise InitialDataError(f"u0h has a negative nodal value {u0.min():.3e}")
    if not v0.min() > 0:
        raise InitialDataError(f"v0h has a non-positive nodal value {v0.min():.3e}")
    sup_v = _sup(fv, config.initial_v, mesh)
    if v0.max() > sup_v * (1 + 1e-12):
        raise InitialDataError(f"v0h exceeds sup v0: {v0.max()!r} > {sup_v!r}")
    return State(u0, v0, 0.0)
