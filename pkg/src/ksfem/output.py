"""CSV and legacy-VTK writers for diagnostics and nodal fields."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsRecord, derived_fields
from .mesh import Mesh
from .scheme import State

__all__ = ["DiagnosticsCSV", "write_fields_csv", "write_fields_vtk", "FIELD_COLUMNS"]

FIELD_COLUMNS = ("node_id", "x", "y", "u", "v", "w", "z")


class DiagnosticsCSV:
    """Streams one row per record; the header is written on open."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(DiagnosticsRecord.columns())

    def __call__(self, rec: DiagnosticsRecord):
        self._writer.writerow([repr(x) for x in rec.row()])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_fields_csv(path, mesh: Mesh, state: State, vmax: float):
    w, z = derived_fields(state, vmax)
    x = mesh.node_coords
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(FIELD_COLUMNS)
        for i in range(mesh.num_nodes):
            out.writerow([i] + [repr(float(a)) for a in
                                (x[i, 0], x[i, 1], state.u[i], state.v[i], w[i], z[i])])


def write_fields_vtk(path, mesh: Mesh, state: State, vmax: float):
    """Legacy ASCII ``UNSTRUCTURED_GRID`` with point scalars u, v, w, z."""
    w, z = derived_fields(state, vmax)
    n, m = mesh.num_nodes, mesh.num_triangles
    lines = [
        "# vtk DataFile Version 3.0",
        f"chemotaxis fields t={float(state.t)!r}",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines += [f"{float(x)!r} {float(y)!r} 0.0" for x, y in mesh.node_coords]
    lines.append(f"CELLS {m} {4 * m}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {m}")
    lines += ["5"] * m
    lines.append(f"POINT_DATA {n}")
    for name, vals in (("u", state.u), ("v", state.v), ("w", w), ("z", z)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(a)) for a in np.asarray(vals)]
    Path(path).write_text("\n".join(lines) + "\n")
