"""Stabilized P1 finite elements for Keller-Segel with logarithmic sensitivity.

The nodal solution keeps the cell density nonnegative and the attractant
between zero and its initial maximum, with exact mass conservation.
"""
from .diagnostics import DiagnosticsLog, DiagnosticsRecord, snapshot
from .fem import assemble_lumped_mass, assemble_stiffness, inner_h, interp_average, interp_nodal
from .mesh import (Mesh, MeshError, SymmetricStencil, build_structured_mesh,
                   check_weak_acuteness, compute_symmetric_stencils, load_mesh, save_mesh)
from .scheme import Discretization, SchemeParams, State, rhs_u, rhs_v
from .timeloop import StepControl, StepFailure, Trajectory, advance, step_euler

__version__ = "0.1.0"
