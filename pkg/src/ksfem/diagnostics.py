"""Monitored quantities and the residuals of the discrete energy laws."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .fem import StiffnessMatrix
from .scheme import State

__all__ = [
    "DiagnosticsRecord",
    "DiagnosticsLog",
    "snapshot",
    "check_energy_v",
    "check_energy_w",
    "check_energy_z",
    "tol_energy",
    "derived_fields",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass_u: float
    l1_v: float
    min_u: float
    max_u: float
    min_v: float
    max_v: float
    l2h_v_sq: float
    grad_v_sq: float
    reac_sq: float
    w_l1: float
    grad_w_sq: float
    z_l1: float
    grad_z_sq: float
    int_grad_v_sq: float = 0.0
    int_reac_sq: float = 0.0
    int_grad_w_sq: float = 0.0
    int_grad_z_sq: float = 0.0

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [getattr(self, c) for c in self.columns()]


def derived_fields(state: State, vmax: float):
    """``w = -log(v / vmax)`` and ``z = log(1 + u)`` at the nodes."""
    return -np.log(state.v / vmax), np.log1p(state.u)


def snapshot(state: State, K: StiffnessMatrix, M, vmax: float) -> DiagnosticsRecord:
    """Instantaneous quantities; the time integrals are left at zero."""
    u, v = state.u, state.v
    w, z = derived_fields(state, vmax)
    return DiagnosticsRecord(
        t=float(state.t),
        mass_u=float(M @ u),
        l1_v=float(M @ v),
        min_u=float(u.min()),
        max_u=float(u.max()),
        min_v=float(v.min()),
        max_v=float(v.max()),
        l2h_v_sq=float(M @ (v * v)),
        grad_v_sq=K.quad(v),
        reac_sq=float(M @ (u * v * v)),
        w_l1=float(M @ w),
        grad_w_sq=K.quad(w),
        z_l1=float(M @ z),
        grad_z_sq=K.quad(z),
    )


_INTEGRANDS = ("grad_v_sq", "reac_sq", "grad_w_sq", "grad_z_sq")


class DiagnosticsLog:
    """Records one snapshot per accepted step and accumulates trapezoidal integrals.

    Usable directly as the ``callback`` of :func:`ksfem.timeloop.advance`.
    """

    def __init__(self, K: StiffnessMatrix, M, vmax: float, sink=None):
        self.K = K
        self.M = M
        self.vmax = vmax
        self.records: list[DiagnosticsRecord] = []
        self.sink = sink

    def __call__(self, state: State, dt: float = 0.0):
        rec = snapshot(state, self.K, self.M, self.vmax)
        if self.records:
            prev = self.records[-1]
            h = rec.t - prev.t
            acc = {
                f"int_{k}": getattr(prev, f"int_{k}") + 0.5 * h * (getattr(prev, k) + getattr(rec, k))
                for k in _INTEGRANDS
            }
            rec = DiagnosticsRecord(**{**asdict(rec), **acc})
        self.records.append(rec)
        if self.sink is not None:
            self.sink(rec)
        return rec

    def __len__(self):
        return len(self.records)

    def __getitem__(self, k):
        return self.records[k]


def check_energy_v(records) -> float:
    """``|v(t)|_h^2 + int(|grad v|^2 + |u^1/2 v|_h^2) - |v(0)|_h^2``; should be <= 0."""
    first, last = records[0], records[-1]
    return last.l2h_v_sq + last.int_grad_v_sq + last.int_reac_sq - first.l2h_v_sq


def check_energy_w(records) -> float:
    """``|w(t)|_1 + int |grad w|^2 - t |u0|_1 - |w0|_1``; should be <= 0."""
    first, last = records[0], records[-1]
    t = last.t - first.t
    return last.w_l1 + last.int_grad_w_sq - t * first.mass_u - first.w_l1


def check_energy_z(records) -> float:
    """``int |grad log(1+u)|^2 - 4((1+t)|u0|_1 + |w0|_1)``; should be <= 0."""
    first, last = records[0], records[-1]
    t = last.t - first.t
    return last.int_grad_z_sq - 4.0 * ((1.0 + t) * first.mass_u + first.w_l1)


def tol_energy(t: float, dt_max: float, mass_u0: float) -> float:
    """Allowance for the O(dt) gap between the semi-discrete laws and Euler sampling."""
    return 1e-6 + 10.0 * dt_max * (1.0 + t) * mass_u0
