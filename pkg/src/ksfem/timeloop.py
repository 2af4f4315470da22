"""Explicit Euler time stepping with a bound-preserving step controller."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .scheme import Discretization, State

__all__ = ["StepControl", "StepFailure", "Trajectory", "step_euler", "advance"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepControl:
    t_end: float
    dt_init: float = 1e-4
    dt_min: float = 1e-12
    dt_max: float = 1e-3
    growth: float = 1.2
    shrink: float = 0.5
    bound_tol: float = 1e-12
    max_rejects: int = 60

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"{self.dt_min}, {self.dt_init}, {self.dt_max}"
            )
        if not self.growth >= 1:
            raise ValueError(f"growth must be >= 1, got {self.growth}")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not self.bound_tol >= 0:
            raise ValueError("bound_tol must be >= 0")
        if self.max_rejects < 1:
            raise ValueError("max_rejects must be >= 1")


class StepFailure(RuntimeError):
    """The controller could not find an admissible step."""

    def __init__(self, message, t, dt, node, bound):
        super().__init__(message)
        self.t = t
        self.dt = dt
        self.node = node
        self.bound = bound


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    final: State | None = None
    accepted: int = 0
    rejected: int = 0
    min_dt: float = np.inf
    vmax: float = np.nan

    def add(self, state: State):
        if self.times and not state.t > self.times[-1]:
            return
        self.times.append(state.t)
        self.states.append(state.copy())


def step_euler(state: State, dt: float, disc: Discretization) -> State:
    """One forward Euler step; the nonlinear coefficients use the current state."""
    fu, fv = disc.rhs(state)
    return State(state.u + dt * fu, state.v + dt * fv, state.t + dt)


def _violation(cand: State, vmax, tol):
    """First violated bound as ``(node, bound_name)``, or ``None``."""
    i = int(np.argmin(cand.u))
    if cand.u[i] < -tol:
        return i, "u >= 0"
    i = int(np.argmin(cand.v))
    if not cand.v[i] > 0:
        return i, "v > 0"
    i = int(np.argmax(cand.v))
    if cand.v[i] > vmax * (1.0 + tol):
        return i, "v <= vmax"
    if not (np.all(np.isfinite(cand.u)) and np.all(np.isfinite(cand.v))):
        return int(np.flatnonzero(~np.isfinite(cand.u + cand.v))[0]), "finite"
    return None


def advance(state: State, control: StepControl, disc: Discretization, output_times=None,
            callback=None) -> Trajectory:
    """Integrate from ``state.t`` to ``control.t_end``.

    Parameters
    ----------
    output_times : sequence of float, optional
        Times at which snapshots are stored; steps are shortened to land on
        them. The initial and the final state are always stored.
    callback : callable, optional
        Called as ``callback(state, dt)`` after every accepted step, and once
        with ``dt = 0`` for the initial state.
    """
    vmax = float(state.v.max())
    state.check(vmax)
    traj = Trajectory(vmax=vmax)
    t_end = control.t_end
    marks = sorted(t for t in (output_times or ()) if state.t < t < t_end)
    marks.append(t_end)
    traj.add(state)
    if callback is not None:
        callback(state, 0.0)

    cur = state.copy()
    dt = control.dt_init
    mark = 0
    tol = control.bound_tol
    while cur.t < t_end:
        target = marks[mark]
        rejects = 0
        while True:
            step = min(dt, target - cur.t)
            cand = step_euler(cur, step, disc)
            bad = _violation(cand, vmax, tol)
            if bad is None:
                break
            traj.rejected += 1
            rejects += 1
            dt = step * control.shrink
            log.debug("t=%.6g reject dt=%.3g at node %d (%s)", cur.t, step, *bad)
            if dt < control.dt_min or rejects > control.max_rejects:
                node, bound = bad
                raise StepFailure(
                    f"no admissible step at t={cur.t:.6g}: node {node} violates {bound} "
                    f"(dt={step:.3g}, rejects={rejects})",
                    t=cur.t, dt=step, node=node, bound=bound,
                )
        np.maximum(cand.u, 0.0, out=cand.u)
        np.minimum(cand.v, vmax, out=cand.v)
        # land exactly on output marks
        if step == target - cur.t:
            cand.t = target
        cur = cand
        traj.accepted += 1
        traj.min_dt = min(traj.min_dt, step)
        if callback is not None:
            callback(cur, step)
        if cur.t >= target:
            traj.add(cur)
            mark += 1
        if step == dt:
            dt = min(dt * control.growth, control.dt_max)
    traj.final = cur
    return traj
