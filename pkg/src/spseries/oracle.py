"""Reference integrator: fixed-step classical Runge-Kutta with a
Richardson error estimate.

Deterministic uniform grids keep series comparison and tail-limit
extraction simple; the systems of interest are non-stiff at this scale.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import OracleDivergenceError
from .model import QuadraticSystem

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step: float
    est_error: float


def _rhs(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    return x * (b + A @ x)


def _rk4_run(A, b, x0, n_steps, h):
    m = x0.shape[0]
    out = np.empty((n_steps + 1, m))
    out[0] = x0
    x = x0.copy()
    half = 0.5 * h
    sixth = h / 6.0
    for i in range(n_steps):
        k1 = _rhs(A, b, x)
        k2 = _rhs(A, b, x + half * k1)
        k3 = _rhs(A, b, x + half * k2)
        k4 = _rhs(A, b, x + h * k3)
        x = x + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.all(np.abs(x) < DIVERGENCE_LIMIT):
            raise OracleDivergenceError(
                f"state norm exceeded {DIVERGENCE_LIMIT:g} near t = {(i + 1) * h:g}; "
                "quadratic dynamics can blow up outside the basin")
        out[i + 1] = x
    return out


def integrate(system: QuadraticSystem, x0, t_end: float, step: float = 1e-3) -> Trajectory:
    """Integrate xdot = diag(x)(b + A x) from x0 on the uniform grid
    0, h, ..., t_end.

    The global error estimate compares against a half-step rerun (max norm
    over the shared grid points).
    """
    if step <= 0 or t_end <= 0:
        raise ValueError("step and t_end must be positive")
    x0 = np.array(x0, dtype=float)
    if x0.shape != (system.dim,):
        raise ValueError(f"x0 must have length {system.dim}")
    n = max(1, int(round(t_end / step)))
    states = _rk4_run(system.A, system.b, x0, n, step)
    fine = _rk4_run(system.A, system.b, x0, 2 * n, 0.5 * step)
    est = float(np.max(np.abs(states - fine[::2])))
    times = np.arange(n + 1) * step
    times.setflags(write=False)
    states.setflags(write=False)
    return Trajectory(times=times, states=states, step=step, est_error=est)


def trajectory_csv(traj: Trajectory) -> str:
    """CSV export with header t, x1, ..., xM (17 significant digits)."""
    m = traj.states.shape[1]
    buf = io.StringIO()
    buf.write(",".join(["t"] + [f"x{j + 1}" for j in range(m)]) + "\n")
    for t, row in zip(traj.times, traj.states):
        buf.write(",".join([f"{t:.17g}"] + [f"{v:.17g}" for v in row]) + "\n")
    return buf.getvalue()
