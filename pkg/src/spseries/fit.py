"""Determine the free parameters from initial data, two independent ways.

The truncated series evaluated at a reference time is a polynomial system in
the free parameters; :func:`fit_sum` solves it by damped Newton (at t = 0 the
equations say the coefficients of each variable sum to its initial value).

:func:`fit_tail_limits` instead recovers the parameters from a sampled
trajectory: after the equilibrium and all known higher-order terms are
deflated away, each mode's coefficient is the limit of the residual scaled
by ``e^{-lam_i t}``.  The scalar limits are extracted jointly (one small
least-squares per deflation round) because sequential extraction amplifies
the slow-mode estimation error by ``e^{(lam_1 - lam_M) t}``, which diverges
for well-separated spectra; rounds repeat until the parameter estimates are
self-consistent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitConvergenceError, TailWindowError
from .oracle import Trajectory
from .series import CoefficientTensor

SUM_RESIDUAL_TOL = 1e-10
MAX_NEWTON_ITER = 100
MAX_HALVINGS = 30

TAIL_WINDOW_FRACTION = 0.25
TAIL_DRIFT_TOL = 0.01
TAIL_MAX_ROUNDS = 80


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted free parameters plus the method's own quality measure."""

    p: np.ndarray
    method: str
    residual: float
    t_ref: float
    warnings: tuple[str, ...] = field(default=())


def _first_order_matrix(coeffs: CoefficientTensor) -> np.ndarray:
    """Columns are the seeded first-order coefficient vectors."""
    dim = coeffs.dim
    V = np.empty((dim, dim))
    for i in range(dim):
        e_i = tuple(1 if j == i else 0 for j in range(dim))
        V[:, i] = coeffs[e_i]
    return V


def fit_sum(coeffs: CoefficientTensor, lam, x_ref, t_ref: float = 0.0,
            tol: float = SUM_RESIDUAL_TOL,
            t0_certificate: float | None = None) -> FitResult:
    """Solve sum_n alpha^n prod_j p_j^{n_j} e^{(n.lam) t_ref} = x_ref for p.

    Requires a unit-parameter tensor.  Internally Newton runs on the scaled
    amplitudes u_j = p_j e^{lam_j t_ref}, which keeps the polynomial system
    well conditioned at late reference times; the initial guess projects
    x_ref - c onto the first-order directions.
    """
    lam = np.asarray(lam, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    dim = coeffs.dim
    imat = coeffs.index_array()
    amat = coeffs.coefficient_matrix()
    c = coeffs[(0,) * dim]
    V = _first_order_matrix(coeffs)

    def residual_vec(u):
        return amat.T @ np.prod(u ** imat, axis=1) - x_ref

    try:
        u = np.linalg.solve(V, x_ref - c)
    except np.linalg.LinAlgError as exc:
        raise FitConvergenceError("first-order directions are singular") from exc

    F = residual_vec(u)
    converged = np.max(np.abs(F)) <= tol
    for _ in range(MAX_NEWTON_ITER):
        if converged:
            break
        Jm = np.empty((dim, dim))
        powers = u ** imat
        for j in range(dim):
            ex = imat[:, j]
            dcol = ex * np.where(ex >= 1, u[j] ** np.maximum(ex - 1, 0), 0.0)
            cols = powers.copy()
            cols[:, j] = dcol
            Jm[:, j] = amat.T @ np.prod(cols, axis=1)
        try:
            du = np.linalg.solve(Jm, -F)
        except np.linalg.LinAlgError as exc:
            raise FitConvergenceError("Newton Jacobian is singular") from exc
        scale = 1.0
        base = np.max(np.abs(F))
        for _ in range(MAX_HALVINGS):
            F_try = residual_vec(u + scale * du)
            if np.max(np.abs(F_try)) < base:
                break
            scale *= 0.5
        u = u + scale * du
        F = residual_vec(u)
        converged = np.max(np.abs(F)) <= tol
    if not converged:
        raise FitConvergenceError(
            f"Newton stalled at residual {np.max(np.abs(F)):.3e} (tol {tol:g})")

    p = u * np.exp(-lam * t_ref)
    warnings = ()
    if t0_certificate is not None and t_ref < t0_certificate:
        warnings = (
            f"reference time {t_ref:g} is below the certified convergence "
            f"time {t0_certificate:g}; the constraint uses a formally "
            "divergent series value",)
    return FitResult(p=p, method="sum-constraint",
                     residual=float(np.max(np.abs(F))), t_ref=t_ref,
                     warnings=warnings)


def recommended_tail_truncation(lam) -> int:
    """Per-index cap deep enough that un-deflated slow-mode powers decay
    faster than the fastest mode over the tail window."""
    lam = np.asarray(lam, dtype=float)
    ratio = abs(lam[-1] / lam[0])
    return max(8, int(math.ceil(ratio)) + 4)


def fit_tail_limits(trajectory: Trajectory, c, lam,
                    coeffs: CoefficientTensor | None = None,
                    window_fraction: float = TAIL_WINDOW_FRACTION,
                    drift_tol: float = TAIL_DRIFT_TOL,
                    max_rounds: int = TAIL_MAX_ROUNDS) -> FitResult:
    """Recover the free parameters from the tail of a trajectory.

    With a unit-parameter tensor every term of degree >= 2 is deflated using
    the current estimates before the first-order amplitudes are read off;
    without one, only the anchored first-order model is available (adequate
    when eigenvalues are close in magnitude).  The drift diagnostic bounds
    the relative spread of each mode's windowed estimator and errors when
    the window is too short or mode ordering is violated.
    """
    lam = np.asarray(lam, dtype=float)
    c = np.asarray(c, dtype=float)
    dim = c.shape[0]
    times = trajectory.times
    states = trajectory.states
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError("window_fraction must be in (0, 1]")
    start = int(round(len(times) * (1.0 - window_fraction)))
    start = min(max(start, 0), len(times) - 2)
    tw = times[start:]
    xw = states[start:]

    if coeffs is not None:
        imat = coeffs.index_array()
        amat = coeffs.coefficient_matrix()
        anchors = coeffs.anchors
        V = _first_order_matrix(coeffs)
        high = imat.sum(axis=1) >= 2
        rates_high = imat[high] @ lam
        amat_high = amat[high]
        imat_high = imat[high]
        basis_high = np.exp(np.outer(tw, rates_high))
    else:
        # Anchored first-order model: each mode contributes p_i e^{lam_i t}
        # to the first variable (classic two-variable setup).
        anchors = tuple(0 for _ in range(dim))
        V = None
        imat_high = None

    modes = np.exp(np.outer(tw, lam))            # (T, M)
    if V is not None:
        design = (modes[:, None, :] * V.T[None, :, :]).reshape(-1, dim)
    else:
        design = modes  # observations restricted to the anchor variable

    p = np.zeros(dim)
    for round_no in range(max_rounds):
        if imat_high is not None:
            mono = np.prod(p ** imat_high, axis=1)
            deflation = basis_high @ (amat_high * mono[:, None])
            target = xw - c - deflation
        else:
            target = xw[:, [0]] - c[0]
        y = target.reshape(-1)
        p_new, *_ = np.linalg.lstsq(design, y, rcond=None)
        change = np.max(np.abs(p_new - p))
        p = p_new
        if change <= 1e-12 * max(1.0, float(np.max(np.abs(p)))):
            break
    else:
        raise TailWindowError(
            "deflation rounds did not stabilize; extend the trajectory or "
            "lower the truncation")

    # Per-mode drift: the scalar estimator (residual after deflating all
    # other terms, scaled by e^{-lam_i t}) must be flat over the window.
    drift_floor = 1e-9 * max(1.0, float(np.max(np.abs(c))))
    max_drift = 0.0
    for i in range(dim):
        a = anchors[i]
        if coeffs is not None:
            keep = ~((imat.sum(axis=1) == 1) & (imat[:, i] == 1))
            rates = imat[keep] @ lam
            model = np.exp(np.outer(tw, rates)) @ (
                amat[keep, a] * np.prod(p ** imat[keep], axis=1))
            est = (xw[:, a] - model) * np.exp(-lam[i] * tw)
        else:
            others = [j for j in range(dim) if j != i]
            model = c[0] + modes[:, others] @ p[others]
            est = (xw[:, 0] - model) * np.exp(-lam[i] * tw)
        spread = float(np.max(est) - np.min(est))
        scale = max(abs(float(np.mean(est))), drift_floor)
        if float(np.max(np.abs(est))) <= drift_floor:
            continue  # mode is absent; a zero estimate is exact
        drift = spread / scale
        max_drift = max(max_drift, drift)
        if drift > drift_tol:
            raise TailWindowError(
                f"mode {i + 1} estimator drifts by {drift:.2%} over the tail "
                f"window (tolerance {drift_tol:.2%}); window too short or "
                "mode ordering violated")

    return FitResult(p=p, method="tail-limit", residual=max_drift,
                     t_ref=float(tw[0]))
