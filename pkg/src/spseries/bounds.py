"""Constructive convergence certificate for the coefficient tensor.

The certificate consists of integers N0, N1 (and N2, their maximum), a
growth constant K with ``|alpha_i^n| <= K^N / prod_j(n_j + 1)`` for all
computed indices, and the resulting convergence onset ``t0 = ln(K)/|lam_1|``
(clamped at zero).  N0 controls the shifted-solve operator norm, N1 the
convolution estimate:

    N0:  ||J|| / (N |lam_1|) <= delta
    N1:  2^M M (log(N+1)+1)^M ||A|| / (N |lam_1|) < 1 - delta

K is the empirical maximum of ``(prod_j(n_j+1) |alpha_i^n|)^{1/N}`` over all
variables and indices with total degree up to N2.  The threshold delta may
be any value in (0, 1); by default it is chosen on a grid to minimize N2,
which both tightens the certificate and bounds the tensor build cost.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import MissingCoefficientError
from .fit import fit_tail_limits, recommended_tail_truncation
from .model import QuadraticSystem, TruncationSpec
from .oracle import integrate
from .series import CoefficientTensor, build_up_to
from .spectral import SpectralData

OPNORM_TOL = 1e-10
DEFAULT_DELTA = 0.5
DELTA_GRID = [round(0.02 * k, 2) for k in range(1, 50)]
# Entry and work gates for the deep certificate build.
DEFAULT_ENTRY_BUDGET = 10_000_000
DEFAULT_WORK_BUDGET = 2_000_000_000
N1_SCAN_LIMIT = 10_000_000


@dataclass(frozen=True, eq=False)
class ConvergenceCertificate:
    N0: int
    N1: int
    N2: int
    K: float
    t0: float
    delta: float
    opnorm_A: float
    opnorm_inverse_bound: float
    params_source: str            # "fitted" or "unit"
    free_params: np.ndarray | None
    partial: bool                 # K scanned short of N2 (budget or overflow)
    built_degree: int
    K_unit: float
    unit_partial: bool
    unit_built_degree: int

    def to_json(self) -> str:
        doc = {
            "N0": self.N0,
            "N1": self.N1,
            "N2": self.N2,
            "K": self.K,
            "t0": self.t0,
            "delta": self.delta,
            "opnorm_A": self.opnorm_A,
            "opnorm_inverse_bound": self.opnorm_inverse_bound,
            "params_source": self.params_source,
            "free_params": (None if self.free_params is None
                            else [float(v) for v in self.free_params]),
            "partial": self.partial,
            "built_degree": self.built_degree,
            "K_unit": self.K_unit,
            "unit_partial": self.unit_partial,
            "unit_built_degree": self.unit_built_degree,
        }
        return json.dumps(doc, indent=2)


def spectral_norm(B, tol: float = OPNORM_TOL, max_iter: int = 5000) -> float:
    """Largest singular value by power iteration on B^T B (deterministic
    start)."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if not np.any(B):
        return 0.0
    G = B.T @ B
    m = G.shape[0]
    v = np.ones(m) + 0.01 * np.arange(m)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = G @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - prev) <= tol * norm:
            break
        prev = norm
    return math.sqrt(norm)


def compute_N0(J, lam1: float, delta: float = DEFAULT_DELTA) -> int:
    """Smallest N with ||J|| / (N |lam1|) <= delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    norm_J = spectral_norm(J)
    return max(1, math.ceil(norm_J / (delta * abs(lam1))))


def compute_N1(opnorm_A: float, lam1: float, dim: int,
               delta: float = DEFAULT_DELTA) -> int:
    """Smallest N with 2^M M (log(N+1)+1)^M ||A|| / (N |lam1|) < 1 - delta,
    found by upward scan (the log factor is not monotone at small N)."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    factor = (2.0 ** dim) * dim * opnorm_A / abs(lam1)
    bound = 1.0 - delta
    n = 1
    while True:
        if factor * (math.log(n + 1.0) + 1.0) ** dim / n < bound:
            return n
        n += 1
        if n > N1_SCAN_LIMIT:
            raise MissingCoefficientError(
                f"N1 scan exceeded {N1_SCAN_LIMIT}; |lam_1| too small "
                "relative to ||A||")


def compute_K(coeffs: CoefficientTensor, n2: int) -> float:
    """max over variables i and indices 1 <= |n| <= N2 of
    (prod_j (n_j + 1) |alpha_i^n|)^{1/|n|}.

    Requires the tensor to cover every index of total degree <= N2.
    """
    if coeffs.truncation.max_degree(coeffs.dim) < n2 or (
            coeffs.truncation.mode == "per_index" and coeffs.truncation.value < n2):
        raise MissingCoefficientError(
            f"tensor covers total degree {coeffs.max_degree}, need {n2}")
    by_degree = _running_K(coeffs, n2)
    return by_degree[-1] if len(by_degree) else 0.0


def _running_K(coeffs: CoefficientTensor, n_max: int) -> np.ndarray:
    """Cumulative max of the K quantity through each total degree 1..n_max."""
    imat = coeffs.index_array()
    amat = np.abs(coeffs.coefficient_matrix())
    deg = imat.sum(axis=1)
    keep = (deg >= 1) & (deg <= n_max)
    if not np.any(keep):
        return np.zeros(max(n_max, 0))
    deg = deg[keep]
    log_comb = np.sum(np.log(imat[keep] + 1.0), axis=1)
    with np.errstate(divide="ignore"):
        log_alpha = np.log(amat[keep])            # -inf at exact zeros
    log_q = (log_comb[:, None] + log_alpha) / deg[:, None]
    q_best = np.exp(np.max(log_q, axis=1))        # per-index best variable
    q_best[~np.isfinite(q_best)] = 0.0
    out = np.zeros(n_max)
    np.maximum.at(out, deg - 1, q_best)
    return np.maximum.accumulate(out)


def choose_delta(J, opnorm_A: float, lam1: float, dim: int) -> float:
    """Grid value of delta minimizing N2 = max(N0, N1); ties go to the
    smaller delta."""
    best_delta, best_n2 = None, None
    for delta in DELTA_GRID:
        n2 = max(compute_N0(J, lam1, delta), compute_N1(opnorm_A, lam1, dim, delta))
        if best_n2 is None or n2 < best_n2:
            best_delta, best_n2 = delta, n2
    return best_delta


def _feasible_degree(dim: int, target: int, entry_budget: int,
                     work_budget: int) -> int:
    """Largest total degree whose dense box and convolution work fit the
    budgets (both grow monotonically with the degree)."""
    n = min(target, int(entry_budget ** (1.0 / dim)) - 1)
    while n > 0 and TruncationSpec.total_degree(n).convolution_work(dim) > work_budget:
        n -= 1
    return max(n, 0)


def certificate(system: QuadraticSystem, spec: SpectralData,
                coeffs: CoefficientTensor | None = None,
                delta: float | None = None,
                fitted_params=None,
                entry_budget: int = DEFAULT_ENTRY_BUDGET,
                work_budget: int = DEFAULT_WORK_BUDGET) -> ConvergenceCertificate:
    """Assemble the full certificate for a system.

    When the system carries an initial state, K is computed over the fitted
    coefficients (parameters recovered from a reference trajectory's tail
    unless supplied) and the unit-parameter K is reported separately.  If
    the build to total degree N2 would exceed the entry/work budgets, or the
    unit coefficients overflow, K covers the feasible degrees and the
    certificate carries a partial flag.
    """
    lam1 = float(spec.lam[0])
    opnorm_A = spectral_norm(system.A)
    if delta is None:
        delta = choose_delta(spec.J, opnorm_A, lam1, system.dim)
    n0 = compute_N0(spec.J, lam1, delta)
    n1 = compute_N1(opnorm_A, lam1, system.dim, delta)
    n2 = max(n0, n1)

    build_target = _feasible_degree(system.dim, n2, entry_budget, work_budget)

    p = np.asarray(fitted_params, dtype=float) if fitted_params is not None else None
    if p is None and system.x0 is not None:
        p = _tail_fit_params(system, spec)

    unit_tensor, unit_deg = build_up_to(system, spec, build_target,
                                        entry_budget=entry_budget)
    k_unit = compute_K(unit_tensor, unit_deg)
    unit_partial = unit_deg < n2

    if p is not None:
        fit_tensor, fit_deg = build_up_to(system, spec, build_target,
                                          free_params=p,
                                          entry_budget=entry_budget)
        k_op = compute_K(fit_tensor, fit_deg)
        built = fit_deg
        partial = fit_deg < n2
        source = "fitted"
    else:
        k_op, built, partial, source = k_unit, unit_deg, unit_partial, "unit"

    t0 = math.log(k_op) / abs(lam1) if k_op > 1.0 else 0.0
    return ConvergenceCertificate(
        N0=n0, N1=n1, N2=n2, K=k_op, t0=max(0.0, t0), delta=delta,
        opnorm_A=opnorm_A, opnorm_inverse_bound=1.0 / (1.0 - delta),
        params_source=source, free_params=p, partial=partial,
        built_degree=built, K_unit=k_unit, unit_partial=unit_partial,
        unit_built_degree=unit_deg)


def _tail_fit_params(system: QuadraticSystem, spec: SpectralData) -> np.ndarray:
    """Free parameters from the tail of a reference trajectory (the route
    that needs no convergence at t = 0)."""
    from .series import build_coefficients  # local import to avoid cycle noise

    lam1 = abs(float(spec.lam[0]))
    cap = recommended_tail_truncation(spec.lam)
    deflation = build_coefficients(system, spec, TruncationSpec.per_index(cap))
    # Long enough for the slow mode to dominate the last quarter, short
    # enough that the fast modes stay above the noise floor there.
    t_end = max(4.0, round(6.0 / lam1, 3))
    traj = integrate(system, system.x0, t_end=t_end, step=1e-3)
    result = fit_tail_limits(traj, spec.c, spec.lam, coeffs=deflation)
    return result.p


def delta_grid_report(system: QuadraticSystem, spec: SpectralData,
                      deltas=(0.3, 0.5, 0.7, 0.9),
                      entry_budget: int = DEFAULT_ENTRY_BUDGET,
                      work_budget: int = DEFAULT_WORK_BUDGET,
                      fitted_params=None) -> dict:
    """t0 as a function of delta (single tensor build, cumulative K scan);
    entries whose N2 exceeds the feasible build degree are flagged partial."""
    lam1 = float(spec.lam[0])
    opnorm_A = spectral_norm(system.A)
    rows = []
    specs = []
    for d in deltas:
        n0 = compute_N0(spec.J, lam1, d)
        n1 = compute_N1(opnorm_A, lam1, system.dim, d)
        specs.append((d, n0, n1, max(n0, n1)))
    deepest = max(s[3] for s in specs)
    build_target = _feasible_degree(system.dim, deepest, entry_budget, work_budget)
    p = np.asarray(fitted_params, dtype=float) if fitted_params is not None else None
    tensor, built = build_up_to(system, spec, build_target, free_params=p,
                                entry_budget=entry_budget)
    running = _running_K(tensor, built)
    for d, n0, n1, n2 in specs:
        use = min(n2, built)
        k = float(running[use - 1]) if use >= 1 else 0.0
        t0 = max(0.0, math.log(k) / abs(lam1)) if k > 1.0 else 0.0
        rows.append({"delta": d, "N0": n0, "N1": n1, "N2": n2, "K": k,
                     "t0": t0, "partial": n2 > built})
    best = min(rows, key=lambda r: (r["t0"], r["delta"]))
    return {"grid": rows, "minimizer_delta": best["delta"],
            "minimizer_t0": best["t0"]}
