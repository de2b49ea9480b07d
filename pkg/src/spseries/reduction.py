"""Corrected reduced models over the first L variables.

The partial model keeps the upper-left L x L block of A and the first L
growth rates; it generally lands on the wrong equilibrium and the wrong
time scales.  Two per-equation corrections repair both: delta_i x_i moves
the equilibrium and gamma_i xdot_i rescales the transients.  Algebraically,
with gamma* = 1/(1 - gamma),

    A_hat = diag(gamma*) A_sub,   b_hat = diag(gamma*) (b_sub + delta),

delta is chosen so the reduced equilibrium equals the leading block of the
full one, and gamma* so the reduced linearization's eigenvalues match the L
slowest (smallest-magnitude) full eigenvalues.  The eigenvalue match is a
polynomial system solved through characteristic coefficients: each
coefficient is a gamma*-weighted sum of principal minors of
diag(c_hat) A_sub.  Neither correction depends on initial conditions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DimensionMismatchError, GammaSolveError
from .model import QuadraticSystem, validate
from .spectral import analyze, equilibrium, spectrum

GAMMA_NEWTON_TOL = 1e-13
GAMMA_NEWTON_ITER = 80
GAMMA_STAR_MIN = 1e-10
_RANDOM_STARTS = 24


@dataclass(frozen=True, eq=False)
class ReducedModel:
    L: int
    A_sub: np.ndarray
    b_sub: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    gamma_star: np.ndarray
    c_hat: np.ndarray
    lambda_hat: np.ndarray


def partial(system: QuadraticSystem, L: int) -> QuadraticSystem:
    """Uncorrected reduced system: upper-left L x L block and first L rates."""
    if not 1 <= L < system.dim:
        raise DimensionMismatchError(
            f"keep count L must satisfy 1 <= L < {system.dim}, got {L}")
    sub = QuadraticSystem(A=system.A[:L, :L], b=system.b[:L],
                          x0=None if system.x0 is None else system.x0[:L])
    return validate(sub)


def correct_delta(system: QuadraticSystem, L: int) -> np.ndarray:
    """delta = -(A_sub c_{1:L} + b_sub), which pins the reduced equilibrium
    to the leading block of the full one.  (At L = dim this is identically
    zero: the full model needs no correction.)"""
    if not 1 <= L <= system.dim:
        raise DimensionMismatchError(f"L must satisfy 1 <= L <= {system.dim}")
    c = equilibrium(system)
    return -(system.A[:L, :L] @ c[:L] + system.b[:L])


def _principal_minors(W: np.ndarray) -> dict[frozenset, float]:
    L = W.shape[0]
    minors = {}
    for k in range(1, L + 1):
        for subset in combinations(range(L), k):
            idx = np.array(subset)
            minors[frozenset(subset)] = float(np.linalg.det(W[np.ix_(idx, idx)]))
    return minors


def _char_coeffs(gs: np.ndarray, minors, L: int) -> np.ndarray:
    """c_k = sum over |S| = k of prod(gamma*_S) det(W_SS), k = 1..L."""
    out = np.zeros(L)
    for subset, det in minors.items():
        k = len(subset)
        out[k - 1] += det * np.prod([gs[i] for i in subset])
    return out


def _char_jacobian(gs: np.ndarray, minors, L: int) -> np.ndarray:
    J = np.zeros((L, L))
    for subset, det in minors.items():
        k = len(subset)
        for i in subset:
            rest = np.prod([gs[j] for j in subset if j != i])
            J[k - 1, i] += det * rest
    return J


def _newton_gamma_star(start: np.ndarray, target: np.ndarray, minors,
                       L: int) -> np.ndarray | None:
    gs = start.astype(float).copy()
    for _ in range(GAMMA_NEWTON_ITER):
        G = _char_coeffs(gs, minors, L) - target
        if np.max(np.abs(G)) <= GAMMA_NEWTON_TOL * max(1.0, np.max(np.abs(target))):
            return gs
        try:
            step = np.linalg.solve(_char_jacobian(gs, minors, L), -G)
        except np.linalg.LinAlgError:
            return None
        base = np.max(np.abs(G))
        scale = 1.0
        for _ in range(40):
            trial = gs + scale * step
            if np.max(np.abs(_char_coeffs(trial, minors, L) - target)) < base:
                break
            scale *= 0.5
        else:
            return None
        gs = gs + scale * step
    return None


def correct_gamma(system: QuadraticSystem, L: int, delta: np.ndarray) -> np.ndarray:
    """gamma such that the corrected reduced linearization reproduces the L
    slowest full eigenvalues; among the solution branches the one closest to
    gamma = 0 (no correction) is returned."""
    if not 1 <= L < system.dim:
        raise DimensionMismatchError(
            f"keep count L must satisfy 1 <= L < {system.dim}, got {L}")
    c = equilibrium(system)
    lam_full = spectrum(c[:, None] * system.A)
    target_lam = lam_full[:L]
    A_sub = system.A[:L, :L]
    c_hat = np.linalg.solve(A_sub, -(system.b[:L] + np.asarray(delta)))
    W = c_hat[:, None] * A_sub
    minors = _principal_minors(W)
    # Elementary symmetric targets of the wanted eigenvalues.
    poly = np.poly(target_lam)                      # [1, a_1, ..., a_L]
    target = np.array([(-1.0) ** k * poly[k] for k in range(1, L + 1)])

    starts = [np.ones(L)]
    if L == 2:
        starts.extend(_quadratic_branches(W, target))
    rng = np.random.default_rng(0)
    starts.extend(1.0 + rng.uniform(-2.0, 2.0, size=(_RANDOM_STARTS, L)))

    solutions = []
    for start in starts:
        gs = _newton_gamma_star(np.asarray(start, dtype=float), target, minors, L)
        if gs is None or not np.all(np.isfinite(gs)):
            continue
        if np.min(np.abs(gs)) < GAMMA_STAR_MIN:
            continue  # gamma* ~ 0 means an infinite correction
        if any(np.max(np.abs(gs - s)) < 1e-8 for s in solutions):
            continue
        solutions.append(gs)
    if not solutions:
        raise GammaSolveError(
            "no finite transient-correction factors reproduce the target "
            "eigenvalues (no real solution branch found)")
    gammas = [1.0 - 1.0 / gs for gs in solutions]
    best = int(np.argmin([np.linalg.norm(g) for g in gammas]))
    return gammas[best]


def _quadratic_branches(W: np.ndarray, target: np.ndarray) -> list[np.ndarray]:
    """Exact branch seeds for L = 2: g1 g2 det(W) = e2 and
    g1 W00 + g2 W11 = e1 reduce to one quadratic."""
    e1, e2 = target
    det_w = float(np.linalg.det(W))
    if det_w == 0.0 or W[0, 0] == 0.0:
        return []
    prod_g = e2 / det_w
    disc = e1 * e1 - 4.0 * W[0, 0] * W[1, 1] * prod_g
    if disc < 0.0:
        return []
    out = []
    for sign in (+1.0, -1.0):
        g1 = (e1 + sign * np.sqrt(disc)) / (2.0 * W[0, 0])
        if g1 != 0.0:
            out.append(np.array([g1, prod_g / g1]))
    return out


def corrected_system(system: QuadraticSystem, L: int) -> QuadraticSystem:
    """The L-dimensional corrected system (A_hat, b_hat), ready for the
    series or oracle machinery."""
    delta = correct_delta(system, L)
    gamma = correct_gamma(system, L, delta)
    gamma_star = 1.0 / (1.0 - gamma)
    A_hat = gamma_star[:, None] * system.A[:L, :L]
    b_hat = gamma_star * (system.b[:L] + delta)
    return QuadraticSystem(A=A_hat, b=b_hat,
                           x0=None if system.x0 is None else system.x0[:L])


def reduce_system(system: QuadraticSystem, L: int) -> ReducedModel:
    """Full reduction: partial blocks, both corrections, and the resulting
    equilibrium and spectrum."""
    sub = partial(system, L)
    delta = correct_delta(system, L)
    gamma = correct_gamma(system, L, delta)
    gamma_star = 1.0 / (1.0 - gamma)
    c_hat = np.linalg.solve(sub.A, -(sub.b + delta))
    lambda_hat = spectrum(c_hat[:, None] * (gamma_star[:, None] * sub.A))
    return ReducedModel(L=L, A_sub=sub.A, b_sub=sub.b, delta=delta,
                        gamma=gamma, gamma_star=gamma_star, c_hat=c_hat,
                        lambda_hat=lambda_hat)


def reduction_report(system: QuadraticSystem, L: int) -> str:
    """JSON report of the reduction next to the full system's equilibrium
    and spectrum."""
    model = reduce_system(system, L)
    spec = analyze(system, check_resonance=False)
    doc = {
        "L": model.L,
        "A_sub": [[float(v) for v in row] for row in model.A_sub],
        "b_sub": [float(v) for v in model.b_sub],
        "delta": [float(v) for v in model.delta],
        "gamma": [float(v) for v in model.gamma],
        "gamma_star": [float(v) for v in model.gamma_star],
        "c_hat": [float(v) for v in model.c_hat],
        "lambda_hat": [float(v) for v in model.lambda_hat],
        "full": {
            "c": [float(v) for v in spec.c],
            "lambda": [float(v) for v in spec.lam],
        },
    }
    return json.dumps(doc, indent=2)
