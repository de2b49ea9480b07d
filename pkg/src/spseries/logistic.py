"""Closed-form logistic solution and its geometric exponential series.

``xdot = r x (1 - x/k)`` solves to ``x(t) = k / (1 + A e^{-rt})`` with
``A = (k - x0)/x0``.  The same solution expands as ``sum_n alpha_n e^{-rnt}``
with ``alpha_0 = k``, ``alpha_1 = k (x0 - k)/x0`` and ``alpha_n =
alpha_1^n / k^{n-1}`` beyond that; the expansion converges for
``t > (1/r) log|1 - k/x0|``.  This module is the one-dimensional ground
truth the general machinery is checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationOverflowError, NonFiniteEntryError
from .model import QuadraticSystem


@dataclass(frozen=True)
class LogisticParams:
    r: float
    k: float
    x0: float

    def __post_init__(self):
        for name in ("r", "k", "x0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise NonFiniteEntryError(f"{name} must be positive and finite")


def closed_form(params: LogisticParams, t):
    """Exact solution k / (1 + A e^{-rt}); accepts scalars or arrays."""
    A = (params.k - params.x0) / params.x0
    denom = 1.0 + A * np.exp(-params.r * np.asarray(t, dtype=float))
    if np.any(np.abs(denom) < 1e-300):
        raise EvaluationOverflowError("closed form crosses its pole")
    out = params.k / denom
    return float(out) if np.ndim(t) == 0 else out


def series_coefficients(params: LogisticParams, n_max: int) -> np.ndarray:
    """[alpha_0, ..., alpha_N]: k followed by the geometric tail
    alpha_1^n / k^{n-1}."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    alpha1 = params.k * (params.x0 - params.k) / params.x0
    ratio = alpha1 / params.k
    coeff = params.k * ratio ** np.arange(n_max + 1)
    return coeff


def series_value(params: LogisticParams, n_max: int, t):
    """Truncated series sum_{n<=N} alpha_n e^{-rnt}."""
    coeff = series_coefficients(params, n_max)
    rates = -params.r * np.arange(n_max + 1)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.exp(np.outer(t_arr, rates)) @ coeff
    return float(vals[0]) if np.ndim(t) == 0 else vals


def t0_unclamped(params: LogisticParams) -> float:
    """(1/r) log|1 - k/x0|; -inf at x0 = k where the series is constant."""
    arg = abs(1.0 - params.k / params.x0)
    if arg == 0.0:
        return -math.inf
    return math.log(arg) / params.r


def t0_exact(params: LogisticParams) -> float:
    """Convergence threshold clamped at 0: negative values mean the series
    already converges on all of t >= 0."""
    return max(0.0, t0_unclamped(params))


def as_quadratic_system(params: LogisticParams) -> QuadraticSystem:
    """The logistic equation as the 1-dimensional quadratic system
    A = [[-r/k]], b = [r]."""
    return QuadraticSystem(A=[[-params.r / params.k]], b=[params.r],
                           x0=[params.x0])
