"""Equilibrium, linearization, eigendecomposition and non-resonance checks.

The exponential basis of the series is set by the eigenvalues of
``J = diag(c) A`` at the equilibrium ``c = -A^{-1} b``.  The method
requires those eigenvalues to be real, strictly negative, pairwise
distinct, and free of integer relations; every violation raises a
dedicated error naming the broken assumption.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    ComplexSpectrumError,
    DegenerateSpectrumError,
    ResonanceError,
    SingularMatrixError,
    UnstableSpectrumError,
)
from .model import QuadraticSystem

# Imaginary parts above this fraction of the spectral radius mean a true
# complex pair rather than roundoff.
COMPLEX_TOL = 1e-9
# Eigenvalue pairs closer than this fraction of the spectral radius count
# as repeated.
GAP_TOL = 1e-9
# Rank decisions for kernel extraction.
KERNEL_TOL = 1e-10

DEFAULT_LATTICE_BOUND = 20
DEFAULT_RESONANCE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Equilibrium c, linearization J = diag(c) A, eigenvalues sorted by
    ascending magnitude, and unit kernel vectors (row i spans ker(lam_i I - J))."""

    c: np.ndarray
    J: np.ndarray
    lam: np.ndarray
    kernels: np.ndarray

    @property
    def dim(self) -> int:
        return self.c.shape[0]


def equilibrium(system: QuadraticSystem) -> np.ndarray:
    """Solve A c = -b for the nontrivial fixed point."""
    try:
        c = np.linalg.solve(system.A, -system.b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("equilibrium solve failed: A is singular") from exc
    residual = np.max(np.abs(system.A @ c + system.b))
    scale = max(1.0, float(np.max(np.abs(system.b))))
    if residual > 1e-8 * scale:
        raise SingularMatrixError(
            f"equilibrium solve residual {residual:.2e} (ill-conditioned A)")
    return c


def linearization(system: QuadraticSystem, c: np.ndarray) -> np.ndarray:
    """J with J[i, j] = c[i] * A[i, j]."""
    return np.asarray(c)[:, None] * system.A


def spectrum(J: np.ndarray) -> np.ndarray:
    """Eigenvalues of J sorted by ascending magnitude.

    For 2x2 the closed-form quadratic is used; larger systems go through
    the LAPACK eigensolver.  Raises when eigenvalues are complex, not
    strictly negative, or repeated within tolerance.
    """
    J = np.asarray(J, dtype=float)
    m = J.shape[0]
    if m == 1:
        lam = np.array([J[0, 0]])
        radius = abs(J[0, 0])
    elif m == 2:
        tr = J[0, 0] + J[1, 1]
        disc = (J[0, 0] - J[1, 1]) ** 2 + 4.0 * J[0, 1] * J[1, 0]
        radius = 0.5 * (abs(tr) + np.sqrt(abs(disc)))
        if disc < 0.0:
            imag = 0.5 * np.sqrt(-disc)
            if imag > COMPLEX_TOL * max(radius, 1e-300):
                raise ComplexSpectrumError(
                    f"complex eigenvalue pair with imaginary part {imag:.3e}; "
                    "the method assumes a real spectrum")
            disc = 0.0
        root = np.sqrt(disc)
        lam = np.array([0.5 * (tr + root), 0.5 * (tr - root)])
    else:
        vals = np.linalg.eigvals(J)
        radius = float(np.max(np.abs(vals))) if m else 0.0
        imag = np.max(np.abs(vals.imag))
        if imag > COMPLEX_TOL * max(radius, 1e-300):
            raise ComplexSpectrumError(
                f"complex eigenvalues with imaginary part up to {imag:.3e}; "
                "the method assumes a real spectrum")
        lam = np.sort(vals.real)

    lam = np.array(sorted(lam, key=abs))
    if np.any(lam >= -1e-12 * max(radius, 1e-300)):
        raise UnstableSpectrumError(
            f"eigenvalues must be strictly negative, got {lam}")
    gaps = np.abs(np.diff(np.sort(lam)))
    if m > 1 and np.min(gaps) <= GAP_TOL * max(radius, 1e-300):
        raise DegenerateSpectrumError(
            f"repeated eigenvalue (minimum gap {np.min(gaps):.3e}); "
            "the method assumes distinct eigenvalues")
    return lam


def resonance_check(lam: np.ndarray,
                    lattice_bound: int = DEFAULT_LATTICE_BOUND,
                    tol: float = DEFAULT_RESONANCE_TOL) -> list[tuple[int, ...]]:
    """All integer vectors z with 0 < max|z_i| <= bound and |z . lam| < tol*|lam_1|.

    An empty result is evidence, not proof, of non-resonance: only a finite
    lattice patch is scanned.
    """
    if lattice_bound < 1:
        raise ValueError("lattice_bound must be >= 1")
    lam = np.asarray(lam, dtype=float)
    threshold = tol * abs(lam[0])
    hits = []
    for z in product(range(-lattice_bound, lattice_bound + 1), repeat=len(lam)):
        if all(v == 0 for v in z):
            continue
        if abs(float(np.dot(z, lam))) < threshold:
            hits.append(z)
    return hits


def kernel_direction(J: np.ndarray, lam_i: float) -> np.ndarray:
    """Unit vector spanning ker(lam_i I - J); errors if the kernel is not
    one-dimensional.  Sign convention: the first component of largest
    magnitude is made positive."""
    J = np.asarray(J, dtype=float)
    m = J.shape[0]
    B = lam_i * np.eye(m) - J
    _, s, vt = np.linalg.svd(B)
    scale = max(float(np.linalg.norm(J, 2)), 1e-300)
    null_count = int(np.sum(s <= KERNEL_TOL * scale))
    if null_count != 1:
        raise DegenerateSpectrumError(
            f"kernel of (lam I - J) at lam={lam_i} has dimension {null_count}, "
            "expected 1")
    v = vt[-1]
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    return v


def analyze(system: QuadraticSystem,
            lattice_bound: int = DEFAULT_LATTICE_BOUND,
            resonance_tol: float = DEFAULT_RESONANCE_TOL,
            check_resonance: bool = True) -> SpectralData:
    """Full spectral pipeline: equilibrium, linearization, validated
    spectrum, kernel directions, and (by default) the lattice resonance scan."""
    c = equilibrium(system)
    J = linearization(system, c)
    lam = spectrum(J)
    if check_resonance:
        hits = resonance_check(lam, lattice_bound, resonance_tol)
        if hits:
            raise ResonanceError(
                f"integer eigenvalue relations detected: {hits[:4]}"
                f"{' ...' if len(hits) > 4 else ''}")
    kernels = np.vstack([kernel_direction(J, lam_i) for lam_i in lam])
    c.setflags(write=False)
    J.setflags(write=False)
    lam.setflags(write=False)
    kernels.setflags(write=False)
    return SpectralData(c=c, J=J, lam=lam, kernels=kernels)
