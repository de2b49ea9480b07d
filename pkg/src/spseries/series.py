"""Coefficient recursion for the exponential power series.

Each state variable is expanded as ``x_i(t) = sum_n alpha_i^n exp((n.lam) t)``
over multi-indices n.  The constant term is the equilibrium, the first-order
terms are kernel directions carrying one free parameter per eigenvalue, and
every higher entry solves

    ((n.lam) I - J) alpha^n = s^n,    s^n = diagonal of A S^n,

where S^n convolves all strictly lower-order coefficients.  Entries of equal
total degree are mutually independent, so the tensor is built degree shell by
degree shell.

Multi-indices are plain int tuples; a tensor stores its entries densely on
the truncation bounding box and behaves as a read-only mapping from index
tuples to coefficient vectors.
"""
from __future__ import annotations

import io
from collections.abc import Mapping
from itertools import product

import numpy as np

from .errors import (
    CoefficientOverflowError,
    EvaluationOverflowError,
    MissingCoefficientError,
    ResonanceError,
    TruncationBudgetError,
)
from .model import QuadraticSystem, TruncationSpec
from .spectral import SpectralData

MultiIndex = tuple[int, ...]

# Dense-box slots allowed before a build is refused.
DEFAULT_ENTRY_BUDGET = 10_000_000
# exp(700) is the last safe binary64 exponent.
EXP_LIMIT = 700.0
# Shell magnitudes beyond this would overflow inside the next convolution.
OVERFLOW_LIMIT = 1e280
# A shifted solve this close to an eigenvalue counts as resonant.
SHIFT_TOL = 1e-12
# Kernel components below this fraction of the largest cannot anchor a
# free parameter.
ANCHOR_TOL = 1e-12


def total_degree(n: MultiIndex) -> int:
    return sum(n)


def _degree_indices(degree: int, dim: int, part_cap: int):
    """Multi-indices of the given total degree with each part <= part_cap,
    in lexicographic order."""
    if dim == 1:
        if degree <= part_cap:
            yield (degree,)
        return
    for head in range(min(degree, part_cap) + 1):
        for rest in _degree_indices(degree - head, dim - 1, part_cap):
            yield (head,) + rest


def enumerate_indices(truncation: TruncationSpec, dim: int,
                      entry_budget: int = DEFAULT_ENTRY_BUDGET) -> list[MultiIndex]:
    """All admitted multi-indices, ascending in total degree with
    lexicographic tie-break.  Deterministic."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    count = truncation.index_count(dim)
    if count > entry_budget:
        raise TruncationBudgetError(
            f"truncation admits {count} indices, over the budget of {entry_budget}")
    part_cap = truncation.value if truncation.mode == "per_index" else truncation.value
    out: list[MultiIndex] = []
    for degree in range(truncation.max_degree(dim) + 1):
        out.extend(_degree_indices(degree, dim, part_cap))
    return out


class CoefficientTensor(Mapping):
    """Read-only mapping from multi-index tuples to coefficient vectors.

    ``free_params`` records the first-order scales the tensor was built
    with; ``anchors[i]`` is the variable whose first-order coefficient
    equals that scale (see :func:`build_coefficients`).
    """

    def __init__(self, truncation: TruncationSpec, dim: int, box: np.ndarray,
                 indices: list[MultiIndex], free_params: np.ndarray,
                 anchors: tuple[int, ...]):
        self.truncation = truncation
        self.dim = dim
        self.free_params = np.array(free_params, dtype=float)
        self.free_params.setflags(write=False)
        self.anchors = tuple(anchors)
        self._box = box
        self._box.setflags(write=False)
        self._indices = indices
        self._index_set = set(indices)
        self._cache: dict[str, np.ndarray] = {}

    @classmethod
    def from_entries(cls, truncation: TruncationSpec, dim: int,
                     entries: Mapping[MultiIndex, np.ndarray],
                     free_params=None, anchors=None) -> "CoefficientTensor":
        """Build a tensor from an explicit index -> vector mapping (testing
        and hand-constructed cases); missing admitted indices default to zero."""
        indices = enumerate_indices(truncation, dim)
        box = np.zeros(truncation.box_shape(dim) + (dim,))
        index_set = set(indices)
        for n, vec in entries.items():
            if tuple(n) not in index_set:
                raise MissingCoefficientError(f"index {n} not admitted by truncation")
            box[tuple(n)] = np.asarray(vec, dtype=float)
        if free_params is None:
            free_params = np.ones(dim)
        if anchors is None:
            anchors = tuple(range(dim))
        return cls(truncation, dim, box, indices, free_params, anchors)

    # Mapping protocol ----------------------------------------------------
    def __getitem__(self, n: MultiIndex) -> np.ndarray:
        n = tuple(n)
        if n not in self._index_set:
            raise KeyError(n)
        return self._box[n]

    def __iter__(self):
        return iter(self._indices)

    def __len__(self) -> int:
        return len(self._indices)

    # Bulk views -----------------------------------------------------------
    def index_array(self) -> np.ndarray:
        """All indices as an (K, M) int array in enumeration order."""
        if "idx" not in self._cache:
            arr = np.array(self._indices, dtype=np.int64).reshape(len(self._indices),
                                                                  self.dim)
            arr.setflags(write=False)
            self._cache["idx"] = arr
        return self._cache["idx"]

    def coefficient_matrix(self) -> np.ndarray:
        """Coefficient vectors as a (K, M) array aligned with index_array()."""
        if "coef" not in self._cache:
            idx = self.index_array()
            arr = self._box[tuple(idx[:, j] for j in range(self.dim))]
            arr.setflags(write=False)
            self._cache["coef"] = arr
        return self._cache["coef"]

    @property
    def max_degree(self) -> int:
        return total_degree(self._indices[-1]) if self._indices else 0


def _anchor_for(kernel: np.ndarray) -> int:
    """Free parameters live on the first variable's component when the kernel
    allows it, else on the largest-magnitude component."""
    top = float(np.max(np.abs(kernel)))
    if abs(kernel[0]) > ANCHOR_TOL * top:
        return 0
    return int(np.argmax(np.abs(kernel)))


def _shift_solve(spec: SpectralData, n: MultiIndex, rhs: np.ndarray) -> np.ndarray:
    lam = spec.lam
    nl = float(np.dot(n, lam))
    radius = float(np.max(np.abs(lam)))
    if np.min(np.abs(nl - lam)) <= SHIFT_TOL * max(radius, abs(nl)):
        raise ResonanceError(
            f"shift n.lam at index {n} coincides with an eigenvalue; "
            "coefficient solve is singular")
    return np.linalg.solve(nl * np.eye(spec.dim) - spec.J, rhs)


def _build_box(system: QuadraticSystem, spec: SpectralData,
               truncation: TruncationSpec, indices: list[MultiIndex],
               free_params: np.ndarray,
               overflow_limit: float | None) -> tuple[np.ndarray, tuple[int, ...], int]:
    """Fill the dense box degree by degree.

    Returns (box, anchors, completed_degree); completed_degree is the last
    fully built shell, smaller than requested only when overflow_limit cut
    the build short.
    """
    dim = system.dim
    A = system.A
    box = np.zeros(truncation.box_shape(dim) + (dim,))
    beta = np.zeros_like(box)  # beta[n] = A @ alpha[n]

    origin = (0,) * dim
    box[origin] = spec.c
    beta[origin] = A @ spec.c

    anchors = []
    for i in range(dim):
        v = spec.kernels[i]
        a = _anchor_for(v)
        anchors.append(a)
        e_i = tuple(1 if j == i else 0 for j in range(dim))
        if truncation.admits(e_i):
            vec = (v / v[a]) * free_params[i]
            box[e_i] = vec
            beta[e_i] = A @ vec

    max_deg = truncation.max_degree(dim)
    completed = min(1, max_deg)
    pos = 0
    for degree in range(2, max_deg + 1):
        shell_max = 0.0
        while pos < len(indices) and total_degree(indices[pos]) < degree:
            pos += 1
        k = pos
        while k < len(indices) and total_degree(indices[k]) == degree:
            n = indices[k]
            fwd = tuple(slice(0, ni + 1) for ni in n)
            rev = tuple(slice(ni, None, -1) for ni in n)
            # The slots at 0 and n of the reversed factor are still zero,
            # so the full box product is exactly the interior sum.
            s_vec = (box[fwd] * beta[rev]).reshape(-1, dim).sum(axis=0)
            sol = _shift_solve(spec, n, s_vec)
            box[n] = sol
            beta[n] = A @ sol
            mag = float(np.max(np.abs(sol)))
            if mag > shell_max:
                shell_max = mag
            k += 1
        if overflow_limit is not None and shell_max > overflow_limit:
            # drop the shell that crossed the limit; completed stays behind
            for j in range(pos, k):
                box[indices[j]] = 0.0
            break
        completed = degree
        pos = k
    return box, tuple(anchors), completed


def build_coefficients(system: QuadraticSystem, spec: SpectralData,
                       truncation: TruncationSpec,
                       free_params=None,
                       entry_budget: int = DEFAULT_ENTRY_BUDGET) -> CoefficientTensor:
    """Build the full coefficient tensor for the truncation.

    ``free_params`` defaults to all ones; passing values is equivalent to
    scaling the unit tensor afterwards (monomial structure) but avoids the
    giant intermediate magnitudes unit builds can reach.
    """
    dim = system.dim
    indices = enumerate_indices(truncation, dim, entry_budget)
    slots = int(np.prod(truncation.box_shape(dim)))
    if slots > entry_budget:
        raise TruncationBudgetError(
            f"dense bounding box needs {slots} slots, over the budget of "
            f"{entry_budget}")
    p = np.ones(dim) if free_params is None else np.array(free_params, dtype=float)
    if p.shape != (dim,):
        raise ValueError(f"free_params must have length {dim}")
    box, anchors, completed = _build_box(system, spec, truncation, indices, p,
                                         overflow_limit=OVERFLOW_LIMIT)
    if completed < truncation.max_degree(dim):
        raise CoefficientOverflowError(
            f"coefficient magnitudes exceeded {OVERFLOW_LIMIT:g} past total "
            f"degree {completed}")
    return CoefficientTensor(truncation, dim, box, indices, p, anchors)


def build_up_to(system: QuadraticSystem, spec: SpectralData, max_degree: int,
                free_params=None,
                entry_budget: int = DEFAULT_ENTRY_BUDGET) -> tuple[CoefficientTensor, int]:
    """Overflow-tolerant total-degree build.

    Returns (tensor, completed_degree); on overflow the tensor covers only
    the completed shells and its truncation reflects that.
    """
    dim = system.dim
    requested = TruncationSpec.total_degree(max_degree)
    slots = int(np.prod(requested.box_shape(dim)))
    if slots > entry_budget:
        raise TruncationBudgetError(
            f"dense bounding box needs {slots} slots, over the budget of "
            f"{entry_budget}")
    indices = enumerate_indices(requested, dim, entry_budget)
    p = np.ones(dim) if free_params is None else np.array(free_params, dtype=float)
    box, anchors, completed = _build_box(system, spec, requested, indices, p,
                                         overflow_limit=OVERFLOW_LIMIT)
    if completed == max_degree:
        return CoefficientTensor(requested, dim, box, indices, p, anchors), completed
    actual = TruncationSpec.total_degree(completed)
    kept = [n for n in indices if total_degree(n) <= completed]
    return CoefficientTensor(actual, dim, box, kept, p, anchors), completed


def convolution_S(coeffs: CoefficientTensor, n: MultiIndex) -> np.ndarray:
    """The symmetric matrix S^n with S_ij = sum over interior m of
    alpha_i^m alpha_j^{n-m} (m componentwise between 0 and n, excluding both
    endpoints).  Exactly symmetric by construction.

    The index n itself may lie just beyond the truncation (the dropped-term
    case) as long as every interior point is stored.
    """
    n = tuple(n)
    dim = coeffs.dim
    origin = (0,) * dim
    upper = np.zeros((dim, dim))
    for m in product(*(range(ni + 1) for ni in n)):
        if m == origin or m == n:
            continue
        other = tuple(ni - mi for ni, mi in zip(n, m))
        for needed in (m, other):
            if needed not in coeffs._index_set:
                raise MissingCoefficientError(
                    f"coefficient at {needed} (needed for S^{n}) is not in "
                    "the tensor")
        upper += np.triu(np.outer(coeffs._box[m], coeffs._box[other]))
    return upper + np.triu(upper, 1).T


def next_coefficient(spec: SpectralData, A: np.ndarray,
                     coeffs: CoefficientTensor, n: MultiIndex) -> np.ndarray:
    """Solve ((n.lam) I - J) alpha^n = diag(A S^n) from already-built
    lower-order entries.  Degrees 0 and 1 are seeded, not solved."""
    n = tuple(n)
    if total_degree(n) < 2:
        raise ValueError("next_coefficient applies to total degree >= 2 only")
    S = convolution_S(coeffs, n)
    s_vec = np.diag(np.asarray(A) @ S).copy()
    return _shift_solve(spec, n, s_vec)


def scale_free_parameters(coeffs: CoefficientTensor, p) -> CoefficientTensor:
    """Rescale every entry by prod_i p_i^{n_i} (the monomial structure);
    intended for tensors built with unit parameters."""
    p = np.array(p, dtype=float)
    if p.shape != (coeffs.dim,):
        raise ValueError(f"p must have length {coeffs.dim}")
    shape = coeffs._box.shape[:-1]
    mult = np.ones(shape)
    for axis, size in enumerate(shape):
        axis_shape = [1] * len(shape)
        axis_shape[axis] = size
        mult = mult * (p[axis] ** np.arange(size)).reshape(axis_shape)
    box = coeffs._box * mult[..., None]
    return CoefficientTensor(coeffs.truncation, coeffs.dim, box,
                             list(coeffs._indices), coeffs.free_params * p,
                             coeffs.anchors)


def _rates(coeffs: CoefficientTensor, lam: np.ndarray) -> np.ndarray:
    return coeffs.index_array() @ np.asarray(lam, dtype=float)


def _check_exponents(rates: np.ndarray, t) -> None:
    t = np.asarray(t, dtype=float)
    t_min = float(np.min(t))
    if t_min >= 0.0:
        return  # rates are <= 0, so exponents stay <= 0
    worst = t_min * float(np.min(rates))
    if worst > EXP_LIMIT:
        raise EvaluationOverflowError(
            f"series exponent {worst:.1f} would overflow (t below the "
            "convergence region)")


def evaluate(coeffs: CoefficientTensor, lam, t):
    """Truncated series value: a vector for scalar t, an (T, M) array for a
    time grid.  Errors instead of returning infinities for overflowing
    exponents."""
    rates = _rates(coeffs, lam)
    _check_exponents(rates, t)
    amat = coeffs.coefficient_matrix()
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.exp(np.outer(t_arr, rates)) @ amat
    return vals[0] if np.isscalar(t) or np.ndim(t) == 0 else vals


def evaluate_derivative(coeffs: CoefficientTensor, lam, t):
    """Time derivative of the truncated series: sum (n.lam) alpha^n e^{(n.lam)t}."""
    rates = _rates(coeffs, lam)
    _check_exponents(rates, t)
    amat = coeffs.coefficient_matrix() * rates[:, None]
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.exp(np.outer(t_arr, rates)) @ amat
    return vals[0] if np.isscalar(t) or np.ndim(t) == 0 else vals


def residual_spectrum(system: QuadraticSystem, coeffs: CoefficientTensor,
                      lam) -> dict[MultiIndex, np.ndarray]:
    """Expand d/dt[series] - diag(series)(b + A series) in the exponential
    basis, out to twice the truncation range.

    In-truncation indices carry only the linear-solve residual (zero up to
    roundoff); indices beyond the truncation expose the dropped convolution
    terms, i.e. the truncation error.
    """
    dim = coeffs.dim
    lam = np.asarray(lam, dtype=float)
    doubled = coeffs.truncation.doubled()
    out_indices = enumerate_indices(doubled, dim)
    big = np.zeros(doubled.box_shape(dim) + (dim,))
    small = coeffs._box
    big[tuple(slice(0, s) for s in small.shape[:-1])] = small
    beta = np.einsum('...i,ji->...j', big, system.A)
    result: dict[MultiIndex, np.ndarray] = {}
    for n in out_indices:
        fwd = tuple(slice(0, ni + 1) for ni in n)
        rev = tuple(slice(ni, None, -1) for ni in n)
        quad = (big[fwd] * beta[rev]).reshape(-1, dim).sum(axis=0)
        alpha_n = big[n]
        nl = float(np.dot(n, lam))
        result[n] = nl * alpha_n - system.b * alpha_n - quad
    return result


def coefficients_csv(coeffs: CoefficientTensor) -> str:
    """CSV export: one row per multi-index, columns n_1..n_M then
    alpha_1..alpha_M, 17 significant digits."""
    dim = coeffs.dim
    buf = io.StringIO()
    header = [f"n{j + 1}" for j in range(dim)] + [f"alpha{j + 1}" for j in range(dim)]
    buf.write(",".join(header) + "\n")
    for n in coeffs:
        vec = coeffs[n]
        row = [str(v) for v in n] + [f"{v:.17g}" for v in vec]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()
