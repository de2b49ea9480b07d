"""Problem definition types and ingestion of system-definition files.

A system is the pair (A, b) defining ``xdot = diag(x) (b + A x)``: ``b``
holds linear growth rates (1/time) and ``A`` pairwise interaction rates
(1/(time*state)).  An optional initial state ``x0`` rides along.

File format (JSON document):

    {
      "A":  [[-2, -1], [-1, -1]],      # M rows of M numbers
      "b":  [4, 3],                    # M numbers
      "x0": [1, 1],                    # optional, M numbers
      "truncation": {"per_index": 3}   # optional; or {"total_degree": N}
    }

Unknown keys are rejected.  Entries are stored in binary64; emit/parse
round-trips bit-exactly for finite doubles.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    MalformedInputError,
    NonFiniteEntryError,
    SingularMatrixError,
    UnknownKeyError,
)

# Reject A when the reciprocal condition estimate falls below this: the
# equilibrium -A^{-1} b is meaningless near singularity and every
# downstream bound blows up.
RCOND_THRESHOLD = 1e-12

_TOP_KEYS = {"A", "b", "x0", "truncation"}
_TRUNC_KEYS = {"per_index", "total_degree"}


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MalformedInputError(f"{where}: expected a number, got {value!r}")
    x = float(value)
    if not math.isfinite(x):
        raise NonFiniteEntryError(f"{where}: non-finite entry {value!r}")
    return x


@dataclass(frozen=True, eq=False)
class QuadraticSystem:
    """The pair (A, b) plus optional initial state; immutable after construction."""

    A: np.ndarray
    b: np.ndarray
    x0: np.ndarray | None = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise DimensionMismatchError(f"A must be square, got shape {A.shape}")
        b = np.array(self.b, dtype=float)
        if b.shape != (A.shape[0],):
            raise DimensionMismatchError(
                f"b has length {b.shape}, expected ({A.shape[0]},)")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise NonFiniteEntryError("A and b entries must be finite")
        x0 = self.x0
        if x0 is not None:
            x0 = np.array(x0, dtype=float)
            if x0.shape != (A.shape[0],):
                raise DimensionMismatchError(
                    f"x0 has length {x0.shape}, expected ({A.shape[0]},)")
            if not np.all(np.isfinite(x0)):
                raise NonFiniteEntryError("x0 entries must be finite")
            x0.setflags(write=False)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x0", x0)

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class TruncationSpec:
    """Which multi-indices to keep: per-index cap d or total-degree cap N."""

    mode: str
    value: int

    def __post_init__(self):
        if self.mode not in ("per_index", "total_degree"):
            raise MalformedInputError(f"unknown truncation mode {self.mode!r}")
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise MalformedInputError("truncation value must be an integer")
        if self.value < 0:
            raise MalformedInputError("truncation value must be >= 0")

    @classmethod
    def per_index(cls, d: int) -> "TruncationSpec":
        return cls("per_index", d)

    @classmethod
    def total_degree(cls, n: int) -> "TruncationSpec":
        return cls("total_degree", n)

    def admits(self, n: tuple[int, ...]) -> bool:
        if self.mode == "per_index":
            return max(n, default=0) <= self.value
        return sum(n) <= self.value

    def index_count(self, dim: int) -> int:
        """Number of admitted multi-indices: (d+1)^M or C(N+M, M)."""
        if self.mode == "per_index":
            return (self.value + 1) ** dim
        return math.comb(self.value + dim, dim)

    def box_shape(self, dim: int) -> tuple[int, ...]:
        """Shape of the dense bounding box holding all admitted indices."""
        return (self.value + 1,) * dim

    def max_degree(self, dim: int) -> int:
        return self.value * dim if self.mode == "per_index" else self.value

    def convolution_work(self, dim: int) -> int:
        """Exact number of product terms summed when building all entries.

        Each index n costs prod(n_i + 1) terms; summed over the admitted set
        this is ((d+1)(d+2)/2)^M for a per-index cap and C(N+2M, 2M) for a
        total-degree cap.
        """
        if self.mode == "per_index":
            return ((self.value + 1) * (self.value + 2) // 2) ** dim
        return math.comb(self.value + 2 * dim, 2 * dim)

    def doubled(self) -> "TruncationSpec":
        return TruncationSpec(self.mode, 2 * self.value)


def parse_document(text: str) -> tuple[QuadraticSystem, TruncationSpec | None]:
    """Parse a system-definition document; returns the system and the file's
    truncation choice (None when absent)."""
    try:
        doc = json.loads(text, parse_constant=lambda s: math.nan)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedInputError("document root must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise UnknownKeyError(f"unknown keys: {sorted(unknown)}")
    if "A" not in doc or "b" not in doc:
        raise MalformedInputError("document requires keys 'A' and 'b'")

    rows = doc["A"]
    if not isinstance(rows, list) or not rows:
        raise MalformedInputError("'A' must be a non-empty array of rows")
    m = len(rows)
    A = np.empty((m, m))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != m:
            raise DimensionMismatchError(
                f"'A' row {i} has {len(row) if isinstance(row, list) else 'no'} "
                f"entries, expected {m}")
        for j, v in enumerate(row):
            A[i, j] = _as_float(v, f"A[{i}][{j}]")

    def vector(key):
        vals = doc[key]
        if not isinstance(vals, list) or len(vals) != m:
            raise DimensionMismatchError(f"'{key}' must be an array of {m} numbers")
        return np.array([_as_float(v, f"{key}[{i}]") for i, v in enumerate(vals)])

    b = vector("b")
    x0 = vector("x0") if "x0" in doc else None

    truncation = None
    if "truncation" in doc:
        tr = doc["truncation"]
        if not isinstance(tr, dict):
            raise MalformedInputError("'truncation' must be an object")
        unknown = set(tr) - _TRUNC_KEYS
        if unknown:
            raise UnknownKeyError(f"unknown truncation keys: {sorted(unknown)}")
        if len(tr) != 1:
            raise MalformedInputError(
                "'truncation' takes exactly one of 'per_index'/'total_degree'")
        (mode, value), = tr.items()
        if isinstance(value, bool) or not isinstance(value, int):
            raise MalformedInputError("truncation value must be an integer")
        truncation = TruncationSpec(mode, value)

    return QuadraticSystem(A, b, x0), truncation


def parse_system(text: str) -> QuadraticSystem:
    """Parse a system-definition document into a validated QuadraticSystem."""
    system, _ = parse_document(text)
    return validate(system)


def emit(system: QuadraticSystem, truncation: TruncationSpec | None = None) -> str:
    """Serialize back to the document format.  parse(emit(s)) round-trips
    bit-exactly (floats are written in shortest round-trip form)."""
    doc = {"A": [[float(v) for v in row] for row in system.A],
           "b": [float(v) for v in system.b]}
    if system.x0 is not None:
        doc["x0"] = [float(v) for v in system.x0]
    if truncation is not None:
        doc["truncation"] = {truncation.mode: truncation.value}
    return json.dumps(doc)


def validate(system: QuadraticSystem) -> QuadraticSystem:
    """Check invertibility of A; returns the system unchanged.  Idempotent."""
    s = np.linalg.svd(system.A, compute_uv=False)
    rcond = 0.0 if s[0] == 0.0 else float(s[-1] / s[0])
    if rcond < RCOND_THRESHOLD:
        raise SingularMatrixError(
            f"A is singular or near-singular (rcond {rcond:.2e} < {RCOND_THRESHOLD:g})")
    return system
