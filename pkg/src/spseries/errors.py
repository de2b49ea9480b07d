"""Exception hierarchy with stable machine-parseable error codes.

Every error raised by this package derives from :class:`SPSError` and
carries a ``code`` class attribute.  The CLI prints ``error <code>: <msg>``
on a single line and exits nonzero, so scripts can dispatch on the code
without parsing prose.
"""


class SPSError(Exception):
    """Base class for all package errors."""

    code = "error"


class MalformedInputError(SPSError):
    code = "malformed-input"


class UnknownKeyError(SPSError):
    code = "unknown-key"


class DimensionMismatchError(SPSError):
    code = "dimension-mismatch"


class NonFiniteEntryError(SPSError):
    code = "nonfinite-entry"


class SingularMatrixError(SPSError):
    code = "singular-matrix"


class MissingInitialStateError(SPSError):
    code = "missing-initial-state"


class ComplexSpectrumError(SPSError):
    """The linearization has a complex eigenvalue pair, which the method excludes."""

    code = "complex-spectrum"


class UnstableSpectrumError(SPSError):
    """An eigenvalue of the linearization is not strictly negative."""

    code = "unstable-spectrum"


class DegenerateSpectrumError(SPSError):
    """Repeated eigenvalue (or kernel dimension above one)."""

    code = "degenerate-spectrum"


class ResonanceError(SPSError):
    """An integer combination of eigenvalues vanishes (or hits an eigenvalue),
    making a coefficient solve singular."""

    code = "resonance"


class TruncationBudgetError(SPSError):
    code = "truncation-budget"


class MissingCoefficientError(SPSError):
    code = "missing-coefficient"


class CoefficientOverflowError(SPSError):
    """Coefficient magnitudes exceeded the floating-point safety limit."""

    code = "coefficient-overflow"


class EvaluationOverflowError(SPSError):
    """A series exponent would overflow binary64 (t far below zero, or a pole)."""

    code = "evaluate-overflow"


class FitConvergenceError(SPSError):
    code = "fit-failure"


class TailWindowError(SPSError):
    """Tail-limit estimator did not stabilize over the sample window."""

    code = "tail-window"


class OracleDivergenceError(SPSError):
    code = "oracle-divergence"


class GammaSolveError(SPSError):
    """No acceptable transient-correction factors found for the reduced model."""

    code = "reduction-failure"
