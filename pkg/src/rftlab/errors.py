"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/validation problems exit 1,
invariant violations exit 2, I/O problems exit 3.
"""


class LabelError(ValueError):
    """A vertex label is outside [1, n] or otherwise invalid for the operation."""


class ModelError(ValueError):
    """A model specification violates its parameter constraints."""


class PlanError(ValueError):
    """An experiment plan file or value is malformed; message carries field/line context."""


class FitError(ValueError):
    """Regression input is unusable (non-positive counts or too few points)."""


class InvariantViolation(RuntimeError):
    """An exact per-tree inequality failed: this signals an implementation bug."""


class CouplingInvariantError(InvariantViolation):
    """A coupled-pair guarantee failed; never tolerated."""
