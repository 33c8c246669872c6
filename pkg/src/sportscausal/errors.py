"""Exception hierarchy shared across the package.

Two roots: :class:`ValidationError` for rejected inputs (CLI exit code 2)
and :class:`NumericalError` for computations that degenerate at runtime
(CLI exit code 3).
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or schema."""


class NumericalError(RuntimeError):
    """A numerically degenerate state was reached during estimation."""


# --- panel ingestion -------------------------------------------------------

class InvalidPanelError(ValidationError):
    """Panel-level invariant violated (e.g. no control subjects)."""


class MissingCellError(ValidationError):
    """A subject lacks an observation for some time point."""


class DuplicateCellError(ValidationError):
    """The same (unit_id, t) cell appears more than once."""


class InconsistentTreatmentError(ValidationError):
    """A unit_id appears with both d=0 and d=1."""


class BadT0Error(ValidationError):
    """t0 does not leave at least one pre and one post period."""


class FeatureMismatchError(ValidationError):
    """Features file does not line up with the units in the outcomes file."""


# --- time series -----------------------------------------------------------

class SeriesTooShortError(ValidationError):
    """Series too short for the requested model order."""


class HistoryTooShortError(ValidationError):
    """Forecast history shorter than the model order."""


class DegenerateSeriesError(NumericalError):
    """Rank-deficient design, e.g. a constant series with lags."""


class NonFiniteInputError(ValidationError):
    """NaN or infinity in a numeric input."""


class AllVariancesZeroError(ValidationError):
    """State-space model with every variance set to zero."""


class OptimFailedError(NumericalError):
    """Likelihood optimization found no finite optimum."""


class MissingRegressorError(ValidationError):
    """Model uses a regression term but no regressor series was given."""


# --- matching --------------------------------------------------------------

class SingularDesignError(NumericalError):
    """Singular information matrix in the propensity fit."""


class DimensionMismatchError(ValidationError):
    """Feature row length does not match the fitted model."""


# --- inference -------------------------------------------------------------

class RankDeficientError(NumericalError):
    """Design matrix without full column rank."""


class TooFewRowsError(ValidationError):
    """Fewer rows than columns (or than required) in a regression."""


class EmptyInputError(ValidationError):
    """An operation received an empty sequence."""


class LengthMismatchError(ValidationError):
    """Paired sequences of unequal length."""


# --- estimators ------------------------------------------------------------

class TooShortPrePeriodError(ValidationError):
    """Pre-treatment window too short for the requested model."""


class AllReplicatesFailedError(NumericalError):
    """Every bootstrap replicate degenerated; no estimate available."""


# --- simulation ------------------------------------------------------------

class InvalidConfigError(ValidationError):
    """Simulation config violates its invariants."""


class InvalidFractionError(ValidationError):
    """Treated fraction outside (0, 1) or incompatible with the panel size."""
