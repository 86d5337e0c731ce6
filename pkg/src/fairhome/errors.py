"""Exception types shared across the package."""


class SchemaError(ValueError):
    """Schema is internally inconsistent or does not match the data file."""


class DataError(ValueError):
    """A data file violates the declared schema (bad cells, bad labels)."""


class TrainingError(ValueError):
    """Training preconditions are violated (e.g. single-class data)."""


class UsageError(ValueError):
    """An operation was called with incompatible or out-of-range arguments."""


class ShapeError(ValueError):
    """An instance does not match the shape the classifier was trained on."""


class MetricUndefinedError(ValueError):
    """Too few eligible groups to evaluate a fairness metric.

    Carries the per-subgroup exclusion reasons so callers can report why.
    """

    def __init__(self, message, exclusions=()):
        super().__init__(message)
        self.exclusions = tuple(exclusions)
