"""Exception hierarchy. The CLI maps each class onto an exit code."""


class TopoPruneError(Exception):
    """Base class for all package errors."""


class DatasetError(TopoPruneError, ValueError):
    """Input data failed validation (bad CSV, NaNs, ragged series, ...)."""


class DegenerateStateError(TopoPruneError):
    """The pipeline reached a state with no usable output, e.g. every variable pruned."""


class OutputError(TopoPruneError, OSError):
    """Writing results to disk failed."""
