"""Exception hierarchy shared across the pipeline."""


class FundwatchError(Exception):
    """Base class for all errors raised by this package."""


class InputError(FundwatchError):
    """Unreadable or structurally invalid input (bad file, bad header, bad flag value)."""


class ConfigurationError(FundwatchError):
    """A configuration that cannot be satisfied (e.g. more clusters than distinct points)."""


class TrainingError(FundwatchError):
    """Training cannot proceed or was aborted (empty positive set, non-finite loss)."""


class RequestError(FundwatchError):
    """A well-formed but unserviceable request (bad cluster index, granularity mismatch)."""


class NotFoundError(FundwatchError):
    """Referenced run, case, customer or fund does not exist."""


class StageError(FundwatchError):
    """A batch-run stage failed; carries the stage name for diagnosis."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage


class StoreBusyError(FundwatchError):
    """The run store's writer lock is held by another operation."""
