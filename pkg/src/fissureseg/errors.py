"""Exception types shared across the package."""


class FissureSegError(Exception):
    """Base class for all package errors."""


class InputError(FissureSegError):
    """Bad user input: missing files, malformed headers, mismatched geometry."""


class StageError(FissureSegError):
    """A pipeline stage failed internally."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
