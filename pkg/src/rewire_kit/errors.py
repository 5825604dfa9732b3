"""Exception hierarchy shared across the toolkit."""


class RewireKitError(Exception):
    """Base class for all toolkit errors."""


class DataValidationError(RewireKitError):
    """Input data (CSV files or an assembled dataset) violates the schema."""


class ConfigError(RewireKitError):
    """A configuration object or file is invalid."""


class PipelineError(RewireKitError):
    """A pipeline stage failed; carries the stage name and the original cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
