"""Exception hierarchy shared across the pipeline.

Exit-code mapping lives in the CLI: ConfigError -> 2, DataError -> 3,
anything else -> 4.
"""


class ViewfuseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ViewfuseError):
    """Invalid configuration: bad parameter values, malformed config files."""


class DataError(ViewfuseError):
    """Invalid input data: malformed records, dangling references."""


class StageFailure(ViewfuseError):
    """A pipeline stage aborted; wraps the original cause with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
