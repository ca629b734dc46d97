"""Exception hierarchy shared by all pipeline stages."""


class JobmarketError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(JobmarketError):
    """Bad or missing configuration (CLI exit code 2)."""


class DataError(JobmarketError):
    """Unusable input data (CLI exit code 3)."""


class StageError(JobmarketError):
    """A pipeline stage failed mid-run (CLI exit code 4)."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
