"""Exception types raised across chronomap."""


class ChronomapError(Exception):
    """Base class for every error raised by this package."""


class ParseError(ChronomapError, ValueError):
    pass


class DuplicateKeyError(ChronomapError, ValueError):
    pass


class SchemaError(ChronomapError, ValueError):
    pass


class ValidationError(ChronomapError, ValueError):
    pass


class JoinError(ChronomapError, ValueError):
    pass


class ConfigError(ChronomapError, ValueError):
    pass


class DegenerateTableError(ChronomapError, ValueError):
    pass


class PipelineError(ChronomapError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
