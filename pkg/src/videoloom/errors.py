"""Exception hierarchy shared across the toolkit."""


class VideoloomError(Exception):
    """Base class for all toolkit errors."""


class RecordError(VideoloomError):
    """A domain record violates one of its invariants.

    Carries the offending field name so stream parsers can attach line
    context without re-parsing the message.
    """

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class ConfigError(VideoloomError):
    """A configuration file or override is invalid."""


class PipelineError(VideoloomError):
    """A pipeline stage failed; message names the stage and item."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
