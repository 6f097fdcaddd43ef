"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for all pipeline failures."""


class ValidationError(PipelineError):
    """Bad input data or configuration; maps to CLI exit code 1."""
