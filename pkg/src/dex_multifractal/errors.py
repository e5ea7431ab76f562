"""
Exception types for dex-multifractal.

Two families, matching the CLI exit codes:
- ValidationError: the input or a parameter is wrong (exit code 1)
- AnalysisError: the numbers did not cooperate (exit code 2)
"""


class ValidationError(ValueError):
    """Input data or parameters violate a precondition."""


class AnalysisError(RuntimeError):
    """A numerical procedure failed on otherwise valid input."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage
