"""Exception hierarchy. CLI exit codes key off the two base classes."""


class ValidationError(ValueError):
    """Bad input: arguments, files or configuration (CLI exit code 2)."""


class ParseError(ValidationError):
    """Malformed input file."""


class ConfigError(ValidationError):
    """Malformed configuration or lookup table."""


class ExperimentError(RuntimeError):
    """An experiment ran but could not produce a result (CLI exit code 3)."""


class EvaluationError(ExperimentError):
    """A run yielded no metric, e.g. every frame was skipped."""


class DegenerateVarianceError(ExperimentError):
    """Model outputs have zero variance; sensitivity indices are undefined."""
