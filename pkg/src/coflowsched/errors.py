"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration (bad probabilities, unknown scheduler, ...)."""


class ParseError(ValueError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SizeLimitError(RuntimeError):
    """Instance too large for an exhaustive oracle."""
