class LabError(Exception):
    """Base class for every error raised by wong_zakai_lab."""
    pass


class ParameterError(LabError, ValueError):
    """Raised when an argument is out of range or inconsistent with another."""
    pass


class DomainError(LabError, ValueError):
    """Raised when a state lies outside the admissible region of a model."""
    pass


class ModelError(ParameterError):
    """Raised for an unknown builtin model or invalid model parameters."""
    pass


class LyapunovError(LabError, ArithmeticError):
    """Raised when the quotient term of a Lyapunov functional is singular."""
    pass


class ConfigError(LabError):
    """Raised when a run configuration fails validation.

    Args:
      message (str): What went wrong.
      source (str): File the offending value came from, if any.
      line (int): 1-based line number inside ``source``, if known.
      column (int): 1-based column on that line, if known.
    """

    def __init__(self, message, source=None, line=None, column=None):
        self.source = source
        self.line = line
        self.column = column
        if source is not None and line is not None and column is not None:
            message = "%s:%d:%d: %s" % (source, line, column, message)
        elif source is not None and line is not None:
            message = "%s:%d: %s" % (source, line, message)
        elif source is not None:
            message = "%s: %s" % (source, message)
        super(ConfigError, self).__init__(message)
