"""Exception types shared across the library.

Each maps to one CLI exit code: InputError -> 2, CalibrationError -> 3.
Diagnostic failures (exit 4) are signalled by return value, not exception.
"""


class InputError(ValueError):
    """A market-data, config, or instrument file cannot be used as given.

    Carries enough context to point at the offending location.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)


class CalibrationError(ValueError):
    """A bootstrap could not reproduce the input quotes with valid pillars."""


class ConfigurationError(ValueError):
    """A request references curves, pairs, or quantities the model does not hold."""
