"""Exception hierarchy and CLI exit codes."""

EXIT_OK = 0
EXIT_INPUT = 3
EXIT_CONFIG = 4
EXIT_NUMERIC = 5


class HetPanelError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(HetPanelError, ValueError):
    exit_code = EXIT_INPUT


class InvalidInput(InputError):
    pass


class InvalidLag(InputError):
    pass


class PanelTooShort(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class UnbalancedPanel(InputError):
    def __init__(self, message, units=()):
        super().__init__(message)
        self.units = list(units)


class DuplicateKey(InputError):
    pass


class ConfigError(HetPanelError, ValueError):
    exit_code = EXIT_CONFIG


class NumericalError(HetPanelError, ArithmeticError):
    exit_code = EXIT_NUMERIC


class DegenerateVariance(NumericalError):
    pass


class InsufficientUnits(NumericalError):
    pass
