"""Exception hierarchy shared by every module."""


class CsbmError(Exception):
    """Base class for all package errors."""


class ValidationError(CsbmError, ValueError):
    """Input data or configuration violates a documented contract."""


class ParameterDomainError(ValidationError):
    """A parameter lies outside the domain of its exponential family."""


class ParseError(ValidationError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}"
            if line is not None:
                loc += f":{line}"
            loc += ": "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class EmptyBlockError(ValidationError):
    def __init__(self, block):
        super().__init__(f"block {block} is empty")
        self.block = block


class InstanceTooLargeError(ValidationError):
    pass


class NumericError(CsbmError, ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""
