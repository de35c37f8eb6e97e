"""Exception hierarchy shared by every module."""


class MclcError(Exception):
    """Base class for all library errors."""


class ParameterError(MclcError, ValueError):
    """An argument is outside its documented domain."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(MclcError, ValueError):
    """Input file content could not be parsed."""

    def __init__(self, message, line=None, offset=None):
        self.line = line
        self.offset = offset
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class FormatError(MclcError):
    """A container has a bad magic number or an unsupported version."""


class DecodeError(MclcError):
    """A bitstream is truncated, corrupted, or inconsistent with its header."""


class ConvergenceError(MclcError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")
