"""Exception hierarchy shared by the library and the CLI"""
from typing import Optional


class FoiError(Exception):
    """Base class for every error raised by foiwatch"""


class ContractViolation(FoiError, ValueError):
    """A precondition of a library operation was not met"""


class DimensionMismatchError(ContractViolation):
    pass


class ZeroNormError(ContractViolation):
    pass


class NonFiniteError(ContractViolation):
    pass


class InvalidBoxError(ContractViolation):
    pass


class EmptyStoreError(ContractViolation):
    pass


class DuplicateIndexError(ContractViolation):
    pass


class UnknownLabelError(ContractViolation):
    pass


class FrameOrderError(ContractViolation):
    pass


class EmptyInputError(ContractViolation):
    pass


class InputError(FoiError, ValueError):
    """An external file or argument could not be understood"""


class ParseError(InputError):
    """A line of a JSONL input could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
