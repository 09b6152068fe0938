"""Exception hierarchy shared by services, repositories and the CLI.

Every error carries the process exit code the CLI returns for it:

- 1: unexpected failure (`QKLError` base)
- 3: `SchemaError` (input columns or document layout)
- 4: `InputValidationError` and subclasses (violated preconditions)
- 5: `ConvergenceError` (strict SMO convergence)
- 6: `DataIOError` (missing or unwritable files)
"""


class QKLError(Exception):
    exit_code = 1


class SchemaError(QKLError):
    exit_code = 3

    def __init__(self, message: str, missing: list[str] | None = None) -> None:
        super().__init__(message)
        self.missing = list(missing or [])


class InputValidationError(QKLError, ValueError):
    exit_code = 4


class CapacityError(InputValidationError):
    pass


class QubitIndexError(InputValidationError, IndexError):
    pass


class DimensionMismatchError(InputValidationError):
    pass


class EncodingDomainError(InputValidationError):
    pass


class SingleClassError(InputValidationError):
    pass


class NonPositiveParallaxError(InputValidationError):
    pass


class UnknownLabelError(InputValidationError):
    pass


class ConvergenceError(QKLError):
    exit_code = 5


class DataIOError(QKLError):
    exit_code = 6
