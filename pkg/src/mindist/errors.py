"""Exception hierarchy shared by all modules.

The CLI maps each family onto an exit status: parameter/configuration
problems exit with 1, data problems with 2, numerical failures with 3.
"""


class MindistError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class ParameterError(MindistError, ValueError):
    """An argument is outside its accepted domain."""

    exit_code = 1


class GridIndexError(ParameterError, IndexError):
    """A (k, j) or flat grid index lies outside the grid."""


class DataError(MindistError):
    exit_code = 2


class DegenerateDataError(DataError, ValueError):
    """A dataset is too small or has zero spread."""


class ParseError(DataError, ValueError):
    """A velocity file line could not be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ManifestError(DataError):
    """A manifest is incomplete, duplicated or points at missing files."""


class NumericalError(MindistError, ArithmeticError):
    exit_code = 3
