"""Exception hierarchy shared by every package.

Each class carries the process exit code the CLI returns when it escapes a command.
"""


class CoperError(Exception):
    exit_code = 1


class InvalidShape(CoperError, ValueError):
    exit_code = 10


class NotSymmetric(CoperError, ValueError):
    exit_code = 11


class EigenFailure(CoperError, RuntimeError):
    exit_code = 12


class NotPSD(CoperError, ValueError):
    exit_code = 13


class SingularCovariance(CoperError, RuntimeError):
    exit_code = 14


class SingularScatter(CoperError, RuntimeError):
    exit_code = 15


class InvalidSpec(CoperError, ValueError):
    exit_code = 20


class AlignmentError(CoperError, ValueError):
    exit_code = 21


class ParseError(CoperError, ValueError):
    exit_code = 22

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line


class InvalidLabels(CoperError, ValueError):
    exit_code = 30


class InvalidParameter(CoperError, ValueError):
    exit_code = 31


class InvalidPlan(CoperError, ValueError):
    exit_code = 32


class InvalidState(CoperError, RuntimeError):
    exit_code = 40


class ConfigError(CoperError, ValueError):
    exit_code = 41


class TrainingDiverged(CoperError, RuntimeError):
    exit_code = 42

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


def exit_code_table():
    "(name, code) rows for every error class, ordered by code"
    classes = [CoperError] + _subclasses(CoperError)
    return sorted({(c.__name__, c.exit_code) for c in classes}, key=lambda row: row[1])


def _subclasses(cls):
    out = []
    for sub in cls.__subclasses__():
        out.append(sub)
        out.extend(_subclasses(sub))
    return out
