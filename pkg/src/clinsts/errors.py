"""Exception types shared across the toolkit.

Input problems derive from ``InputError`` (CLI exit code 2); contract and
numerical problems derive from ``ComputationError`` (exit code 3).
"""


class ClinStsError(Exception):
    """Base class for all toolkit errors."""


class InputError(ClinStsError):
    """Bad or unreadable input data."""


class ParseError(InputError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class ModelFormatError(ParseError):
    """Model file is truncated, corrupt, or of an unsupported version."""


VersionMismatch = ModelFormatError


class ComputationError(ClinStsError):
    """A numerical or contract failure during computation."""


class DimensionMismatch(ComputationError, ValueError):
    pass


class SizeMismatch(ComputationError, ValueError):
    pass


class EmptyCorpus(ComputationError, ValueError):
    pass


class EmptyInput(ComputationError, ValueError):
    pass


class EmptyBatch(ComputationError, ValueError):
    pass


class EmptyTrainingSet(ComputationError, ValueError):
    pass


class NonFiniteInput(ComputationError, ValueError):
    pass


class MissingGold(ComputationError, ValueError):
    pass


class RankDeficient(ComputationError, ValueError):
    pass


class DegenerateVariance(ComputationError, ValueError):
    pass
