"""Exception and warning types raised across the package."""


class SmimuError(Exception):
    """Base class for all package errors."""


class ConfigError(SmimuError):
    """Invalid run or array configuration."""


class OddArraySize(ConfigError):
    pass


class UnpairedImu(ConfigError):
    pass


class InvalidProfile(ConfigError):
    pass


class TooFewImus(ConfigError):
    pass


class NumericalError(SmimuError):
    """A numerical solve could not be completed."""


class SingularNormalMatrix(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class SingularInnovation(NumericalError):
    pass


class EmptyInput(SmimuError, ValueError):
    pass


class DatasetError(SmimuError):
    pass


class MissingFile(DatasetError, FileNotFoundError):
    pass


class ClockGapExceeded(DatasetError):
    pass


class SchemaMismatch(DatasetError):
    pass


class NoOverlap(DatasetError):
    pass


class EmptyPairing(SmimuError, ValueError):
    pass


class MismatchedInputs(ConfigError):
    pass


class MixedGradeWarning(UserWarning):
    """Paired sensors have different noise levels; the symmetric transform is no
    longer decorrelating."""
