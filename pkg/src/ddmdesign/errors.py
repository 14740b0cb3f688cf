"""Exception types shared across the package.

The hierarchy mirrors the three failure domains the command-line tool maps to
distinct exit codes: argument/validation problems (exit 2), numerical or
algorithmic failures (exit 3), and external file-format problems (exit 4).
"""


class DDMDesignError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(DDMDesignError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedDesignError(DDMDesignError, ValueError):
    """A design was asked for a configuration it cannot honor, e.g.
    heterogeneous treatment probabilities for complete randomization."""


class InvalidWitnessError(DDMDesignError, ValueError):
    """A claimed set-splitting witness does not split every set."""


class NumericalError(DDMDesignError, RuntimeError):
    """Base class for failures inside the numerical algorithms."""


class DegenerateStateError(NumericalError):
    """A walk reached a state with no admissible update direction."""


class StalledWalkError(NumericalError):
    """Both feasible step lengths collapsed to ~0, so the walk cannot move."""


class RunawayWalkError(NumericalError):
    """A walk exhausted its iteration budget without pinning every
    coordinate."""


class AcceptanceStallError(NumericalError):
    """Rerandomization exceeded its draw budget without an acceptable
    assignment."""


class FileFormatError(DDMDesignError, ValueError):
    """Base class for problems with the contents of an external file."""


class CsvParseError(FileFormatError):
    """A covariate CSV cell or row could not be parsed.

    Carries 1-based ``row`` and ``column`` coordinates when they are known.
    """

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class StandardizationError(FileFormatError):
    """A covariate column cannot be standardized (zero sample variance)."""
