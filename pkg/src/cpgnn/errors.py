"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: InputError -> 1, TrainingError -> 2,
VerificationError -> 3.
"""


class CpgnnError(Exception):
    """Base class for all package errors."""


class InputError(CpgnnError):
    """Malformed user input: bad files, invalid configs, out-of-range values."""


class ShapeError(CpgnnError):
    """Operands with incompatible shapes."""

    def __init__(self, op: str, *shapes):
        super().__init__(f"{op}: incompatible shapes {' vs '.join(str(s) for s in shapes)}")


class GenerationError(CpgnnError):
    """Synthetic graph generation could not proceed."""


class ConvergenceError(CpgnnError):
    """An iterative routine failed to reach its tolerance."""


class TrainingError(CpgnnError):
    """Training diverged or could not be set up."""


class VerificationError(CpgnnError):
    """An executable verification check did not hold."""
