# besselab/errors.py
# Error and warning types shared by the analysis services and the CLI.


class NumericFailure(RuntimeError):
    """A computation produced non-finite values."""


class AliasingWarning(UserWarning):
    """Weighted spectral energy reaches the outer frequency shell of the grid."""
